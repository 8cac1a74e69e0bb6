#pragma once

#include <string>
#include <vector>

namespace shapmc {

enum class WeightKind { Shapley, Banzhaf, ExplicitTable };

/// The coefficient family w_i(S,N) of a linear game value, required to be a
/// probability measure over subsets S of N\{i}: all weights nonnegative and,
/// for every i, sum_{S subseteq N\{i}} w_i(S,N) = 1.
///
/// Shapley and Banzhaf weights depend only on |S| and are computed on demand.
/// An explicit table stores one weight per coalition size (subsets of equal
/// size share the weight) and is limited to small ground sets.
class WeightScheme {
  public:
    static WeightScheme shapley() { return WeightScheme(WeightKind::Shapley); }
    static WeightScheme banzhaf() { return WeightScheme(WeightKind::Banzhaf); }

    /// by_size[s] is the weight of every coalition of size s, s in [0, n-1].
    /// Validated against the normalization sum_{s} C(n-1,s) * by_size[s] = 1.
    static WeightScheme explicit_by_size(std::vector<double> by_size, int n);

    WeightKind kind() const { return kind_; }
    std::string name() const;

    /// w_i(S,N) for |S| = s and |N| = n. Requires 0 <= s <= n-1.
    double weight(int s, int n) const;

    /// max over S of w_i(S,N), the paper's w-bar term in the variance bound.
    double max_weight(int n) const;

    /// Ground-set size an explicit table was built for (0 for built-ins).
    int table_n() const { return table_n_; }
    const std::vector<double>& table() const { return by_size_; }

  private:
    explicit WeightScheme(WeightKind k) : kind_(k) {}

    WeightKind kind_;
    std::vector<double> by_size_;
    int table_n_ = 0;
};

/// Exact binomial coefficient as a double (exact for n <= 20).
double binomial(int n, int k);

/// The two nested weight families of a coalitional value: the outer one over
/// group coalitions A subseteq M\{j}, the inner one over within-group
/// coalitions T subseteq S_j\{i}.
struct CoalitionalWeightScheme {
    WeightScheme outer;
    WeightScheme inner;

    static CoalitionalWeightScheme owen() {
        return {WeightScheme::shapley(), WeightScheme::shapley()};
    }
    static CoalitionalWeightScheme banzhaf_owen() {
        return {WeightScheme::banzhaf(), WeightScheme::banzhaf()};
    }
};

}  // namespace shapmc
