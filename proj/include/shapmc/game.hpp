#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shapmc/coalition.hpp"
#include "shapmc/dataset.hpp"
#include "shapmc/model.hpp"
#include "shapmc/weights.hpp"

namespace shapmc {

/// Per-feature (or per-group) attribution values plus a tag identifying what
/// was computed and how.
struct Attribution {
    std::vector<double> values;
    std::string kind;  // e.g. "shapley", "owen", "two-step"
    std::string mode;  // "exact" or "mc"
};

/// Writes (x*_S, x_{-S}) into out: coordinate i comes from x_star when i is
/// in S, otherwise from x.
void compose_into(std::span<const double> x_star, std::span<const double> x, Coalition s,
                  std::span<double> out);
std::vector<double> compose(std::span<const double> x_star, std::span<const double> x,
                            Coalition s);

/// The empirical marginal game: (1/|D|) * sum over rows x' of f(x*_S, x'_{-S}).
double empirical_marginal_game(const Model& f, const Dataset& d,
                               std::span<const double> x_star, Coalition s);

/// Memoized empirical-marginal-game evaluations for one (f, D, x*), keyed by
/// coalition bitmask. Dense table for small n, hash map otherwise. Lazy
/// lookups are single-threaded; fill_all() computes the full 2^n table with
/// OpenMP and slots pre-assigned by mask, so results are thread-count
/// independent.
class GameTable {
  public:
    GameTable(const Model& f, const Dataset& d, std::span<const double> x_star);

    double value(Coalition s) { return value(s.bits); }
    double value(std::uint64_t mask);

    /// Pre-computes every subset of {0,...,n-1}; requires n <= 26.
    void fill_all();

    std::size_t evaluations() const { return game_evals_; }

  private:
    double compute(std::uint64_t mask, std::vector<double>& buffer) const;

    const Model& f_;
    const Dataset& d_;
    std::vector<double> x_star_;
    int n_;
    bool dense_;
    std::vector<double> table_;                          // dense, NaN = unset
    std::unordered_map<std::uint64_t, double> cache_;    // sparse
    std::vector<double> scratch_;
    std::size_t game_evals_ = 0;
};

inline constexpr int kDefaultExactLimit = 20;

/// Exact linear game value by full 2^n enumeration; refuses n above `limit`.
Attribution exact_linear_value(const Model& f, const Dataset& d,
                               std::span<const double> x_star, const WeightScheme& scheme,
                               int limit = kDefaultExactLimit);
double exact_linear_single(GameTable& game, int n, const WeightScheme& scheme, int i);

/// Exact quotient game value h_j over groups, length m.
Attribution exact_quotient_value(const Model& f, const Dataset& d,
                                 std::span<const double> x_star, const Partition& partition,
                                 const WeightScheme& scheme, int limit = kDefaultExactLimit);
double exact_quotient_single(GameTable& game, const Partition& partition,
                             const WeightScheme& scheme, int j);

/// Exact coalitional value (Owen, Banzhaf-Owen, or custom nested weights),
/// length n. Requires m <= limit and max group size <= limit.
Attribution exact_coalitional_value(const Model& f, const Dataset& d,
                                    std::span<const double> x_star, const Partition& partition,
                                    const CoalitionalWeightScheme& cw,
                                    int limit = kDefaultExactLimit);
double exact_coalitional_single(GameTable& game, const Partition& partition,
                                const CoalitionalWeightScheme& cw, int i);

/// Exact two-step Shapley, length n:
///   TSh_i = phi_i[S_j, v] + (1/|S_j|) * (phi_j[M, v^P] - v(S_j)),  i in S_j,
/// where the restricted game ranges over subsets of S_j only.
Attribution exact_two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                           const Partition& partition, int limit = kDefaultExactLimit);
double exact_two_step_single(GameTable& game, const Partition& partition, int i);

}  // namespace shapmc
