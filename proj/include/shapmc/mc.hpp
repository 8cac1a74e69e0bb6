#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "shapmc/coalition.hpp"
#include "shapmc/dataset.hpp"
#include "shapmc/estimate.hpp"
#include "shapmc/game.hpp"
#include "shapmc/model.hpp"
#include "shapmc/weights.hpp"

namespace shapmc {

/// Identifies an independent random stream. Estimation tasks get one stream
/// per (feature-or-group index, replicate), so per-feature estimates are
/// reproducible and independent of how tasks are scheduled across threads.
struct StreamId {
    std::uint64_t index = 0;
    std::uint64_t replicate = 0;
};

/// Seeded random stream; identical (seed, stream id) yields an identical
/// sequence. Streams are derived by splitmix64 mixing of seed and id.
class Rng {
  public:
    Rng(std::uint64_t seed, StreamId id);

    std::uint64_t u64() { return engine_(); }
    /// Uniform in [0,1) with 53 random bits.
    double unif01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n). Unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n);

  private:
    std::mt19937_64 engine_;
};

/// How the observation stream is produced.
///   TrueMarginal:      one ordered pass over the background dataset, K = |D|.
///   EmpiricalMarginal: `iterations` draws, rows uniform with replacement.
/// forced_rows is a test hook overriding row selection without consuming
/// random draws (used to verify mode consistency).
struct SamplerMode {
    bool empirical = true;
    std::uint64_t iterations = 1024;
    const std::vector<std::size_t>* forced_rows = nullptr;

    static SamplerMode true_marginal() { return {false, 0, nullptr}; }
    static SamplerMode empirical_marginal(std::uint64_t k) { return {true, k, nullptr}; }
};

/// Fisher-Yates shuffle of perm in place.
void random_permutation(std::span<int> perm, Rng& rng);

/// The coalition of players preceding i in the permutation (the paper's
/// permutation-based Shapley coalition draw). Exposed separately so tests can
/// enumerate all permutations.
Coalition coalition_preceding(std::span<const int> perm, int i, int n);

/// Draws S subseteq N\{i} with P(S) = |S|!(n-|S|-1)!/n! via a uniform random
/// permutation.
Coalition sample_coalition_permutation(int i, int n, Rng& rng);
/// Each player != i included independently with probability 1/2.
Coalition sample_coalition_bernoulli(int i, int n, Rng& rng);
/// Inverse-CDF draw for an explicit size-based table: first draws the size
/// from the induced distribution, then a uniform subset of that size.
Coalition sample_coalition_table(const WeightScheme& scheme, int i, int n, Rng& rng);
/// Dispatch on the scheme kind.
Coalition sample_coalition(const WeightScheme& scheme, int i, int n, Rng& rng);

/// Within-group variants: draw T subseteq group\{i} treating the group's
/// members as the ground set.
Coalition sample_subcoalition_permutation(Coalition group, int i, Rng& rng);
Coalition sample_subcoalition_bernoulli(Coalition group, int i, Rng& rng);
Coalition sample_subcoalition(const WeightScheme& scheme, Coalition group, int i, Rng& rng);

struct McResult {
    std::vector<double> values;
    std::vector<Estimate> estimates;
};

/// Monte Carlo estimate of one linear game value component h_i: averages
/// Delta_i(S,x) = f(x*_{S+i}, x_{-(S+i)}) - f(x*_S, x_{-S}) over draws.
Estimate mc_linear_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                          const WeightScheme& scheme, const SamplerMode& mode,
                          std::uint64_t seed, std::uint64_t replicate, int i);
McResult mc_linear_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                         const WeightScheme& scheme, const SamplerMode& mode,
                         std::uint64_t seed, std::uint64_t replicate = 0);

Estimate mc_quotient_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                            const Partition& partition, const WeightScheme& scheme,
                            const SamplerMode& mode, std::uint64_t seed,
                            std::uint64_t replicate, int j);
McResult mc_quotient_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                           const Partition& partition, const WeightScheme& scheme,
                           const SamplerMode& mode, std::uint64_t seed,
                           std::uint64_t replicate = 0);

Estimate mc_coalitional_single(const Model& f, const Dataset& d,
                               std::span<const double> x_star, const Partition& partition,
                               const CoalitionalWeightScheme& cw, const SamplerMode& mode,
                               std::uint64_t seed, std::uint64_t replicate, int i);
McResult mc_coalitional_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                              const Partition& partition, const CoalitionalWeightScheme& cw,
                              const SamplerMode& mode, std::uint64_t seed,
                              std::uint64_t replicate = 0);

Estimate mc_two_step_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                            const Partition& partition, const SamplerMode& mode,
                            std::uint64_t seed, std::uint64_t replicate, int i);
McResult mc_two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                     const Partition& partition, const SamplerMode& mode, std::uint64_t seed,
                     std::uint64_t replicate = 0);

/// Checks the single-draw variance bound Var(Delta_i) <= 4 * wbar * nu2 under
/// the empirical measure, by exhaustive enumeration of (S, row). n <= 12.
struct VarianceBound {
    double variance;
    double bound;
    bool holds() const { return variance <= bound * (1.0 + 1e-12); }
};
VarianceBound variance_bound_check(const Model& f, const Dataset& d,
                                   std::span<const double> x_star, const WeightScheme& scheme,
                                   int i);

}  // namespace shapmc
