#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapmc/coalition.hpp"
#include "shapmc/dataset.hpp"
#include "shapmc/mc.hpp"
#include "shapmc/model.hpp"

namespace shapmc {

/// Random variate generators used by the synthetic experiments. All take the
/// library's counter-seeded Rng so generated datasets are reproducible.
namespace dist {

double uniform(Rng& rng, double lo, double hi);
/// Box-Muller. `sd` is the standard deviation.
double normal(Rng& rng, double mean, double sd);
/// Marsaglia-Tsang squeeze method; shape-scale parameterization.
double gamma(Rng& rng, double shape, double scale);
/// Ratio of gammas.
double beta(Rng& rng, double a, double b);

/// Lower-triangular Cholesky factor; throws std::invalid_argument if the
/// matrix is not symmetric positive definite.
std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& cov);
/// Multivariate normal draw with mean zero given the Cholesky factor.
void mvn(Rng& rng, const std::vector<std::vector<double>>& chol, std::span<double> out);

}  // namespace dist

enum class ExperimentMethod { Shapley, QuotientShapley, Owen, TwoStep };

std::string method_name(ExperimentMethod m);

struct ExperimentSpec {
    std::string id;  // 1a | 1b | 2a | 2b | 3a | 3b
    int p = 0;       // 0 = the experiment's default predictor count
    std::size_t dataset_size = 100;
    std::vector<std::uint64_t> k_grid = {512, 1024, 2048, 4096, 8192, 16384};
    int runs = 50;
    std::uint64_t seed = 1;
    bool allow_custom_p = false;

    /// Predictor counts used in the paper's variant of this experiment.
    static std::vector<int> allowed_p(const std::string& id);
};

struct ExperimentSetup {
    Dataset data;
    std::string model_text;
    ModelPtr model;
    Partition partition;
    ExperimentMethod method;
    int target;  // group index for QuotientShapley, feature index otherwise
};

/// Builds the background dataset, model, partition and estimation target for
/// one of the six experiments. Deterministic in (spec.id, spec.p, spec.seed,
/// spec.dataset_size).
ExperimentSetup gen_experiment(const ExperimentSpec& spec);

/// Mean over observations of the squared estimation error.
double mise(std::span<const double> exact, std::span<const double> estimates);
/// MISE normalized by the mean square of the exact values; throws if the
/// exact vector is all zero.
double rmise(std::span<const double> exact, std::span<const double> estimates);

/// OLS slope of log2(value) against log2(k); throws on non-positive values
/// or fewer than two distinct k.
double fit_loglog_slope(std::span<const std::uint64_t> ks, std::span<const double> values);

struct ConvergenceRow {
    std::uint64_t k = 0;
    int run = 0;
    double mise = 0.0;
    double rmise = 0.0;
    double seconds = 0.0;
};

struct ConvergenceSummaryRow {
    std::uint64_t k = 0;
    double mean_mise = 0.0, ci_mise = 0.0;     // mean +- ci over runs
    double mean_rmise = 0.0, ci_rmise = 0.0;
    double mean_stderr2 = 0.0;                 // mean per-observation stderr^2
};

struct ConvergenceResult {
    ExperimentSpec spec;
    std::string method;
    int target = 0;
    int p = 0;
    std::vector<double> exact;  // exact target value at each observation
    std::vector<ConvergenceRow> rows;
    std::vector<ConvergenceSummaryRow> summary;
    double slope_mise = 0.0;
    double slope_rmise = 0.0;
};

/// Exact target value at every observation of the background dataset (each
/// row of D explained against D itself).
std::vector<double> exact_target_per_observation(const ExperimentSetup& setup);

/// One MC estimate of the setup's target at observation `obs`.
Estimate mc_target_single(const ExperimentSetup& setup, std::size_t obs,
                          const SamplerMode& mode, std::uint64_t seed,
                          std::uint64_t replicate);

/// The full convergence protocol: for every K in the grid and every run,
/// estimate the target at each observation, then aggregate MISE/RMISE with
/// normal-approximation 95% confidence intervals and a log-log slope fit.
ConvergenceResult run_convergence(const ExperimentSpec& spec);

void write_convergence_csv(const ConvergenceResult& result, const std::string& path);
void write_summary_json(const ConvergenceResult& result, const std::string& path);

}  // namespace shapmc
