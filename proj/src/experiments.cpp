#include "shapmc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shapmc/game.hpp"

namespace shapmc {

namespace dist {

double uniform(Rng& rng, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform: requires lo < hi");
    return lo + (hi - lo) * rng.unif01();
}

double normal(Rng& rng, double mean, double sd) {
    if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be positive");
    const double u1 = 1.0 - rng.unif01();  // (0,1], keeps log finite
    const double u2 = rng.unif01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sd * z;
}

double gamma(Rng& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back (Marsaglia-Tsang section 6).
        const double u = 1.0 - rng.unif01();
        return gamma(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = normal(rng, 0.0, 1.0);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - rng.unif01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

double beta(Rng& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta: shapes must be positive");
    const double x = gamma(rng, a, 1.0);
    const double y = gamma(rng, b, 1.0);
    return x / (x + y);
}

std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& cov) {
    const std::size_t n = cov.size();
    for (const auto& row : cov)
        if (row.size() != n) throw std::invalid_argument("cholesky: matrix not square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(cov[i][j] - cov[j][i]) > 1e-12)
                throw std::invalid_argument("cholesky: matrix not symmetric");
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = cov[i][j];
            for (std::size_t k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
            if (i == j) {
                if (sum <= 0.0)
                    throw std::invalid_argument("cholesky: matrix not positive definite");
                l[i][i] = std::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    return l;
}

void mvn(Rng& rng, const std::vector<std::vector<double>>& chol, std::span<double> out) {
    const std::size_t n = chol.size();
    if (out.size() != n) throw std::invalid_argument("mvn: output length mismatch");
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = normal(rng, 0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += chol[i][k] * z[k];
        out[i] = s;
    }
}

}  // namespace dist

std::string method_name(ExperimentMethod m) {
    switch (m) {
        case ExperimentMethod::Shapley: return "shapley";
        case ExperimentMethod::QuotientShapley: return "quotient-shapley";
        case ExperimentMethod::Owen: return "owen";
        case ExperimentMethod::TwoStep: return "two-step";
    }
    throw std::logic_error("method_name: unreachable");
}

std::vector<int> ExperimentSpec::allowed_p(const std::string& id) {
    if (id == "1a") return {4};
    if (id == "1b") return {4, 5, 10, 16};
    if (id == "2a" || id == "3a") return {6};
    if (id == "2b" || id == "3b") return {6, 10, 14, 18};
    throw std::invalid_argument("unknown experiment id '" + id + "'");
}

namespace {

// The rng stream used for data generation, separated from the estimation
// streams (which are keyed by feature index).
constexpr std::uint64_t kDataStream = 0x6461746173657400ull;

std::string logistic_core() {
    return "-3*(x1 - 5) + 0.2*(x2 - 15) - 2*(x3 - 2/7) - 5*x4";
}

std::string logistic_model(const std::string& tail) {
    return "sqrt(6) / (1 + exp(" + logistic_core() + tail + "))";
}

std::string plain_tail(int p) {
    std::string tail;
    for (int l = 5; l <= p; ++l) tail += " + x" + std::to_string(l);
    return tail;
}

// Draws the shared X1..X4 block: Normal(5,1), Gamma(3,|X1|), Beta(2,5),
// Uniform(-1,1).
void base_predictors(Rng& rng, std::span<double> row) {
    row[0] = dist::normal(rng, 5.0, 1.0);
    row[1] = dist::gamma(rng, 3.0, std::abs(row[0]));
    row[2] = dist::beta(rng, 2.0, 5.0);
    row[3] = dist::uniform(rng, -1.0, 1.0);
}

int resolve_p(const ExperimentSpec& spec) {
    const std::vector<int> allowed = ExperimentSpec::allowed_p(spec.id);
    if (spec.p == 0) return allowed.front();
    if (!spec.allow_custom_p &&
        std::find(allowed.begin(), allowed.end(), spec.p) == allowed.end()) {
        std::string msg = "experiment " + spec.id + ": p = " + std::to_string(spec.p) +
                          " is not one of the protocol values {";
        for (std::size_t i = 0; i < allowed.size(); ++i)
            msg += (i ? "," : "") + std::to_string(allowed[i]);
        throw std::invalid_argument(msg + "}");
    }
    return spec.p;
}

Partition tail_partition(int p) {
    std::vector<int> tail;
    for (int l = 4; l < p; ++l) tail.push_back(l);
    return Partition::from_groups(p, {{0, 1}, {2}, {3}, tail});
}

}  // namespace

ExperimentSetup gen_experiment(const ExperimentSpec& spec) {
    const int p = resolve_p(spec);
    Rng rng(spec.seed, {kDataStream, 0});

    std::vector<std::vector<double>> rows(spec.dataset_size,
                                          std::vector<double>(static_cast<std::size_t>(p)));
    std::string model_text;
    Partition partition = Partition::singletons(p);
    ExperimentMethod method = ExperimentMethod::Shapley;
    int target = 0;

    if (spec.id == "1a") {
        for (auto& row : rows) base_predictors(rng, row);
        model_text = logistic_model("");
        partition = Partition::from_groups(4, {{0, 1}, {2}, {3}});
        method = ExperimentMethod::QuotientShapley;
        target = 0;  // group S_1 = {X1, X2}
    } else if (spec.id == "1b") {
        for (auto& row : rows) {
            base_predictors(rng, row);
            for (int l = 4; l < p; ++l)
                row[static_cast<std::size_t>(l)] = dist::normal(rng, 0.0, std::sqrt(3.0));
        }
        model_text = logistic_model(plain_tail(p));
        method = ExperimentMethod::Shapley;
        target = 0;  // X1
    } else if (spec.id == "2a" || spec.id == "3a") {
        for (auto& row : rows) {
            base_predictors(rng, row);
            const double x4 = row[3];
            row[4] = std::exp(x4) + dist::normal(rng, 0.0, 0.1);
            row[5] = x4 * x4 * std::sin(std::numbers::pi * x4) + dist::normal(rng, 0.0, 0.05);
        }
        model_text = logistic_model(" + x5 - 0.5*(pi - 1/pi) - x6");
        partition = Partition::from_groups(6, {{0, 1}, {2}, {3, 4, 5}});
        method = spec.id == "2a" ? ExperimentMethod::Owen : ExperimentMethod::TwoStep;
        target = 3;  // X4
    } else if (spec.id == "2b" || spec.id == "3b") {
        const std::size_t tail_dim = static_cast<std::size_t>(p - 4);
        std::vector<std::vector<double>> cov(tail_dim, std::vector<double>(tail_dim, 0.1));
        for (std::size_t i = 0; i < tail_dim; ++i) cov[i][i] = 3.0;
        const auto chol = dist::cholesky(cov);
        for (auto& row : rows) {
            base_predictors(rng, row);
            dist::mvn(rng, chol, std::span<double>(row).subspan(4));
        }
        model_text = logistic_model(plain_tail(p));
        partition = tail_partition(p);
        method = spec.id == "2b" ? ExperimentMethod::Owen : ExperimentMethod::TwoStep;
        target = 4;  // X5
    } else {
        throw std::invalid_argument("unknown experiment id '" + spec.id + "'");
    }

    std::vector<std::string> names;
    for (int l = 1; l <= p; ++l) names.push_back("x" + std::to_string(l));
    ExperimentSetup setup{Dataset::from_rows(std::move(names), rows),
                          model_text,
                          ExpressionModel::parse(model_text, p),
                          std::move(partition),
                          method,
                          target};
    return setup;
}

double mise(std::span<const double> exact, std::span<const double> estimates) {
    if (exact.size() != estimates.size())
        throw std::invalid_argument("mise: length mismatch");
    if (exact.empty()) throw std::invalid_argument("mise: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double d = exact[i] - estimates[i];
        sum += d * d;
    }
    return sum / static_cast<double>(exact.size());
}

double rmise(std::span<const double> exact, std::span<const double> estimates) {
    double denom = 0.0;
    for (double v : exact) denom += v * v;
    denom /= static_cast<double>(exact.size());
    if (denom == 0.0)
        throw std::invalid_argument("rmise: exact values are all zero");
    return mise(exact, estimates) / denom;
}

double fit_loglog_slope(std::span<const std::uint64_t> ks, std::span<const double> values) {
    if (ks.size() != values.size())
        throw std::invalid_argument("fit_loglog_slope: length mismatch");
    if (ks.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (!(values[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: values must be positive");
        const double x = std::log2(static_cast<double>(ks[i]));
        const double y = std::log2(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12)
        throw std::invalid_argument("fit_loglog_slope: need >= 2 distinct k");
    return (n * sxy - sx * sy) / denom;
}

std::vector<double> exact_target_per_observation(const ExperimentSetup& setup) {
    const std::size_t obs_count = setup.data.rows();
    std::vector<double> out(obs_count);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(obs_count); ++o) {
        const auto x_star = setup.data.row(static_cast<std::size_t>(o));
        GameTable game(*setup.model, setup.data, x_star);
        double v = 0.0;
        switch (setup.method) {
            case ExperimentMethod::Shapley:
                v = exact_linear_single(game, setup.data.cols(), WeightScheme::shapley(),
                                        setup.target);
                break;
            case ExperimentMethod::QuotientShapley:
                v = exact_quotient_single(game, setup.partition, WeightScheme::shapley(),
                                          setup.target);
                break;
            case ExperimentMethod::Owen:
                v = exact_coalitional_single(game, setup.partition,
                                             CoalitionalWeightScheme::owen(), setup.target);
                break;
            case ExperimentMethod::TwoStep:
                v = exact_two_step_single(game, setup.partition, setup.target);
                break;
        }
        out[static_cast<std::size_t>(o)] = v;
    }
    return out;
}

Estimate mc_target_single(const ExperimentSetup& setup, std::size_t obs,
                          const SamplerMode& mode, std::uint64_t seed,
                          std::uint64_t replicate) {
    const auto x_star = setup.data.row(obs);
    switch (setup.method) {
        case ExperimentMethod::Shapley:
            return mc_linear_single(*setup.model, setup.data, x_star,
                                    WeightScheme::shapley(), mode, seed, replicate,
                                    setup.target);
        case ExperimentMethod::QuotientShapley:
            return mc_quotient_single(*setup.model, setup.data, x_star, setup.partition,
                                      WeightScheme::shapley(), mode, seed, replicate,
                                      setup.target);
        case ExperimentMethod::Owen:
            return mc_coalitional_single(*setup.model, setup.data, x_star, setup.partition,
                                         CoalitionalWeightScheme::owen(), mode, seed,
                                         replicate, setup.target);
        case ExperimentMethod::TwoStep:
            return mc_two_step_single(*setup.model, setup.data, x_star, setup.partition,
                                      mode, seed, replicate, setup.target);
    }
    throw std::logic_error("mc_target_single: unreachable");
}

ConvergenceResult run_convergence(const ExperimentSpec& spec) {
    if (spec.runs < 1) throw std::invalid_argument("run_convergence: runs must be >= 1");
    if (spec.k_grid.empty()) throw std::invalid_argument("run_convergence: empty K grid");

    ExperimentSetup setup = gen_experiment(spec);
    const std::size_t obs_count = setup.data.rows();

    ConvergenceResult result;
    result.spec = spec;
    result.method = method_name(setup.method);
    result.target = setup.target;
    result.p = setup.data.cols();
    result.exact = exact_target_per_observation(setup);

    const std::size_t runs = static_cast<std::size_t>(spec.runs);
    std::vector<double> estimates(obs_count);
    for (std::size_t kidx = 0; kidx < spec.k_grid.size(); ++kidx) {
        const std::uint64_t k = spec.k_grid[kidx];
        const SamplerMode mode = SamplerMode::empirical_marginal(k);
        Estimate mise_acc, rmise_acc, var_acc;
        for (std::size_t run = 0; run < runs; ++run) {
            const auto start = std::chrono::steady_clock::now();
            double stderr2_sum = 0.0;
            // One replicate id per (K, run, observation) keeps every
            // estimate on its own random stream.
            const std::uint64_t base = (kidx * runs + run) * obs_count;
#pragma omp parallel for schedule(dynamic) reduction(+ : stderr2_sum)
            for (std::int64_t o = 0; o < static_cast<std::int64_t>(obs_count); ++o) {
                Estimate e = mc_target_single(setup, static_cast<std::size_t>(o), mode,
                                              spec.seed, base + static_cast<std::uint64_t>(o));
                estimates[static_cast<std::size_t>(o)] = e.mean();
                const double se = e.stderr_of_mean();
                stderr2_sum += se * se;
            }
            const auto stop = std::chrono::steady_clock::now();

            ConvergenceRow row;
            row.k = k;
            row.run = static_cast<int>(run);
            row.mise = mise(result.exact, estimates);
            row.rmise = rmise(result.exact, estimates);
            row.seconds = std::chrono::duration<double>(stop - start).count();
            result.rows.push_back(row);

            mise_acc.update(row.mise);
            rmise_acc.update(row.rmise);
            var_acc.update(stderr2_sum / static_cast<double>(obs_count));
        }
        ConvergenceSummaryRow s;
        s.k = k;
        s.mean_mise = mise_acc.mean();
        s.ci_mise = 1.96 * mise_acc.stderr_of_mean();
        s.mean_rmise = rmise_acc.mean();
        s.ci_rmise = 1.96 * rmise_acc.stderr_of_mean();
        s.mean_stderr2 = var_acc.mean();
        result.summary.push_back(s);
    }

    std::vector<std::uint64_t> ks;
    std::vector<double> mean_mise, mean_rmise;
    for (const auto& s : result.summary) {
        ks.push_back(s.k);
        mean_mise.push_back(s.mean_mise);
        mean_rmise.push_back(s.mean_rmise);
    }
    if (ks.size() >= 2) {
        result.slope_mise = fit_loglog_slope(ks, mean_mise);
        result.slope_rmise = fit_loglog_slope(ks, mean_rmise);
    }
    return result;
}

void write_convergence_csv(const ConvergenceResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "experiment,target,k,run,mise,rmise,seconds\n";
    out.precision(12);
    for (const auto& row : result.rows)
        out << result.spec.id << ',' << result.target << ',' << row.k << ',' << row.run
            << ',' << row.mise << ',' << row.rmise << ',' << row.seconds << '\n';
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_summary_json(const ConvergenceResult& result, const std::string& path) {
    nlohmann::json j;
    j["experiment"] = result.spec.id;
    j["method"] = result.method;
    j["target"] = result.target;
    j["p"] = result.p;
    j["dataset_size"] = result.spec.dataset_size;
    j["runs"] = result.spec.runs;
    j["seed"] = result.spec.seed;
    auto& per_k = j["per_k"] = nlohmann::json::array();
    for (const auto& s : result.summary) {
        per_k.push_back({{"k", s.k},
                         {"mean_mise", s.mean_mise},
                         {"ci_mise", s.ci_mise},
                         {"mean_rmise", s.mean_rmise},
                         {"ci_rmise", s.ci_rmise},
                         {"mean_stderr2", s.mean_stderr2}});
    }
    j["slope_mise"] = result.slope_mise;
    j["slope_rmise"] = result.slope_rmise;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace shapmc
