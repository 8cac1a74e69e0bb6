// shapmc: Monte Carlo and exact game-value attributions for tabular models.
//
// Subcommands:
//   explain     MC or exact attribution for one method
//   exact       brute-force oracle only (refuses large n)
//   experiment  one of the six convergence experiments (CSV + JSON output)
//   validate    structural invariant checks on a model/data config

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "shapmc/experiments.hpp"
#include "shapmc/game.hpp"
#include "shapmc/mc.hpp"
#include "shapmc/model.hpp"
#include "shapmc/reference.hpp"

using nlohmann::json;
using namespace shapmc;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { Shapley, Banzhaf, Quotient, Owen, BanzhafOwen, TwoStep };

Method parse_method(const std::string& name) {
    if (name == "shapley") return Method::Shapley;
    if (name == "banzhaf") return Method::Banzhaf;
    if (name == "quotient") return Method::Quotient;
    if (name == "owen") return Method::Owen;
    if (name == "banzhaf-owen") return Method::BanzhafOwen;
    if (name == "two-step") return Method::TwoStep;
    throw CliError("unknown method '" + name +
                   "' (expected shapley|banzhaf|quotient|owen|banzhaf-owen|two-step)");
}

bool needs_partition(Method m) { return m != Method::Shapley && m != Method::Banzhaf; }

Partition parse_partition(const std::string& text, int n) {
    json j;
    try {
        // Accept either an inline JSON array or a path to a JSON file.
        if (!text.empty() && text.front() == '[') {
            j = json::parse(text);
        } else {
            std::ifstream in(text);
            if (!in) throw CliError("cannot open partition file '" + text + "'");
            j = json::parse(in);
        }
    } catch (const json::parse_error& e) {
        throw CliError(std::string("partition is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw CliError("partition must be a JSON array of index lists");
    std::vector<std::vector<int>> groups;
    for (const auto& g : j) {
        if (!g.is_array()) throw CliError("partition groups must be arrays of 1-based indices");
        std::vector<int> members;
        for (const auto& v : g) {
            if (!v.is_number_integer()) throw CliError("partition indices must be integers");
            const int idx = v.get<int>();
            if (idx < 1 || idx > n)
                throw CliError("partition index " + std::to_string(idx) +
                               " out of range 1.." + std::to_string(n));
            members.push_back(idx - 1);
        }
        groups.push_back(members);
    }
    try {
        return Partition::from_groups(n, groups);
    } catch (const std::exception& e) {
        throw CliError(std::string("invalid partition: ") + e.what());
    }
}

std::vector<double> parse_inline_point(const std::string& text, int n) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CliError("invalid number '" + item + "' in --x");
        }
    }
    if (static_cast<int>(out.size()) != n)
        throw CliError("--x has " + std::to_string(out.size()) + " values, model expects " +
                       std::to_string(n));
    return out;
}

struct ExplainOptions {
    std::string method_name;
    std::string model_path;
    std::string data_path;
    std::optional<std::size_t> row;
    std::string inline_x;
    bool all_rows = false;
    std::string partition_text;
    std::string mode = "empirical";
    std::uint64_t iterations = 1024;
    std::uint64_t seed = 0;
    std::string scheme = "shapley";
    std::string output;
    std::string format = "json";
    int threads = 0;
    bool exact = false;
    int limit = kDefaultExactLimit;
};

WeightScheme scheme_from_name(const std::string& name) {
    if (name == "shapley") return WeightScheme::shapley();
    if (name == "banzhaf") return WeightScheme::banzhaf();
    throw CliError("unknown scheme '" + name + "' (expected shapley|banzhaf)");
}

struct RowResult {
    std::size_t row;
    std::vector<double> values;
    std::vector<double> stderrs;  // empty in exact mode
};

json result_to_json(const RowResult& r, const std::vector<std::string>& names,
                    bool per_group) {
    json out;
    out["row"] = r.row;
    out["values"] = r.values;
    if (!r.stderrs.empty()) out["stderr"] = r.stderrs;
    if (!per_group) out["features"] = names;
    double sum = 0.0;
    for (double v : r.values) sum += v;
    out["sum"] = sum;
    return out;
}

void emit(const json& payload, const std::string& output) {
    if (output.empty()) {
        std::cout << payload.dump(2) << '\n';
        return;
    }
    std::ofstream out(output);
    if (!out) throw CliError("cannot open '" + output + "' for writing");
    out << payload.dump(2) << '\n';
    if (!out) throw CliError("write to '" + output + "' failed");
}

void emit_csv(const std::vector<RowResult>& results, const std::vector<std::string>& names,
              bool per_group, const std::string& output) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "row,index,name,value,stderr\n";
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            const std::string name =
                per_group ? "group" + std::to_string(i + 1)
                          : (i < names.size() ? names[i] : "x" + std::to_string(i + 1));
            csv << r.row << ',' << (i + 1) << ',' << name << ',' << r.values[i] << ',';
            if (!r.stderrs.empty()) csv << r.stderrs[i];
            csv << '\n';
        }
    }
    if (output.empty()) {
        std::cout << csv.str();
        return;
    }
    std::ofstream out(output);
    if (!out) throw CliError("cannot open '" + output + "' for writing");
    out << csv.str();
    if (!out) throw CliError("write to '" + output + "' failed");
}

int run_explain(const ExplainOptions& opt) {
#ifdef _OPENMP
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
    const Method method = parse_method(opt.method_name);
    if (opt.model_path.empty()) throw CliError("--model is required");
    if (opt.data_path.empty()) throw CliError("--data is required");

    const int sources = (opt.row.has_value() ? 1 : 0) + (opt.inline_x.empty() ? 0 : 1) +
                        (opt.all_rows ? 1 : 0);
    if (sources != 1)
        throw CliError("exactly one of --row, --x, --all-rows must be given");
    if (opt.mode != "empirical" && opt.mode != "true")
        throw CliError("--mode must be 'empirical' or 'true'");
    if (opt.mode == "empirical" && opt.iterations == 0)
        throw CliError("--iterations must be >= 1");

    ModelPtr model = model_from_json_file(opt.model_path);
    Dataset data = Dataset::from_csv_file(opt.data_path);
    if (model->dim() != data.cols())
        throw CliError("model expects " + std::to_string(model->dim()) +
                       " features, dataset has " + std::to_string(data.cols()));
    const int n = data.cols();

    std::optional<Partition> partition;
    if (needs_partition(method)) {
        if (opt.partition_text.empty())
            throw CliError("method '" + opt.method_name + "' requires --partition");
        partition = parse_partition(opt.partition_text, n);
    }
    const WeightScheme scheme = scheme_from_name(
        method == Method::Banzhaf ? std::string("banzhaf") : opt.scheme);

    std::vector<std::pair<std::size_t, std::vector<double>>> points;
    if (opt.row.has_value()) {
        if (*opt.row >= data.rows())
            throw CliError("--row " + std::to_string(*opt.row) + " out of range (dataset has " +
                           std::to_string(data.rows()) + " rows)");
        points.emplace_back(*opt.row, data.row_copy(*opt.row));
    } else if (!opt.inline_x.empty()) {
        points.emplace_back(0, parse_inline_point(opt.inline_x, n));
    } else {
        for (std::size_t r = 0; r < data.rows(); ++r) points.emplace_back(r, data.row_copy(r));
    }

    const SamplerMode mode = opt.mode == "true" ? SamplerMode::true_marginal()
                                                : SamplerMode::empirical_marginal(opt.iterations);

    std::vector<RowResult> results;
    for (const auto& [row_idx, x_star] : points) {
        RowResult r;
        r.row = row_idx;
        if (opt.exact) {
            Attribution a;
            switch (method) {
                case Method::Shapley:
                case Method::Banzhaf:
                    a = exact_linear_value(*model, data, x_star, scheme, opt.limit);
                    break;
                case Method::Quotient:
                    a = exact_quotient_value(*model, data, x_star, *partition, scheme,
                                             opt.limit);
                    break;
                case Method::Owen:
                    a = exact_coalitional_value(*model, data, x_star, *partition,
                                                CoalitionalWeightScheme::owen(), opt.limit);
                    break;
                case Method::BanzhafOwen:
                    a = exact_coalitional_value(*model, data, x_star, *partition,
                                                CoalitionalWeightScheme::banzhaf_owen(),
                                                opt.limit);
                    break;
                case Method::TwoStep:
                    a = exact_two_step(*model, data, x_star, *partition, opt.limit);
                    break;
            }
            r.values = a.values;
        } else {
            McResult mc;
            switch (method) {
                case Method::Shapley:
                case Method::Banzhaf:
                    mc = mc_linear_value(*model, data, x_star, scheme, mode, opt.seed);
                    break;
                case Method::Quotient:
                    mc = mc_quotient_value(*model, data, x_star, *partition, scheme, mode,
                                           opt.seed);
                    break;
                case Method::Owen:
                    mc = mc_coalitional_value(*model, data, x_star, *partition,
                                              CoalitionalWeightScheme::owen(), mode, opt.seed);
                    break;
                case Method::BanzhafOwen:
                    mc = mc_coalitional_value(*model, data, x_star, *partition,
                                              CoalitionalWeightScheme::banzhaf_owen(), mode,
                                              opt.seed);
                    break;
                case Method::TwoStep:
                    mc = mc_two_step(*model, data, x_star, *partition, mode, opt.seed);
                    break;
            }
            r.values = mc.values;
            r.stderrs.reserve(mc.estimates.size());
            for (const auto& e : mc.estimates) r.stderrs.push_back(e.stderr_of_mean());
        }
        results.push_back(std::move(r));
    }

    const bool per_group = method == Method::Quotient;
    if (opt.format == "csv") {
        emit_csv(results, data.names(), per_group, opt.output);
        return 0;
    }
    if (opt.format != "json") throw CliError("--format must be 'json' or 'csv'");

    json payload;
    payload["command"] = opt.exact ? "exact" : "explain";
    payload["method"] = opt.method_name;
    json config;
    config["model"] = opt.model_path;
    config["data"] = opt.data_path;
    config["n"] = n;
    config["scheme"] = scheme.name();
    config["mode"] = opt.exact ? "exact" : opt.mode;
    if (!opt.exact && opt.mode == "empirical") config["iterations"] = opt.iterations;
    if (!opt.exact) config["seed"] = opt.seed;
    if (partition) {
        json groups = json::array();
        for (const auto& g : partition->groups) {
            json members = json::array();
            for (int i : g.members()) members.push_back(i + 1);
            groups.push_back(members);
        }
        config["partition"] = groups;
    }
    payload["config"] = config;
    payload["results"] = json::array();
    for (const auto& r : results)
        payload["results"].push_back(result_to_json(r, data.names(), per_group));
    emit(payload, opt.output);
    return 0;
}

struct ExperimentOptions {
    std::string id;
    int p = 0;
    bool allow_custom_p = false;
    int runs = 50;
    int kmin = 9;
    int kmax = 14;
    std::size_t size = 100;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 0;
};

int run_experiment(const ExperimentOptions& opt) {
#ifdef _OPENMP
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
    if (opt.kmin < 1 || opt.kmax < opt.kmin)
        throw CliError("need 1 <= kmin <= kmax");
    ExperimentSpec spec;
    spec.id = opt.id;
    spec.p = opt.p;
    spec.allow_custom_p = opt.allow_custom_p;
    spec.runs = opt.runs;
    spec.dataset_size = opt.size;
    spec.seed = opt.seed;
    spec.k_grid.clear();
    for (int r = opt.kmin; r <= opt.kmax; ++r)
        spec.k_grid.push_back(std::uint64_t{1} << r);

    ConvergenceResult result = run_convergence(spec);
    const std::string csv_path = opt.out_dir + "/convergence.csv";
    const std::string json_path = opt.out_dir + "/summary.json";
    write_convergence_csv(result, csv_path);
    write_summary_json(result, json_path);

    std::printf("experiment %s (%s, p=%d, target index %d)\n", spec.id.c_str(),
                result.method.c_str(), result.p, result.target);
    for (const auto& s : result.summary)
        std::printf("  K=%-6llu mean MISE %.6e +- %.2e   mean RMISE %.6e +- %.2e\n",
                    static_cast<unsigned long long>(s.k), s.mean_mise, s.ci_mise,
                    s.mean_rmise, s.ci_rmise);
    std::printf("fitted slope: MISE %.4f, RMISE %.4f\n", result.slope_mise,
                result.slope_rmise);
    std::printf("wrote %s and %s\n", csv_path.c_str(), json_path.c_str());
    return 0;
}

struct ValidateOptions {
    std::string model_path;
    std::string data_path;
    std::string partition_text;
    std::uint64_t seed = 0;
    int limit = kDefaultExactLimit;
};

int run_validate(const ValidateOptions& opt) {
    if (opt.model_path.empty()) throw CliError("--model is required");
    if (opt.data_path.empty()) throw CliError("--data is required");
    ModelPtr model = model_from_json_file(opt.model_path);
    Dataset data = Dataset::from_csv_file(opt.data_path);
    if (model->dim() != data.cols())
        throw CliError("model expects " + std::to_string(model->dim()) +
                       " features, dataset has " + std::to_string(data.cols()));
    const int n = data.cols();
    if (n > 12)
        throw CliError("validate runs brute-force oracles; n = " + std::to_string(n) +
                       " is too large (max 12)");
    const std::vector<double> x_star = data.row_copy(0);

    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-44s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failures;
    };

    const Attribution shap = exact_linear_value(*model, data, x_star, WeightScheme::shapley());
    double sum = 0.0;
    for (double v : shap.values) sum += v;
    const double vn = empirical_marginal_game(*model, data, x_star, Coalition::full(n));
    const double v0 = empirical_marginal_game(*model, data, x_star, Coalition::empty(n));
    check("efficiency: sum Shapley = v(N) - v(0)", std::abs(sum - (vn - v0)) <= 1e-10);

    if (const auto* expr = dynamic_cast<const ExpressionModel*>(model.get())) {
        bool ok = true;
        for (int i = 0; i < n; ++i)
            if (!expr->references(i) && shap.values[static_cast<std::size_t>(i)] != 0.0)
                ok = false;
        check("null players get exactly zero", ok);
    }

    const Partition singles = Partition::singletons(n);
    const Attribution owen = exact_coalitional_value(*model, data, x_star, singles,
                                                     CoalitionalWeightScheme::owen());
    bool owen_ok = true;
    for (int i = 0; i < n; ++i)
        if (std::abs(owen.values[static_cast<std::size_t>(i)] -
                     shap.values[static_cast<std::size_t>(i)]) > 1e-10)
            owen_ok = false;
    check("Owen with singletons = Shapley", owen_ok);

    const Attribution ts = exact_two_step(*model, data, x_star, singles);
    const Attribution quot =
        exact_quotient_value(*model, data, x_star, singles, WeightScheme::shapley());
    bool ts_ok = true;
    for (int i = 0; i < n; ++i)
        if (std::abs(ts.values[static_cast<std::size_t>(i)] -
                     quot.values[static_cast<std::size_t>(i)]) > 1e-10)
            ts_ok = false;
    check("two-step with singletons = quotient Shapley", ts_ok);

    if (!opt.partition_text.empty()) {
        const Partition part = parse_partition(opt.partition_text, n);
        const Attribution qp =
            exact_quotient_value(*model, data, x_star, part, WeightScheme::shapley());
        double qsum = 0.0;
        for (double v : qp.values) qsum += v;
        check("quotient efficiency on given partition", std::abs(qsum - (vn - v0)) <= 1e-10);
    }

    McResult mc = mc_linear_value(*model, data, x_star, WeightScheme::shapley(),
                                  SamplerMode::empirical_marginal(4096), opt.seed);
    bool mc_ok = true;
    for (int i = 0; i < n; ++i) {
        const double se = mc.estimates[static_cast<std::size_t>(i)].stderr_of_mean();
        if (std::abs(mc.values[static_cast<std::size_t>(i)] -
                     shap.values[static_cast<std::size_t>(i)]) > 5.0 * std::max(se, 1e-12))
            mc_ok = false;
    }
    check("MC Shapley within 5 stderr of oracle (K=4096)", mc_ok);

    const VarianceBound vb =
        variance_bound_check(*model, data, x_star, WeightScheme::shapley(), 0);
    check("single-draw variance bound", vb.holds());

    if (failures > 0) {
        std::fprintf(stderr, "%d invariant check(s) failed\n", failures);
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and exact game-value attributions for tabular models"};
    app.require_subcommand(1);

    ExplainOptions explain_opt;
    CLI::App* explain = app.add_subcommand("explain", "compute attributions (MC by default)");
    explain->add_option("method", explain_opt.method_name,
                        "shapley|banzhaf|quotient|owen|banzhaf-owen|two-step")
        ->required();
    explain->add_option("--model", explain_opt.model_path, "model JSON file");
    explain->add_option("--data", explain_opt.data_path, "background dataset CSV");
    explain->add_option("--row", explain_opt.row, "explain this dataset row (0-based)");
    explain->add_option("--x", explain_opt.inline_x, "explain an inline point v1,v2,...");
    explain->add_flag("--all-rows", explain_opt.all_rows, "explain every dataset row");
    explain->add_option("--partition", explain_opt.partition_text,
                        "JSON list of 1-based feature index lists, inline or a file path");
    explain->add_option("--mode", explain_opt.mode, "empirical|true (default empirical)");
    explain->add_option("--iterations", explain_opt.iterations, "MC iterations (empirical mode)");
    explain->add_option("--seed", explain_opt.seed, "random seed");
    explain->add_option("--scheme", explain_opt.scheme,
                        "weights for quotient method: shapley|banzhaf");
    explain->add_option("--output", explain_opt.output, "output file (default stdout)");
    explain->add_option("--format", explain_opt.format, "json|csv (default json)");
    explain->add_option("--threads", explain_opt.threads, "cap worker threads");
    explain->add_flag("--exact", explain_opt.exact, "use the brute-force oracle");
    explain->add_option("--limit", explain_opt.limit, "exact-oracle size limit");

    ExplainOptions exact_opt;
    CLI::App* exact = app.add_subcommand("exact", "brute-force oracle attributions");
    exact->add_option("method", exact_opt.method_name,
                      "shapley|banzhaf|quotient|owen|banzhaf-owen|two-step")
        ->required();
    exact->add_option("--model", exact_opt.model_path, "model JSON file");
    exact->add_option("--data", exact_opt.data_path, "background dataset CSV");
    exact->add_option("--row", exact_opt.row, "explain this dataset row (0-based)");
    exact->add_option("--x", exact_opt.inline_x, "explain an inline point v1,v2,...");
    exact->add_flag("--all-rows", exact_opt.all_rows, "explain every dataset row");
    exact->add_option("--partition", exact_opt.partition_text,
                      "JSON list of 1-based feature index lists, inline or a file path");
    exact->add_option("--scheme", exact_opt.scheme,
                      "weights for shapley/quotient slots: shapley|banzhaf");
    exact->add_option("--output", exact_opt.output, "output file (default stdout)");
    exact->add_option("--format", exact_opt.format, "json|csv (default json)");
    exact->add_option("--threads", exact_opt.threads, "cap worker threads");
    exact->add_option("--limit", exact_opt.limit, "exact-oracle size limit");

    ExperimentOptions exp_opt;
    CLI::App* experiment = app.add_subcommand("experiment", "run a convergence experiment");
    experiment->add_option("id", exp_opt.id, "1a|1b|2a|2b|3a|3b")->required();
    experiment->add_option("--p", exp_opt.p, "predictor count (1b/2b/3b variants)");
    experiment->add_flag("--allow-custom-p", exp_opt.allow_custom_p,
                         "allow p outside the protocol grid");
    experiment->add_option("--runs", exp_opt.runs, "MC replicates per K (default 50)");
    experiment->add_option("--kmin", exp_opt.kmin, "smallest K exponent (default 9)");
    experiment->add_option("--kmax", exp_opt.kmax, "largest K exponent (default 14)");
    experiment->add_option("--size", exp_opt.size, "background dataset size (default 100)");
    experiment->add_option("--seed", exp_opt.seed, "random seed (default 1)");
    experiment->add_option("--out-dir", exp_opt.out_dir,
                           "directory for convergence.csv and summary.json (default .)");
    experiment->add_option("--threads", exp_opt.threads, "cap worker threads");

    ValidateOptions val_opt;
    CLI::App* validate = app.add_subcommand("validate", "run invariant checks on a config");
    validate->add_option("--model", val_opt.model_path, "model JSON file");
    validate->add_option("--data", val_opt.data_path, "background dataset CSV");
    validate->add_option("--partition", val_opt.partition_text,
                         "JSON list of 1-based feature index lists");
    validate->add_option("--seed", val_opt.seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (explain->parsed()) return run_explain(explain_opt);
        if (exact->parsed()) {
            exact_opt.exact = true;
            return run_explain(exact_opt);
        }
        if (experiment->parsed()) return run_experiment(exp_opt);
        if (validate->parsed()) return run_validate(val_opt);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 2;
}
