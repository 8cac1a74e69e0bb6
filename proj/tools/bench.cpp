// Compares the memoized (OpenMP) exact oracle against the serial reference
// implementation, and reports MC estimator throughput.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "shapmc/game.hpp"
#include "shapmc/mc.hpp"
#include "shapmc/model.hpp"
#include "shapmc/reference.hpp"

using namespace shapmc;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 10;
    const std::size_t rows = argc > 2 ? static_cast<std::size_t>(std::atoi(argv[2])) : 50;
    if (n < 2 || n > 20 || rows < 1) {
        std::fprintf(stderr, "usage: %s [n=10] [rows=50]\n", argv[0]);
        return 1;
    }

    std::string expr = "sqrt(6) / (1 + exp(0.3*x1";
    for (int i = 2; i <= n; ++i)
        expr += (i % 2 ? " + " : " - ") + std::string("0.") + std::to_string(1 + i % 7) + "*x" +
                std::to_string(i);
    expr += "))";
    ModelPtr model = ExpressionModel::parse(expr, n);

    Rng rng(42, {0, 0});
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
    std::vector<std::vector<double>> raw(rows, std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : raw)
        for (auto& v : row) v = 6.0 * rng.unif01() - 3.0;
    Dataset data = Dataset::from_rows(names, raw);
    const std::vector<double> x_star = data.row_copy(0);

#ifdef _OPENMP
    std::printf("n=%d rows=%zu threads=%d\n", n, rows, omp_get_max_threads());
#else
    std::printf("n=%d rows=%zu threads=1 (no OpenMP)\n", n, rows);
#endif

    auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> ref =
        reference::linear_value(*model, data, x_star, WeightScheme::shapley());
    const double t_ref = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const Attribution fast = exact_linear_value(*model, data, x_star, WeightScheme::shapley());
    const double t_fast = seconds_since(t0);

    double max_diff = 0.0;
    for (int i = 0; i < n; ++i)
        max_diff = std::max(max_diff, std::abs(ref[static_cast<std::size_t>(i)] -
                                               fast.values[static_cast<std::size_t>(i)]));

    std::printf("exact Shapley, serial reference : %8.3f s\n", t_ref);
    std::printf("exact Shapley, memoized (OpenMP): %8.3f s  (%.1fx, max |diff| %.2e)\n", t_fast,
                t_ref / t_fast, max_diff);

    const std::uint64_t k = 1 << 14;
    t0 = std::chrono::steady_clock::now();
    McResult mc = mc_linear_value(*model, data, x_star, WeightScheme::shapley(),
                                  SamplerMode::empirical_marginal(k), 7);
    const double t_mc = seconds_since(t0);
    const double draws = static_cast<double>(k) * n;
    std::printf("MC Shapley, K=%llu per feature  : %8.3f s  (%.0f draws/s, mean stderr %.2e)\n",
                static_cast<unsigned long long>(k), t_mc, draws / t_mc,
                [&] {
                    double s = 0.0;
                    for (const auto& e : mc.estimates) s += e.stderr_of_mean();
                    return s / n;
                }());
    return 0;
}
