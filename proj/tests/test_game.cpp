#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "shapmc/experiments.hpp"
#include "shapmc/game.hpp"
#include "shapmc/mc.hpp"
#include "shapmc/model.hpp"
#include "shapmc/reference.hpp"

using namespace shapmc;

namespace {

Dataset make_data(std::uint64_t seed, std::size_t rows, int n, double lo = -2.0,
                  double hi = 2.0) {
    Rng rng(seed, {0xDA7A, 0});
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
    std::vector<std::vector<double>> raw(rows, std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& r : raw)
        for (auto& v : r) v = lo + (hi - lo) * rng.unif01();
    return Dataset::from_rows(names, raw);
}

// Random smooth expression over x1..xn: bounded terms, no domain hazards.
std::string random_expression(Rng& rng, int n) {
    const int terms = 2 + static_cast<int>(rng.below(4));
    std::string text;
    for (int t = 0; t < terms; ++t) {
        const int v1 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int v2 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const double c = std::round((rng.unif01() * 4.0 - 2.0) * 100.0) / 100.0;
        char buf[160];
        switch (rng.below(5)) {
            case 0:
                std::snprintf(buf, sizeof buf, "%.2f*x%d", c, v1);
                break;
            case 1:
                std::snprintf(buf, sizeof buf, "%.2f*x%d*x%d", c, v1, v2);
                break;
            case 2:
                std::snprintf(buf, sizeof buf, "sin(%.2f*x%d + x%d)", c, v1, v2);
                break;
            case 3:
                std::snprintf(buf, sizeof buf, "%.2f*cos(x%d)", c, v1);
                break;
            default:
                std::snprintf(buf, sizeof buf, "exp(%.2f*x%d)", 0.3 * c, v1);
                break;
        }
        text += (t ? " + " : "") + std::string(buf);
    }
    return text;
}

Partition random_partition(Rng& rng, int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    random_permutation(order, rng);
    std::vector<std::vector<int>> groups;
    std::size_t pos = 0;
    while (pos < order.size()) {
        const std::size_t take =
            1 + rng.below(std::min<std::uint64_t>(3, order.size() - pos));
        groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                            order.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
    }
    return Partition::from_groups(n, groups);
}

}  // namespace

TEST_CASE("compose") {
    const std::vector<double> x_star = {1, 2, 3};
    const std::vector<double> x = {9, 9, 9};
    CHECK(compose(x_star, x, Coalition::empty(3)) == x);
    CHECK(compose(x_star, x, Coalition::full(3)) == x_star);
    CHECK(compose(x_star, x, Coalition::of({0, 2}, 3)) == std::vector<double>{1, 9, 3});
    CHECK_THROWS_AS(compose(x_star, std::vector<double>{1.0}, Coalition::empty(3)),
                    std::invalid_argument);
}

TEST_CASE("empirical marginal game") {
    auto f = ExpressionModel::parse("x1 + x2", 2);
    Dataset d = Dataset::from_rows({"x1", "x2"}, {{0, 0}, {2, 2}});
    const std::vector<double> x_star = {5, 5};
    CHECK(empirical_marginal_game(*f, d, x_star, Coalition::full(2)) == doctest::Approx(10.0));
    CHECK(empirical_marginal_game(*f, d, x_star, Coalition::empty(2)) == doctest::Approx(2.0));
    CHECK(empirical_marginal_game(*f, d, x_star, Coalition::of({0}, 2)) ==
          doctest::Approx(6.0));
}

TEST_CASE("game table matches direct evaluation and is fill order independent") {
    Rng rng(5, {1, 0});
    auto f = ExpressionModel::parse(random_expression(rng, 4), 4);
    Dataset d = make_data(6, 10, 4);
    const std::vector<double> x_star = d.row_copy(0);

    GameTable lazy(*f, d, x_star);
    GameTable filled(*f, d, x_star);
    filled.fill_all();
    for (std::uint64_t mask = 0; mask < 16; ++mask)
        REQUIRE(lazy.value(mask) == filled.value(mask));
    for (std::uint64_t mask = 0; mask < 16; ++mask)
        REQUIRE(filled.value(mask) ==
                doctest::Approx(empirical_marginal_game(*f, d, x_star, Coalition(mask, 4)))
                    .epsilon(1e-14));
}

TEST_CASE("exact linear value: trivial cases") {
    Dataset d = make_data(1, 8, 3);
    const std::vector<double> x_star = d.row_copy(2);

    auto constant = ExpressionModel::parse("3.5", 3);
    Attribution a = exact_linear_value(*constant, d, x_star, WeightScheme::shapley());
    for (double v : a.values) CHECK(v == 0.0);

    // Additive model: Shapley collapses to x*_i - mean_D(x_i).
    auto add = ExpressionModel::parse("x1 + x2 + x3", 3);
    Attribution b = exact_linear_value(*add, d, x_star, WeightScheme::shapley());
    for (int i = 0; i < 3; ++i)
        CHECK(b.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(x_star[static_cast<std::size_t>(i)] - d.column_mean(i))
                  .epsilon(1e-12));
}

TEST_CASE("efficiency and null players") {
    Rng rng(9, {2, 0});
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        auto f = ExpressionModel::parse(random_expression(rng, n), n);
        Dataset d = make_data(100 + static_cast<std::uint64_t>(trial), 12, n);
        const std::vector<double> x_star = d.row_copy(1);

        Attribution a = exact_linear_value(*f, d, x_star, WeightScheme::shapley());
        const double vn = empirical_marginal_game(*f, d, x_star, Coalition::full(n));
        const double v0 = empirical_marginal_game(*f, d, x_star, Coalition::empty(n));
        double sum = 0.0;
        for (double v : a.values) sum += v;
        REQUIRE(std::abs(sum - (vn - v0)) <= 1e-10);

        for (int i = 0; i < n; ++i)
            if (!f->references(i)) REQUIRE(a.values[static_cast<std::size_t>(i)] == 0.0);
    }
}

TEST_CASE("symmetry under feature permutation") {
    // f(x1,x2,x3) with roles of x1 and x3 swapped everywhere must swap the
    // attributions bit-exactly.
    auto f = ExpressionModel::parse("0.7*x1*x2 + sin(x3) + exp(0.2*x1)", 3);
    auto g = ExpressionModel::parse("0.7*x3*x2 + sin(x1) + exp(0.2*x3)", 3);
    Dataset d = make_data(17, 9, 3);
    std::vector<std::vector<double>> swapped;
    for (std::size_t k = 0; k < d.rows(); ++k) {
        auto r = d.row_copy(k);
        std::swap(r[0], r[2]);
        swapped.push_back(r);
    }
    Dataset ds = Dataset::from_rows({"x1", "x2", "x3"}, swapped);
    std::vector<double> x_star = d.row_copy(4);
    std::vector<double> x_star_s = x_star;
    std::swap(x_star_s[0], x_star_s[2]);

    for (const auto& scheme : {WeightScheme::shapley(), WeightScheme::banzhaf()}) {
        Attribution a = exact_linear_value(*f, d, x_star, scheme);
        Attribution b = exact_linear_value(*g, ds, x_star_s, scheme);
        CHECK(a.values[0] == doctest::Approx(b.values[2]).epsilon(1e-12));
        CHECK(a.values[1] == doctest::Approx(b.values[1]).epsilon(1e-12));
        CHECK(a.values[2] == doctest::Approx(b.values[0]).epsilon(1e-12));
    }
}

TEST_CASE("exact quotient value") {
    Rng rng(21, {3, 0});
    auto f = ExpressionModel::parse(random_expression(rng, 4), 4);
    Dataset d = make_data(23, 10, 4);
    const std::vector<double> x_star = d.row_copy(3);
    const double vn = empirical_marginal_game(*f, d, x_star, Coalition::full(4));
    const double v0 = empirical_marginal_game(*f, d, x_star, Coalition::empty(4));

    Attribution whole =
        exact_quotient_value(*f, d, x_star, Partition::whole(4), WeightScheme::shapley());
    REQUIRE(whole.values.size() == 1);
    CHECK(whole.values[0] == doctest::Approx(vn - v0).epsilon(1e-12));

    Attribution singles =
        exact_quotient_value(*f, d, x_star, Partition::singletons(4), WeightScheme::shapley());
    Attribution linear = exact_linear_value(*f, d, x_star, WeightScheme::shapley());
    for (int i = 0; i < 4; ++i)
        CHECK(singles.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(linear.values[static_cast<std::size_t>(i)]).epsilon(1e-12));

    Attribution grouped = exact_quotient_value(
        *f, d, x_star, Partition::from_groups(4, {{0, 2}, {1}, {3}}), WeightScheme::shapley());
    double sum = 0.0;
    for (double v : grouped.values) sum += v;
    CHECK(std::abs(sum - (vn - v0)) <= 1e-10);
}

TEST_CASE("exact coalitional value degenerate partitions") {
    Rng rng(33, {4, 0});
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        auto f = ExpressionModel::parse(random_expression(rng, n), n);
        Dataset d = make_data(200 + static_cast<std::uint64_t>(trial), 8, n);
        const std::vector<double> x_star = d.row_copy(0);

        Attribution shap = exact_linear_value(*f, d, x_star, WeightScheme::shapley());
        Attribution owen_singles = exact_coalitional_value(
            *f, d, x_star, Partition::singletons(n), CoalitionalWeightScheme::owen());
        Attribution owen_whole = exact_coalitional_value(
            *f, d, x_star, Partition::whole(n), CoalitionalWeightScheme::owen());
        for (int i = 0; i < n; ++i) {
            REQUIRE(owen_singles.values[static_cast<std::size_t>(i)] ==
                    doctest::Approx(shap.values[static_cast<std::size_t>(i)]).epsilon(1e-12));
            REQUIRE(owen_whole.values[static_cast<std::size_t>(i)] ==
                    doctest::Approx(shap.values[static_cast<std::size_t>(i)]).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-step shapley structure") {
    Rng rng(44, {5, 0});
    auto f = ExpressionModel::parse(random_expression(rng, 5), 5);
    Dataset d = make_data(55, 9, 5);
    const std::vector<double> x_star = d.row_copy(2);
    const Partition part = Partition::from_groups(5, {{0, 1}, {2}, {3, 4}});

    // Singleton groups reduce to the quotient Shapley of the group.
    Attribution ts = exact_two_step(*f, d, x_star, part);
    Attribution quot = exact_quotient_value(*f, d, x_star, part, WeightScheme::shapley());
    CHECK(ts.values[2] == doctest::Approx(quot.values[1]).epsilon(1e-12));

    // Group sum: sum_{i in S_j} TSh_i = phi_j[M, v^P] - v(0) (the empirical
    // marginal game is non-cooperative, so the v(0) offset survives).
    const double v0 = empirical_marginal_game(*f, d, x_star, Coalition::empty(5));
    CHECK(ts.values[0] + ts.values[1] == doctest::Approx(quot.values[0] - v0).epsilon(1e-10));
    CHECK(ts.values[3] + ts.values[4] == doctest::Approx(quot.values[2] - v0).epsilon(1e-10));

    // Constant model: within-group and quotient terms vanish, leaving the
    // -v(S_j)/|S_j| share.
    auto constant = ExpressionModel::parse("2.5", 5);
    Attribution cts = exact_two_step(*constant, d, x_star, part);
    CHECK(cts.values[0] == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(cts.values[2] == doctest::Approx(0.0));  // singleton: quotient value is 0
    CHECK(cts.values[4] == doctest::Approx(-1.25).epsilon(1e-12));
}

TEST_CASE("memoized oracles equal the serial reference") {
    Rng rng(66, {6, 0});
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(7));  // up to 8
        auto f = ExpressionModel::parse(random_expression(rng, n), n);
        Dataset d = make_data(300 + static_cast<std::uint64_t>(trial), 6, n);
        const std::vector<double> x_star = d.row_copy(0);
        const Partition part = random_partition(rng, n);

        for (const auto& scheme : {WeightScheme::shapley(), WeightScheme::banzhaf()}) {
            Attribution fast = exact_linear_value(*f, d, x_star, scheme);
            auto ref = reference::linear_value(*f, d, x_star, scheme);
            for (int i = 0; i < n; ++i)
                REQUIRE(std::abs(fast.values[static_cast<std::size_t>(i)] -
                                 ref[static_cast<std::size_t>(i)]) <= 1e-12);
        }
        {
            Attribution fast =
                exact_quotient_value(*f, d, x_star, part, WeightScheme::shapley());
            auto ref = reference::quotient_value(*f, d, x_star, part, WeightScheme::shapley());
            for (std::size_t j = 0; j < ref.size(); ++j)
                REQUIRE(std::abs(fast.values[j] - ref[j]) <= 1e-12);
        }
        for (const auto& cw :
             {CoalitionalWeightScheme::owen(), CoalitionalWeightScheme::banzhaf_owen()}) {
            Attribution fast = exact_coalitional_value(*f, d, x_star, part, cw);
            auto ref = reference::coalitional_value(*f, d, x_star, part, cw);
            for (int i = 0; i < n; ++i)
                REQUIRE(std::abs(fast.values[static_cast<std::size_t>(i)] -
                                 ref[static_cast<std::size_t>(i)]) <= 1e-12);
        }
        {
            Attribution fast = exact_two_step(*f, d, x_star, part);
            auto ref = reference::two_step(*f, d, x_star, part);
            for (int i = 0; i < n; ++i)
                REQUIRE(std::abs(fast.values[static_cast<std::size_t>(i)] -
                                 ref[static_cast<std::size_t>(i)]) <= 1e-12);
        }
    }
}

TEST_CASE("exact oracle refuses large n") {
    const int n = 21;
    auto f = ExpressionModel::parse("x1", n);
    Dataset d = make_data(7, 2, n);
    const std::vector<double> x_star = d.row_copy(0);
    CHECK_THROWS_WITH_AS(exact_linear_value(*f, d, x_star, WeightScheme::shapley()),
                         doctest::Contains("2^21"), std::invalid_argument);
    // Raised limit succeeds on a partition whose groups are small.
    Attribution q = exact_quotient_value(
        *f, d, x_star, Partition::from_groups(n, {{0, 1, 2}, {3}, {4, 5, 6, 7, 8, 9, 10},
                                                  {11, 12, 13, 14, 15, 16, 17, 18, 19, 20}}),
        WeightScheme::shapley());
    CHECK(q.values.size() == 4);
}

TEST_CASE("exact shapley variance scales as 1/K over dataset redraws") {
    // Lemma 2.7 qualitative form: redrawing the background dataset of size K,
    // the variance of the exact value is O(1/K).
    auto f = ExpressionModel::parse("sin(x1 + 0.5*x2) + 0.3*x1*x3", 3);
    const std::vector<double> x_star = {0.4, -0.3, 0.8};
    const int redraws = 200;

    auto variance_at = [&](std::size_t k_rows) {
        Estimate acc;
        for (int r = 0; r < redraws; ++r) {
            Dataset d = make_data(1000 + static_cast<std::uint64_t>(r) +
                                      (k_rows << 20),
                                  k_rows, 3);
            Attribution a = exact_linear_value(*f, d, x_star, WeightScheme::shapley());
            acc.update(a.values[0]);
        }
        return acc.variance();
    };

    const double v100 = variance_at(100);
    const double v400 = variance_at(400);
    const double ratio = v400 / v100;
    CHECK(ratio > 0.15);
    CHECK(ratio < 0.4);
}
