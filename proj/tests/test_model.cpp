#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "shapmc/model.hpp"

using namespace shapmc;

namespace {

double eval(const std::string& text, std::vector<double> x) {
    return ExpressionModel::parse(text, static_cast<int>(x.size()))->evaluate(x);
}

const char* kExp1aModel =
    "sqrt(6) / (1 + exp(-3*(x1 - 5) + 0.2*(x2 - 15) - 2*(x3 - 2/7) - 5*x4))";

}  // namespace

TEST_CASE("expression evaluation basics") {
    CHECK(eval("x1 + 2*x2", {1, 3}) == doctest::Approx(7.0));
    CHECK(eval("exp(x1)", {0}) == doctest::Approx(1.0));
    CHECK(eval("x1*x2", {2, 3}) == doctest::Approx(6.0));
    CHECK(eval("sqrt(6) / (1 + exp(0-3*(x1-5)))", {5}) ==
          doctest::Approx(std::sqrt(6.0) / 2.0).epsilon(1e-12));
    CHECK(eval(kExp1aModel, {5, 15, 2.0 / 7.0, 0}) ==
          doctest::Approx(std::sqrt(6.0) / 2.0).epsilon(1e-12));
    CHECK(eval("pi", {0}) == doctest::Approx(3.14159265358979));
    CHECK(eval("abs(0 - 3)", {0}) == 3.0);
    CHECK(eval("log(exp(2))", {0}) == doctest::Approx(2.0));
    CHECK(eval("cos(0) + sin(0)", {0}) == doctest::Approx(1.0));
}

TEST_CASE("operator precedence and associativity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 50; ++t) {
        const double a = u(rng), b = u(rng), c = u(rng);
        CHECK(eval("x1 + x2*x3", {a, b, c}) == eval("x1 + (x2*x3)", {a, b, c}));
        CHECK(eval("x1 - x2 - x3", {a, b, c}) == eval("(x1 - x2) - x3", {a, b, c}));
        CHECK(eval("x1 - x2*x3 + x1", {a, b, c}) ==
              eval("(x1 - (x2*x3)) + x1", {a, b, c}));
    }
    // ^ is right-associative and binds tighter than unary minus.
    CHECK(eval("2^3^2", {0}) == doctest::Approx(512.0));
    CHECK(eval("-x1^2", {2}) == doctest::Approx(-4.0));
    CHECK(eval("(-x1)^2", {2}) == doctest::Approx(4.0));
}

TEST_CASE("expression domain errors") {
    CHECK_THROWS_AS(eval("log(0 - 1)", {0}), EvalDomainError);
    CHECK_THROWS_AS(eval("sqrt(0 - 4)", {0}), EvalDomainError);
    CHECK_THROWS_AS(eval("(0 - 2)^0.5", {0}), EvalDomainError);
    CHECK_THROWS_AS(eval("1/(x1 - x1)", {3}), EvalDomainError);
    CHECK(eval("(0 - 2)^3", {0}) == doctest::Approx(-8.0));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(ExpressionModel::parse("", 1), ParseError);
    CHECK_THROWS_AS(ExpressionModel::parse("x1 +", 1), ParseError);
    CHECK_THROWS_AS(ExpressionModel::parse("x3", 2), ParseError);
    CHECK_THROWS_AS(ExpressionModel::parse("foo(x1)", 1), ParseError);
    CHECK_THROWS_AS(ExpressionModel::parse("x1 @ 2", 1), ParseError);
    CHECK_THROWS_AS(ExpressionModel::parse("(x1", 1), ParseError);
    try {
        ExpressionModel::parse("x1 + @", 1);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position >= 4);
        CHECK(e.position <= 6);
    }
}

TEST_CASE("parser round-trip on a corpus") {
    std::vector<std::string> corpus = {
        kExp1aModel,
        "x1",
        "-x1",
        "2^3^x1",
        "x1 - x2 - x3",
        "sin(cos(exp(x1)))",
        "abs(x1)*sqrt(abs(x2)) + log(1 + x3^2)",
        "pi*x1 - 0.5*(pi - 1/pi)",
    };
    for (int k = 1; k <= 45; ++k)
        corpus.push_back("x1 + " + std::to_string(k) + "*x2^2 - sin(x3*" + std::to_string(k) +
                         ") + cos(x1 - x2)/(" + std::to_string(k) + " + x3^2)");
    REQUIRE(corpus.size() >= 50);
    for (const auto& text : corpus) {
        auto m1 = ExpressionModel::parse(text, 4);
        auto m2 = ExpressionModel::parse(m1->pretty(), 4);
        REQUIRE(m1->pretty() == m2->pretty());
    }
}

TEST_CASE("evaluation is pure and deterministic") {
    auto m = ExpressionModel::parse(kExp1aModel, 4);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 20.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x = {u(rng), u(rng), u(rng), u(rng)};
        const double first = m->evaluate(x);
        for (int rep = 0; rep < 50; ++rep) REQUIRE(m->evaluate(x) == first);
    }
}

TEST_CASE("references tracks used variables") {
    auto m = ExpressionModel::parse("x1 + x3", 4);
    CHECK(m->references(0));
    CHECK(!m->references(1));
    CHECK(m->references(2));
    CHECK(!m->references(3));
}

TEST_CASE("logistic model") {
    LogisticModel flat(1.0, {0.0, 0.0}, 0.0);
    CHECK(flat.evaluate(std::vector<double>{3.0, -9.0}) == doctest::Approx(0.5));

    LogisticModel l(std::sqrt(6.0), {3.0, -0.2, 2.0, 5.0}, -15.0 + 3.0 - 4.0 / 7.0);
    auto e = ExpressionModel::parse(kExp1aModel, 4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 8.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x = {u(rng), u(rng), u(rng), u(rng)};
        REQUIRE(l.evaluate(x) == doctest::Approx(e->evaluate(x)).epsilon(1e-12));
    }
}

TEST_CASE("model config loading") {
    ModelPtr e = model_from_json_text(
        R"({"n": 2, "kind": "expression", "expression": "x1 + 2*x2"})");
    CHECK(e->dim() == 2);
    CHECK(e->evaluate(std::vector<double>{1.0, 3.0}) == doctest::Approx(7.0));

    ModelPtr l = model_from_json_text(
        R"({"n": 2, "kind": "logistic", "scale": 1.0, "coeffs": [0.0, 0.0], "intercept": 0.0})");
    CHECK(l->evaluate(std::vector<double>{5.0, 5.0}) == doctest::Approx(0.5));

    CHECK_THROWS(model_from_json_text("{not json"));
    CHECK_THROWS(model_from_json_text(R"({"n": 1, "kind": "mystery"})"));
    CHECK_THROWS(model_from_json_text(R"({"n": 1, "kind": "expression", "expression": "x2"})"));
}
