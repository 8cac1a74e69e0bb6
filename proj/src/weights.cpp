#include "shapmc/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace shapmc {

namespace {

// Exact factorials up to 20! (fits in uint64).
constexpr int kExactFactorialLimit = 20;

std::uint64_t factorial_u64(int k) {
    std::uint64_t f = 1;
    for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

}  // namespace

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (n <= kExactFactorialLimit) {
        return static_cast<double>(factorial_u64(n) /
                                   (factorial_u64(k) * factorial_u64(n - k)));
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

WeightScheme WeightScheme::explicit_by_size(std::vector<double> by_size, int n) {
    if (n < 1 || n > 20)
        throw std::invalid_argument("WeightScheme: explicit tables are limited to n <= 20");
    if (static_cast<int>(by_size.size()) != n)
        throw std::invalid_argument("WeightScheme: table needs one entry per size 0..n-1");
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
        if (!(by_size[s] >= 0.0))
            throw std::invalid_argument("WeightScheme: negative weight in table");
        total += binomial(n - 1, s) * by_size[s];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("WeightScheme: table weights sum to " +
                                    std::to_string(total) + ", expected 1");
    WeightScheme w(WeightKind::ExplicitTable);
    w.by_size_ = std::move(by_size);
    w.table_n_ = n;
    return w;
}

std::string WeightScheme::name() const {
    switch (kind_) {
        case WeightKind::Shapley: return "shapley";
        case WeightKind::Banzhaf: return "banzhaf";
        case WeightKind::ExplicitTable: return "table";
    }
    return "?";
}

double WeightScheme::weight(int s, int n) const {
    if (n < 1) throw std::invalid_argument("WeightScheme::weight: n must be >= 1");
    if (s < 0 || s >= n)
        throw std::invalid_argument("WeightScheme::weight: size must satisfy 0 <= s <= n-1");
    switch (kind_) {
        case WeightKind::Shapley:
            if (n <= kExactFactorialLimit) {
                // s!(n-s-1)!/n! in exact integer arithmetic.
                const long double num = static_cast<long double>(factorial_u64(s)) *
                                        static_cast<long double>(factorial_u64(n - s - 1));
                return static_cast<double>(num / static_cast<long double>(factorial_u64(n)));
            }
            return std::exp(std::lgamma(s + 1.0) + std::lgamma(n - s + 0.0) -
                            std::lgamma(n + 1.0));
        case WeightKind::Banzhaf:
            return std::ldexp(1.0, -(n - 1));
        case WeightKind::ExplicitTable:
            if (n != table_n_)
                throw std::invalid_argument("WeightScheme::weight: table built for n=" +
                                            std::to_string(table_n_));
            return by_size_[s];
    }
    return 0.0;
}

double WeightScheme::max_weight(int n) const {
    double best = 0.0;
    for (int s = 0; s < n; ++s) best = std::max(best, weight(s, n));
    return best;
}

}  // namespace shapmc
