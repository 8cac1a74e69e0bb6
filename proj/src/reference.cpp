#include "shapmc/reference.hpp"

#include <bit>

#include "shapmc/game.hpp"

namespace shapmc::reference {

namespace {

double game(const Model& f, const Dataset& d, std::span<const double> x_star,
            std::uint64_t mask, int n) {
    return empirical_marginal_game(f, d, x_star, Coalition(mask, n));
}

}  // namespace

std::vector<double> linear_value(const Model& f, const Dataset& d,
                                 std::span<const double> x_star, const WeightScheme& scheme) {
    const int n = d.cols();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t space = Coalition::full(n).without(i).bits;
        const std::uint64_t bit_i = std::uint64_t{1} << i;
        std::uint64_t s = space;
        while (true) {
            const double w = scheme.weight(std::popcount(s), n);
            out[static_cast<std::size_t>(i)] +=
                w * (game(f, d, x_star, s | bit_i, n) - game(f, d, x_star, s, n));
            if (s == 0) break;
            s = (s - 1) & space;
        }
    }
    return out;
}

std::vector<double> quotient_value(const Model& f, const Dataset& d,
                                   std::span<const double> x_star, const Partition& partition,
                                   const WeightScheme& scheme) {
    const int m = partition.size();
    const int n = partition.n;
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        const std::uint64_t space = Coalition::full(m).without(j).bits;
        std::uint64_t a = space;
        while (true) {
            const double w = scheme.weight(std::popcount(a), m);
            const std::uint64_t qa = partition.union_of_groups(Coalition(a, m)).bits;
            const std::uint64_t qaj =
                partition.union_of_groups(Coalition(a, m).with(j)).bits;
            out[static_cast<std::size_t>(j)] +=
                w * (game(f, d, x_star, qaj, n) - game(f, d, x_star, qa, n));
            if (a == 0) break;
            a = (a - 1) & space;
        }
    }
    return out;
}

std::vector<double> coalitional_value(const Model& f, const Dataset& d,
                                      std::span<const double> x_star,
                                      const Partition& partition,
                                      const CoalitionalWeightScheme& cw) {
    const int m = partition.size();
    const int n = partition.n;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const int j = partition.group_of(i);
        const Coalition group = partition.groups[static_cast<std::size_t>(j)];
        const std::uint64_t outer_space = Coalition::full(m).without(j).bits;
        const std::uint64_t group_space = group.without(i).bits;
        const std::uint64_t bit_i = std::uint64_t{1} << i;
        std::uint64_t a = outer_space;
        while (true) {
            const double w1 = cw.outer.weight(std::popcount(a), m);
            const std::uint64_t qa = partition.union_of_groups(Coalition(a, m)).bits;
            std::uint64_t t = group_space;
            while (true) {
                const double w2 = cw.inner.weight(std::popcount(t), group.size());
                out[static_cast<std::size_t>(i)] +=
                    w1 * w2 *
                    (game(f, d, x_star, qa | t | bit_i, n) - game(f, d, x_star, qa | t, n));
                if (t == 0) break;
                t = (t - 1) & group_space;
            }
            if (a == 0) break;
            a = (a - 1) & outer_space;
        }
    }
    return out;
}

std::vector<double> two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                             const Partition& partition) {
    const WeightScheme shap = WeightScheme::shapley();
    const int n = partition.n;
    std::vector<double> quotient = quotient_value(f, d, x_star, partition, shap);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const int j = partition.group_of(i);
        const Coalition group = partition.groups[static_cast<std::size_t>(j)];
        const int gsize = group.size();
        if (gsize == 1) {
            out[static_cast<std::size_t>(i)] = quotient[static_cast<std::size_t>(j)];
            continue;
        }
        const std::uint64_t within_space = group.without(i).bits;
        const std::uint64_t bit_i = std::uint64_t{1} << i;
        double within = 0.0;
        std::uint64_t t = within_space;
        while (true) {
            const double w = shap.weight(std::popcount(t), gsize);
            within += w * (game(f, d, x_star, t | bit_i, n) - game(f, d, x_star, t, n));
            if (t == 0) break;
            t = (t - 1) & within_space;
        }
        out[static_cast<std::size_t>(i)] =
            within + (quotient[static_cast<std::size_t>(j)] -
                      game(f, d, x_star, group.bits, n)) /
                         static_cast<double>(gsize);
    }
    return out;
}

}  // namespace shapmc::reference
