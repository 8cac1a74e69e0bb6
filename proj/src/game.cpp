#include "shapmc/game.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shapmc {

void compose_into(std::span<const double> x_star, std::span<const double> x, Coalition s,
                  std::span<double> out) {
    const std::size_t n = out.size();
    if (x_star.size() != n || x.size() != n)
        throw std::invalid_argument("compose: point length mismatch");
    for (std::size_t i = 0; i < n; ++i)
        out[i] = s.contains(static_cast<int>(i)) ? x_star[i] : x[i];
}

std::vector<double> compose(std::span<const double> x_star, std::span<const double> x,
                            Coalition s) {
    std::vector<double> out(x_star.size());
    compose_into(x_star, x, s, out);
    return out;
}

double empirical_marginal_game(const Model& f, const Dataset& d,
                               std::span<const double> x_star, Coalition s) {
    if (static_cast<int>(x_star.size()) != d.cols())
        throw std::invalid_argument("empirical_marginal_game: x* length != dataset width");
    std::vector<double> buffer(x_star.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < d.rows(); ++k) {
        compose_into(x_star, d.row(k), s, buffer);
        try {
            sum += f.evaluate(buffer);
        } catch (const EvalDomainError& e) {
            throw EvalDomainError(std::string(e.what()) + " at background row " +
                                  std::to_string(k));
        }
    }
    return sum / static_cast<double>(d.rows());
}

GameTable::GameTable(const Model& f, const Dataset& d, std::span<const double> x_star)
    : f_(f),
      d_(d),
      x_star_(x_star.begin(), x_star.end()),
      n_(d.cols()),
      dense_(d.cols() <= 26),
      scratch_(x_star.size()) {
    if (static_cast<int>(x_star.size()) != d.cols())
        throw std::invalid_argument("GameTable: x* length != dataset width");
    if (dense_)
        table_.assign(std::size_t{1} << n_, std::numeric_limits<double>::quiet_NaN());
}

double GameTable::compute(std::uint64_t mask, std::vector<double>& buffer) const {
    Coalition s(mask, n_);
    double sum = 0.0;
    for (std::size_t k = 0; k < d_.rows(); ++k) {
        compose_into(x_star_, d_.row(k), s, buffer);
        sum += f_.evaluate(buffer);
    }
    return sum / static_cast<double>(d_.rows());
}

double GameTable::value(std::uint64_t mask) {
    if (dense_) {
        double& slot = table_[mask];
        if (std::isnan(slot)) {
            slot = compute(mask, scratch_);
            ++game_evals_;
        }
        return slot;
    }
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    double v = compute(mask, scratch_);
    ++game_evals_;
    cache_.emplace(mask, v);
    return v;
}

void GameTable::fill_all() {
    if (!dense_)
        throw std::invalid_argument("GameTable::fill_all: n too large for a full table");
    const std::int64_t total = std::int64_t{1} << n_;
#pragma omp parallel
    {
        std::vector<double> buffer(x_star_.size());
#pragma omp for schedule(static)
        for (std::int64_t mask = 0; mask < total; ++mask) {
            if (std::isnan(table_[static_cast<std::uint64_t>(mask)]))
                table_[static_cast<std::uint64_t>(mask)] =
                    compute(static_cast<std::uint64_t>(mask), buffer);
        }
    }
    game_evals_ = static_cast<std::size_t>(total);
}

namespace {

void check_limit(int count, int limit, const char* what) {
    if (count > limit)
        throw std::invalid_argument(std::string("exact oracle refused: ") + what + " = " +
                                    std::to_string(count) + " exceeds limit " +
                                    std::to_string(limit) + " (2^" + std::to_string(count) +
                                    " game evaluations); use the MC estimator or raise the limit");
}

// Iterates all submasks of `space`, including the empty set.
template <typename F>
void for_each_submask(std::uint64_t space, F&& fn) {
    std::uint64_t sub = space;
    while (true) {
        fn(sub);
        if (sub == 0) break;
        sub = (sub - 1) & space;
    }
}

}  // namespace

double exact_linear_single(GameTable& game, int n, const WeightScheme& scheme, int i) {
    const std::uint64_t space = Coalition::full(n).without(i).bits;
    const std::uint64_t bit_i = std::uint64_t{1} << i;
    double total = 0.0;
    for_each_submask(space, [&](std::uint64_t s) {
        const double w = scheme.weight(std::popcount(s), n);
        total += w * (game.value(s | bit_i) - game.value(s));
    });
    return total;
}

Attribution exact_linear_value(const Model& f, const Dataset& d,
                               std::span<const double> x_star, const WeightScheme& scheme,
                               int limit) {
    const int n = d.cols();
    check_limit(n, limit, "n");
    GameTable game(f, d, x_star);
    game.fill_all();
    Attribution out;
    out.kind = scheme.name();
    out.mode = "exact";
    out.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.values[static_cast<std::size_t>(i)] = exact_linear_single(game, n, scheme, i);
    return out;
}

double exact_quotient_single(GameTable& game, const Partition& partition,
                             const WeightScheme& scheme, int j) {
    const int m = partition.size();
    const std::uint64_t space = Coalition::full(m).without(j).bits;
    double total = 0.0;
    for_each_submask(space, [&](std::uint64_t a) {
        const double w = scheme.weight(std::popcount(a), m);
        const Coalition qa = partition.union_of_groups(Coalition(a, m));
        const Coalition qaj = partition.union_of_groups(Coalition(a, m).with(j));
        total += w * (game.value(qaj) - game.value(qa));
    });
    return total;
}

Attribution exact_quotient_value(const Model& f, const Dataset& d,
                                 std::span<const double> x_star, const Partition& partition,
                                 const WeightScheme& scheme, int limit) {
    check_limit(partition.size(), limit, "m");
    GameTable game(f, d, x_star);
    Attribution out;
    out.kind = "quotient-" + scheme.name();
    out.mode = "exact";
    out.values.resize(static_cast<std::size_t>(partition.size()));
    for (int j = 0; j < partition.size(); ++j)
        out.values[static_cast<std::size_t>(j)] =
            exact_quotient_single(game, partition, scheme, j);
    return out;
}

double exact_coalitional_single(GameTable& game, const Partition& partition,
                                const CoalitionalWeightScheme& cw, int i) {
    const int m = partition.size();
    const int j = partition.group_of(i);
    const Coalition group = partition.groups[static_cast<std::size_t>(j)];
    const int gsize = group.size();
    const std::uint64_t group_space = group.without(i).bits;
    const std::uint64_t outer_space = Coalition::full(m).without(j).bits;
    const std::uint64_t bit_i = std::uint64_t{1} << i;

    double total = 0.0;
    for_each_submask(outer_space, [&](std::uint64_t a) {
        const double w1 = cw.outer.weight(std::popcount(a), m);
        const std::uint64_t qa = partition.union_of_groups(Coalition(a, m)).bits;
        for_each_submask(group_space, [&](std::uint64_t t) {
            const double w2 = cw.inner.weight(std::popcount(t), gsize);
            const std::uint64_t base = qa | t;
            total += w1 * w2 * (game.value(base | bit_i) - game.value(base));
        });
    });
    return total;
}

Attribution exact_coalitional_value(const Model& f, const Dataset& d,
                                    std::span<const double> x_star, const Partition& partition,
                                    const CoalitionalWeightScheme& cw, int limit) {
    check_limit(partition.size(), limit, "m");
    for (const auto& g : partition.groups) check_limit(g.size(), limit, "group size");
    GameTable game(f, d, x_star);
    Attribution out;
    out.kind = "coalitional";
    out.mode = "exact";
    out.values.resize(static_cast<std::size_t>(partition.n));
    for (int i = 0; i < partition.n; ++i)
        out.values[static_cast<std::size_t>(i)] =
            exact_coalitional_single(game, partition, cw, i);
    return out;
}

double exact_two_step_single(GameTable& game, const Partition& partition, int i) {
    const WeightScheme shap = WeightScheme::shapley();
    const int j = partition.group_of(i);
    const Coalition group = partition.groups[static_cast<std::size_t>(j)];
    const int gsize = group.size();

    const double quotient_j = exact_quotient_single(game, partition, shap, j);
    if (gsize == 1) return quotient_j;

    // Shapley value of the game restricted to the group: coalitions range
    // over subsets of S_j, features outside S_j take background values.
    const std::uint64_t within_space = group.without(i).bits;
    const std::uint64_t bit_i = std::uint64_t{1} << i;
    double within = 0.0;
    for_each_submask(within_space, [&](std::uint64_t t) {
        const double w = shap.weight(std::popcount(t), gsize);
        within += w * (game.value(t | bit_i) - game.value(t));
    });

    const double group_worth = game.value(group);
    return within + (quotient_j - group_worth) / static_cast<double>(gsize);
}

Attribution exact_two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                           const Partition& partition, int limit) {
    check_limit(partition.size(), limit, "m");
    for (const auto& g : partition.groups) check_limit(g.size(), limit, "group size");
    GameTable game(f, d, x_star);
    Attribution out;
    out.kind = "two-step";
    out.mode = "exact";
    out.values.resize(static_cast<std::size_t>(partition.n));
    for (int i = 0; i < partition.n; ++i)
        out.values[static_cast<std::size_t>(i)] = exact_two_step_single(game, partition, i);
    return out;
}

}  // namespace shapmc
