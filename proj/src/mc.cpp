#include "shapmc/mc.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>

namespace shapmc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, StreamId id) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ id.index);
    s = splitmix64(s ^ id.replicate);
    engine_.seed(s);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t reject = (0 - n) % n;  // 2^64 mod n
    std::uint64_t r;
    do {
        r = u64();
    } while (r < reject);
    return r % n;
}

void random_permutation(std::span<int> perm, Rng& rng) {
    for (std::size_t k = perm.size(); k > 1; --k)
        std::swap(perm[k - 1], perm[rng.below(k)]);
}

Coalition coalition_preceding(std::span<const int> perm, int i, int n) {
    std::uint64_t bits = 0;
    for (int p : perm) {
        if (p == i) return Coalition(bits, n);
        bits |= std::uint64_t{1} << p;
    }
    throw std::invalid_argument("coalition_preceding: player not in permutation");
}

namespace {

// Permutation draw over an explicit ground set given as a member list.
Coalition preceding_in_shuffled(std::span<int> scratch, int i, int n, Rng& rng) {
    random_permutation(scratch, rng);
    return coalition_preceding(scratch, i, n);
}

Coalition bernoulli_over(std::span<const int> members, int i, int n, Rng& rng) {
    std::uint64_t bits = 0;
    for (int p : members) {
        if (p == i) continue;
        if (rng.u64() >> 63) bits |= std::uint64_t{1} << p;
    }
    return Coalition(bits, n);
}

Coalition table_over(const WeightScheme& scheme, std::span<int> others, int i, int n,
                     int ground_size, Rng& rng) {
    (void)i;
    // Size first (prob weight(s) * C(ground-1, s)), then a uniform subset of
    // that size via a partial shuffle.
    const double u = rng.unif01();
    double acc = 0.0;
    int size = ground_size - 1;
    for (int s = 0; s < ground_size; ++s) {
        acc += scheme.weight(s, ground_size) * binomial(ground_size - 1, s);
        if (u < acc) {
            size = s;
            break;
        }
    }
    const std::size_t avail = others.size();
    for (int t = 0; t < size; ++t)
        std::swap(others[static_cast<std::size_t>(t)],
                  others[static_cast<std::size_t>(t) +
                         rng.below(avail - static_cast<std::size_t>(t))]);
    std::uint64_t bits = 0;
    for (int t = 0; t < size; ++t)
        bits |= std::uint64_t{1} << others[static_cast<std::size_t>(t)];
    return Coalition(bits, n);
}

std::vector<int> iota_members(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

std::vector<int> others_of(std::span<const int> members, int i) {
    std::vector<int> v;
    v.reserve(members.size());
    for (int p : members)
        if (p != i) v.push_back(p);
    return v;
}

}  // namespace

Coalition sample_coalition_permutation(int i, int n, Rng& rng) {
    if (i < 0 || i >= n) throw std::invalid_argument("sample_coalition: player out of range");
    std::vector<int> perm = iota_members(n);
    return preceding_in_shuffled(perm, i, n, rng);
}

Coalition sample_coalition_bernoulli(int i, int n, Rng& rng) {
    if (i < 0 || i >= n) throw std::invalid_argument("sample_coalition: player out of range");
    std::vector<int> members = iota_members(n);
    return bernoulli_over(members, i, n, rng);
}

Coalition sample_coalition_table(const WeightScheme& scheme, int i, int n, Rng& rng) {
    if (i < 0 || i >= n) throw std::invalid_argument("sample_coalition: player out of range");
    if (n > 20) throw std::invalid_argument("sample_coalition_table: n above enumeration limit");
    std::vector<int> others = others_of(iota_members(n), i);
    return table_over(scheme, others, i, n, n, rng);
}

Coalition sample_coalition(const WeightScheme& scheme, int i, int n, Rng& rng) {
    switch (scheme.kind()) {
        case WeightKind::Shapley: return sample_coalition_permutation(i, n, rng);
        case WeightKind::Banzhaf: return sample_coalition_bernoulli(i, n, rng);
        case WeightKind::ExplicitTable: return sample_coalition_table(scheme, i, n, rng);
    }
    throw std::logic_error("sample_coalition: unreachable");
}

Coalition sample_subcoalition_permutation(Coalition group, int i, Rng& rng) {
    std::vector<int> perm = group.members();
    return preceding_in_shuffled(perm, i, group.n, rng);
}

Coalition sample_subcoalition_bernoulli(Coalition group, int i, Rng& rng) {
    std::vector<int> members = group.members();
    return bernoulli_over(members, i, group.n, rng);
}

Coalition sample_subcoalition(const WeightScheme& scheme, Coalition group, int i, Rng& rng) {
    switch (scheme.kind()) {
        case WeightKind::Shapley: return sample_subcoalition_permutation(group, i, rng);
        case WeightKind::Banzhaf: return sample_subcoalition_bernoulli(group, i, rng);
        case WeightKind::ExplicitTable: {
            std::vector<int> others = others_of(group.members(), i);
            std::vector<int> scratch = others;
            return table_over(scheme, scratch, i, group.n, group.size(), rng);
        }
    }
    throw std::logic_error("sample_subcoalition: unreachable");
}

namespace {

// Shared iteration scaffolding for Algorithms 1-4. Rows come in dataset
// order (true-marginal), uniformly with replacement (empirical-marginal), or
// from an injected sequence (tests); injected rows consume no random draws.
struct DrawPlan {
    std::uint64_t total;
    const Dataset& d;
    const SamplerMode& mode;

    DrawPlan(const Dataset& d_, const SamplerMode& mode_) : total(0), d(d_), mode(mode_) {
        if (mode.forced_rows)
            total = mode.forced_rows->size();
        else if (mode.empirical)
            total = mode.iterations;
        else
            total = d.rows();
        if (total == 0)
            throw std::invalid_argument("MC estimator: iteration count must be >= 1");
    }

    std::size_t row(std::uint64_t k, Rng& rng) const {
        if (mode.forced_rows) return (*mode.forced_rows)[k];
        if (mode.empirical) return static_cast<std::size_t>(rng.below(d.rows()));
        return static_cast<std::size_t>(k);
    }
};

struct DeltaEval {
    const Model& f;
    std::span<const double> x_star;
    std::vector<double> buffer;

    DeltaEval(const Model& f_, std::span<const double> x_star_)
        : f(f_), x_star(x_star_), buffer(x_star_.size()) {}

    double game_at(std::span<const double> x, Coalition s, std::uint64_t draw) {
        compose_into(x_star, x, s, buffer);
        try {
            return f.evaluate(buffer);
        } catch (const EvalDomainError& e) {
            throw EvalDomainError(std::string(e.what()) + " at MC draw " +
                                  std::to_string(draw));
        }
    }

    double delta(std::span<const double> x, Coalition with_i, Coalition without_i,
                 std::uint64_t draw) {
        return game_at(x, with_i, draw) - game_at(x, without_i, draw);
    }
};

void check_point(const Dataset& d, std::span<const double> x_star) {
    if (static_cast<int>(x_star.size()) != d.cols())
        throw std::invalid_argument("MC estimator: x* length != dataset width");
}

}  // namespace

Estimate mc_linear_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                          const WeightScheme& scheme, const SamplerMode& mode,
                          std::uint64_t seed, std::uint64_t replicate, int i) {
    check_point(d, x_star);
    const int n = d.cols();
    DrawPlan plan(d, mode);
    DeltaEval eval(f, x_star);
    Rng rng(seed, {static_cast<std::uint64_t>(i), replicate});

    std::vector<int> perm = iota_members(n);
    std::vector<int> others = others_of(perm, i);
    Estimate est;
    for (std::uint64_t k = 0; k < plan.total; ++k) {
        const auto x = d.row(plan.row(k, rng));
        Coalition s(0, n);
        switch (scheme.kind()) {
            case WeightKind::Shapley:
                std::iota(perm.begin(), perm.end(), 0);
                s = preceding_in_shuffled(perm, i, n, rng);
                break;
            case WeightKind::Banzhaf:
                s = bernoulli_over(perm, i, n, rng);
                break;
            case WeightKind::ExplicitTable: {
                std::vector<int> scratch = others;
                s = table_over(scheme, scratch, i, n, n, rng);
                break;
            }
        }
        est.update(eval.delta(x, s.with(i), s, k));
    }
    return est;
}

McResult mc_linear_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                         const WeightScheme& scheme, const SamplerMode& mode,
                         std::uint64_t seed, std::uint64_t replicate) {
    const int n = d.cols();
    McResult out;
    out.values.resize(static_cast<std::size_t>(n));
    out.estimates.resize(static_cast<std::size_t>(n));
    check_point(d, x_star);
    DrawPlan{d, mode};  // validate before the parallel region
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        Estimate e = mc_linear_single(f, d, x_star, scheme, mode, seed, replicate, i);
        out.estimates[static_cast<std::size_t>(i)] = e;
        out.values[static_cast<std::size_t>(i)] = e.mean();
    }
    return out;
}

Estimate mc_quotient_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                            const Partition& partition, const WeightScheme& scheme,
                            const SamplerMode& mode, std::uint64_t seed,
                            std::uint64_t replicate, int j) {
    check_point(d, x_star);
    const int m = partition.size();
    DrawPlan plan(d, mode);
    DeltaEval eval(f, x_star);
    Rng rng(seed, {static_cast<std::uint64_t>(j), replicate});

    std::vector<int> perm = iota_members(m);
    std::vector<int> others = others_of(perm, j);
    Estimate est;
    for (std::uint64_t k = 0; k < plan.total; ++k) {
        const auto x = d.row(plan.row(k, rng));
        Coalition a(0, m);
        switch (scheme.kind()) {
            case WeightKind::Shapley:
                std::iota(perm.begin(), perm.end(), 0);
                a = preceding_in_shuffled(perm, j, m, rng);
                break;
            case WeightKind::Banzhaf:
                a = bernoulli_over(perm, j, m, rng);
                break;
            case WeightKind::ExplicitTable: {
                std::vector<int> scratch = others;
                a = table_over(scheme, scratch, j, m, m, rng);
                break;
            }
        }
        const Coalition qa = partition.union_of_groups(a);
        const Coalition qaj = partition.union_of_groups(a.with(j));
        est.update(eval.delta(x, qaj, qa, k));
    }
    return est;
}

McResult mc_quotient_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                           const Partition& partition, const WeightScheme& scheme,
                           const SamplerMode& mode, std::uint64_t seed,
                           std::uint64_t replicate) {
    const int m = partition.size();
    McResult out;
    out.values.resize(static_cast<std::size_t>(m));
    out.estimates.resize(static_cast<std::size_t>(m));
    check_point(d, x_star);
    DrawPlan{d, mode};  // validate before the parallel region
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < m; ++j) {
        Estimate e = mc_quotient_single(f, d, x_star, partition, scheme, mode, seed, replicate, j);
        out.estimates[static_cast<std::size_t>(j)] = e;
        out.values[static_cast<std::size_t>(j)] = e.mean();
    }
    return out;
}

Estimate mc_coalitional_single(const Model& f, const Dataset& d,
                               std::span<const double> x_star, const Partition& partition,
                               const CoalitionalWeightScheme& cw, const SamplerMode& mode,
                               std::uint64_t seed, std::uint64_t replicate, int i) {
    check_point(d, x_star);
    const int m = partition.size();
    const int j = partition.group_of(i);
    const Coalition group = partition.groups[static_cast<std::size_t>(j)];
    DrawPlan plan(d, mode);
    DeltaEval eval(f, x_star);
    Rng rng(seed, {static_cast<std::uint64_t>(i), replicate});

    std::vector<int> group_perm_init = group.members();
    std::vector<int> outer_perm = iota_members(m);
    std::vector<int> group_perm = group_perm_init;
    std::vector<int> outer_others = others_of(iota_members(m), j);
    std::vector<int> group_others = others_of(group_perm_init, i);

    Estimate est;
    for (std::uint64_t k = 0; k < plan.total; ++k) {
        const auto x = d.row(plan.row(k, rng));

        Coalition a(0, m);
        switch (cw.outer.kind()) {
            case WeightKind::Shapley:
                std::iota(outer_perm.begin(), outer_perm.end(), 0);
                a = preceding_in_shuffled(outer_perm, j, m, rng);
                break;
            case WeightKind::Banzhaf:
                a = bernoulli_over(outer_perm, j, m, rng);
                break;
            case WeightKind::ExplicitTable: {
                std::vector<int> scratch = outer_others;
                a = table_over(cw.outer, scratch, j, m, m, rng);
                break;
            }
        }

        Coalition t(0, partition.n);
        switch (cw.inner.kind()) {
            case WeightKind::Shapley:
                group_perm = group_perm_init;
                t = preceding_in_shuffled(group_perm, i, partition.n, rng);
                break;
            case WeightKind::Banzhaf:
                t = bernoulli_over(group_perm_init, i, partition.n, rng);
                break;
            case WeightKind::ExplicitTable: {
                std::vector<int> scratch = group_others;
                t = table_over(cw.inner, scratch, i, partition.n, group.size(), rng);
                break;
            }
        }

        const Coalition base = partition.union_of_groups(a).unite(t);
        est.update(eval.delta(x, base.with(i), base, k));
    }
    return est;
}

McResult mc_coalitional_value(const Model& f, const Dataset& d, std::span<const double> x_star,
                              const Partition& partition, const CoalitionalWeightScheme& cw,
                              const SamplerMode& mode, std::uint64_t seed,
                              std::uint64_t replicate) {
    const int n = partition.n;
    McResult out;
    out.values.resize(static_cast<std::size_t>(n));
    out.estimates.resize(static_cast<std::size_t>(n));
    check_point(d, x_star);
    DrawPlan{d, mode};  // validate before the parallel region
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        Estimate e =
            mc_coalitional_single(f, d, x_star, partition, cw, mode, seed, replicate, i);
        out.estimates[static_cast<std::size_t>(i)] = e;
        out.values[static_cast<std::size_t>(i)] = e.mean();
    }
    return out;
}

Estimate mc_two_step_single(const Model& f, const Dataset& d, std::span<const double> x_star,
                            const Partition& partition, const SamplerMode& mode,
                            std::uint64_t seed, std::uint64_t replicate, int i) {
    check_point(d, x_star);
    const int m = partition.size();
    const int j = partition.group_of(i);
    const Coalition group = partition.groups[static_cast<std::size_t>(j)];
    const int gsize = group.size();

    // Singleton groups reduce to the quotient-Shapley estimator for the
    // group, reusing its stream (index j).
    if (gsize == 1)
        return mc_quotient_single(f, d, x_star, partition, WeightScheme::shapley(), mode,
                                  seed, replicate, j);

    DrawPlan plan(d, mode);
    DeltaEval eval(f, x_star);
    Rng rng(seed, {static_cast<std::uint64_t>(i), replicate});

    std::vector<int> outer_perm = iota_members(m);
    std::vector<int> group_perm_init = group.members();
    std::vector<int> group_perm;

    Estimate est;
    for (std::uint64_t k = 0; k < plan.total; ++k) {
        const auto x = d.row(plan.row(k, rng));
        const double f_group = eval.game_at(x, group, k);

        std::iota(outer_perm.begin(), outer_perm.end(), 0);
        const Coalition a = preceding_in_shuffled(outer_perm, j, m, rng);
        const double delta_group = eval.delta(x, partition.union_of_groups(a.with(j)),
                                              partition.union_of_groups(a), k);

        group_perm = group_perm_init;
        const Coalition s = preceding_in_shuffled(group_perm, i, partition.n, rng);
        const double delta_within = eval.delta(x, s.with(i), s, k);

        est.update(delta_within + (delta_group - f_group) / static_cast<double>(gsize));
    }
    return est;
}

McResult mc_two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                     const Partition& partition, const SamplerMode& mode, std::uint64_t seed,
                     std::uint64_t replicate) {
    const int n = partition.n;
    McResult out;
    out.values.resize(static_cast<std::size_t>(n));
    out.estimates.resize(static_cast<std::size_t>(n));
    check_point(d, x_star);
    DrawPlan{d, mode};  // validate before the parallel region
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        Estimate e = mc_two_step_single(f, d, x_star, partition, mode, seed, replicate, i);
        out.estimates[static_cast<std::size_t>(i)] = e;
        out.values[static_cast<std::size_t>(i)] = e.mean();
    }
    return out;
}

VarianceBound variance_bound_check(const Model& f, const Dataset& d,
                                   std::span<const double> x_star, const WeightScheme& scheme,
                                   int i) {
    check_point(d, x_star);
    const int n = d.cols();
    if (n > 12)
        throw std::invalid_argument("variance_bound_check: n > 12 (enumerates 2^n subsets)");

    std::vector<double> buffer(x_star.size());
    const double inv_rows = 1.0 / static_cast<double>(d.rows());

    // nu^(2) under the empirical measure: sum over all S of the mean of
    // f(x*_S, x_{-S})^2 over the background rows.
    double nu2 = 0.0;
    const std::uint64_t all = Coalition::full(n).bits;
    for (std::uint64_t s = 0; s <= all; ++s) {
        Coalition coal(s, n);
        double mean_sq = 0.0;
        for (std::size_t k = 0; k < d.rows(); ++k) {
            compose_into(x_star, d.row(k), coal, buffer);
            const double v = f.evaluate(buffer);
            mean_sq += v * v;
        }
        nu2 += mean_sq * inv_rows;
    }

    // Exact Var(Delta_i) under P_i x P_{D}: enumerate (S, row).
    const std::uint64_t space = Coalition::full(n).without(i).bits;
    const std::uint64_t bit_i = std::uint64_t{1} << i;
    double e1 = 0.0, e2 = 0.0;
    std::uint64_t s = space;
    std::vector<double> with_buf(x_star.size());
    while (true) {
        const double w = scheme.weight(std::popcount(s), n);
        Coalition without(s, n);
        Coalition with(s | bit_i, n);
        for (std::size_t k = 0; k < d.rows(); ++k) {
            compose_into(x_star, d.row(k), with, with_buf);
            compose_into(x_star, d.row(k), without, buffer);
            const double delta = f.evaluate(with_buf) - f.evaluate(buffer);
            e1 += w * inv_rows * delta;
            e2 += w * inv_rows * delta * delta;
        }
        if (s == 0) break;
        s = (s - 1) & space;
    }

    VarianceBound out;
    out.variance = e2 - e1 * e1;
    out.bound = 4.0 * scheme.max_weight(n) * nu2;
    return out;
}

}  // namespace shapmc
