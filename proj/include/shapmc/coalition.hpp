#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapmc {

/// A subset of players {0,...,n-1}, stored as a single-word bitmask.
/// The library caps the ground set at 64 players; exact oracles are
/// infeasible long before that anyway.
struct Coalition {
    std::uint64_t bits = 0;
    int n = 0;

    Coalition() = default;
    Coalition(std::uint64_t bits_, int n_) : bits(bits_), n(n_) {
        if (n_ < 0 || n_ > 64)
            throw std::invalid_argument("Coalition: player count must be in [0,64], got " +
                                        std::to_string(n_));
        if (n_ < 64 && (bits_ >> n_) != 0)
            throw std::invalid_argument("Coalition: bit set at position >= n");
    }

    static Coalition empty(int n) { return Coalition(0, n); }
    static Coalition full(int n) {
        return Coalition(n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1), n);
    }
    static Coalition of(std::initializer_list<int> members, int n) {
        std::uint64_t b = 0;
        for (int i : members) {
            if (i < 0 || i >= n) throw std::invalid_argument("Coalition: member out of range");
            b |= std::uint64_t{1} << i;
        }
        return Coalition(b, n);
    }
    static Coalition of(const std::vector<int>& members, int n) {
        std::uint64_t b = 0;
        for (int i : members) {
            if (i < 0 || i >= n) throw std::invalid_argument("Coalition: member out of range");
            b |= std::uint64_t{1} << i;
        }
        return Coalition(b, n);
    }

    bool contains(int i) const { return (bits >> i) & 1u; }
    int size() const { return std::popcount(bits); }
    bool is_empty() const { return bits == 0; }

    Coalition with(int i) const { return Coalition(bits | (std::uint64_t{1} << i), n); }
    Coalition without(int i) const { return Coalition(bits & ~(std::uint64_t{1} << i), n); }
    Coalition unite(Coalition other) const { return Coalition(bits | other.bits, n); }
    Coalition intersect(Coalition other) const { return Coalition(bits & other.bits, n); }
    /// Complement within {0,...,n-1}.
    Coalition complement() const { return Coalition(full(n).bits & ~bits, n); }

    std::vector<int> members() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(size()));
        for (std::uint64_t b = bits; b != 0; b &= b - 1)
            out.push_back(std::countr_zero(b));
        return out;
    }

    bool operator==(const Coalition&) const = default;
};

/// An ordered partition {S_1,...,S_m} of the features {0,...,n-1}.
struct Partition {
    int n = 0;
    std::vector<Coalition> groups;

    static Partition from_groups(int n, const std::vector<std::vector<int>>& gs) {
        Partition p;
        p.n = n;
        std::uint64_t seen = 0;
        for (const auto& g : gs) {
            Coalition c = Coalition::of(g, n);
            if (c.is_empty()) throw std::invalid_argument("Partition: empty group");
            if (seen & c.bits) throw std::invalid_argument("Partition: groups overlap");
            seen |= c.bits;
            p.groups.push_back(c);
        }
        if (p.groups.empty()) throw std::invalid_argument("Partition: needs at least one group");
        if (seen != Coalition::full(n).bits)
            throw std::invalid_argument("Partition: groups do not cover {0,...,n-1}");
        return p;
    }

    static Partition singletons(int n) {
        std::vector<std::vector<int>> gs;
        for (int i = 0; i < n; ++i) gs.push_back({i});
        return from_groups(n, gs);
    }
    static Partition whole(int n) {
        std::vector<int> all;
        for (int i = 0; i < n; ++i) all.push_back(i);
        return from_groups(n, {all});
    }

    int size() const { return static_cast<int>(groups.size()); }

    int group_of(int feature) const {
        for (int j = 0; j < size(); ++j)
            if (groups[j].contains(feature)) return j;
        throw std::invalid_argument("Partition: feature out of range");
    }

    /// Q_A: the union of the groups selected by A (a coalition over {0,...,m-1}).
    Coalition union_of_groups(Coalition a) const {
        if (a.n != size())
            throw std::invalid_argument("union_of_groups: coalition width " +
                                        std::to_string(a.n) + " != group count " +
                                        std::to_string(size()));
        std::uint64_t b = 0;
        for (std::uint64_t rest = a.bits; rest != 0; rest &= rest - 1)
            b |= groups[std::countr_zero(rest)].bits;
        return Coalition(b, n);
    }
};

}  // namespace shapmc
