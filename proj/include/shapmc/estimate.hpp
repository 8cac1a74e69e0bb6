#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

namespace shapmc {

/// Streaming mean/variance accumulator (Welford), with a merge operation so
/// parallel workers can accumulate privately and combine.
class Estimate {
  public:
    void update(double sample) {
        if (!std::isfinite(sample))
            throw std::invalid_argument("Estimate::update: non-finite sample");
        ++count_;
        const double delta = sample - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (sample - mean_);
    }

    static Estimate merged(const Estimate& a, const Estimate& b) {
        if (a.count_ == 0) return b;
        if (b.count_ == 0) return a;
        Estimate out;
        const double na = static_cast<double>(a.count_);
        const double nb = static_cast<double>(b.count_);
        const double delta = b.mean_ - a.mean_;
        out.count_ = a.count_ + b.count_;
        out.mean_ = a.mean_ + delta * nb / (na + nb);
        out.m2_ = a.m2_ + b.m2_ + delta * delta * na * nb / (na + nb);
        return out;
    }

    std::uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }

    /// Sample variance of the stream (count >= 2).
    double variance() const {
        return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
    }

    /// Standard error of the mean: sqrt(m2 / (count*(count-1))).
    double stderr_of_mean() const {
        if (count_ < 2) return 0.0;
        return std::sqrt(m2_ / (static_cast<double>(count_) * static_cast<double>(count_ - 1)));
    }

    /// Normal-approximation 95% confidence interval: mean +- 1.96*stderr.
    std::pair<double, double> ci95() const {
        const double half = 1.96 * stderr_of_mean();
        return {mean_ - half, mean_ + half};
    }

  private:
    double mean_ = 0.0;
    double m2_ = 0.0;
    std::uint64_t count_ = 0;
};

}  // namespace shapmc
