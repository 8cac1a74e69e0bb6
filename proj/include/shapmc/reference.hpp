#pragma once

#include <span>
#include <vector>

#include "shapmc/coalition.hpp"
#include "shapmc/dataset.hpp"
#include "shapmc/model.hpp"
#include "shapmc/weights.hpp"

namespace shapmc::reference {

/// Serial, non-memoized implementations of the exact oracles. Every game
/// evaluation is recomputed from scratch; intended as a cross-check for the
/// memoized oracles and as the baseline in the benchmark.
std::vector<double> linear_value(const Model& f, const Dataset& d,
                                 std::span<const double> x_star, const WeightScheme& scheme);
std::vector<double> quotient_value(const Model& f, const Dataset& d,
                                   std::span<const double> x_star, const Partition& partition,
                                   const WeightScheme& scheme);
std::vector<double> coalitional_value(const Model& f, const Dataset& d,
                                      std::span<const double> x_star,
                                      const Partition& partition,
                                      const CoalitionalWeightScheme& cw);
std::vector<double> two_step(const Model& f, const Dataset& d, std::span<const double> x_star,
                             const Partition& partition);

}  // namespace shapmc::reference
