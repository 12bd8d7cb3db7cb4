#pragma once

#include "activelr/harness.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace activelr {

enum class ToyFunction { Cubic, Multimodal, Saddle };

/// Preset runs for the three analytic functions, paired vanilla/active on
/// the Adam backbone without weight decay.
///  - Cubic: start 5, alpha0 1e-5, 500 epochs of 1000 noisy steps (gradient
///    noise 5), stops once x < 0.5.
///  - Multimodal: start (-3.99, 6.01), alpha0 1e-3, 1000 single-step
///    epochs, gradient noise 0.01, stops once f < 1676.
///  - Saddle: start (0.5, 0.1), alpha0 1e-3, 50 single-step epochs, exact
///    gradients.
RunConfig toy_scenario(ToyFunction fn, bool active, std::uint64_t seed);

const std::vector<ToyFunction>& all_toy_functions();
std::string_view to_string(ToyFunction fn);
std::optional<ToyFunction> parse_toy_function(std::string_view text);

/// Smallest Euclidean distance from p to any of the targets.
double distance_to_nearest(std::span<const double> p, const std::vector<Vec>& targets);

/// First recorded step whose parameters lie strictly within `radius` of a
/// target, if any.
std::optional<std::size_t> first_step_within(const Trajectory& traj, const std::vector<Vec>& targets,
                                             double radius);

} // namespace activelr
