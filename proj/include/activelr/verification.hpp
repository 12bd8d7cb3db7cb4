#pragma once

#include "activelr/objectives.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace activelr {

/// Frozen vs inner-loop cumulative gradients over one epoch.
struct AgreementReport {
    Vec cu_star;          // sum_t g_t(theta0)
    Vec cu_hat;           // sum_t g_t(theta_hat_{t-1}), plain SGD inner loop
    Vec product;          // elementwise cu_star * cu_hat
    double inner_product = 0.0;
    double lower_bound = 0.0;   // sum_t [f_t(theta0) - f_t(theta_hat_K)] / alpha
    double initial_loss = 0.0;  // sum_t f_t(theta0)
    double final_loss = 0.0;    // sum_t f_t(theta_hat_K)
    double alpha = 0.0;
    bool diverged = false;
    std::vector<std::size_t> order;   // batch visiting order

    /// Every product component >= 0 (up to rounding).
    bool elementwise_nonnegative() const;
    /// Scalar problems only: product >= lower_bound >= 0 (up to rounding).
    bool scalar_bound_holds() const;
    bool inner_product_bound_holds() const;

private:
    double bound_rounding() const;
};

/// Runs one epoch from theta0 twice: with frozen parameters and with the
/// plain SGD inner loop theta_hat_t = theta_hat_{t-1} - alpha g_t(theta_hat_{t-1}).
/// Batches are visited in an order shuffled by order_seed. The run counts as
/// diverged when the summed final batch loss exceeds the summed initial one.
/// Throws ScopeError for a non-convex objective and std::invalid_argument
/// for fewer than 2 batches, a dimension mismatch or alpha <= 0.
AgreementReport check_agreement(const Objective& obj, std::span<const double> theta0, double alpha,
                              std::uint64_t order_seed);

/// One full-batch step of vanilla SGD vs the sign-switched rate from a
/// shared point.
struct SignSwitchReport {
    Vec grad_next;        // g_{e+1} = grad f(theta_e)
    Vec grad_after;       // g_{e+2} = grad f(theta^A_{e+1})
    Vec branch_alpha;     // per coordinate: alpha_high or alpha_low
    std::vector<bool> high_branch;
    double loss_vanilla = 0.0;   // f(theta^S_{e+1})
    double loss_active = 0.0;    // f(theta^A_{e+1})
    double lhs = 0.0;            // loss_vanilla - loss_active
    double rhs = 0.0;            // sum_i g_{e+2,i} g_{e+1,i} (branch_alpha_i - alpha)
    /// Per coordinate, g_{e+2} g_{e+1} has the sign the branch expects
    /// (>= 0 for the high branch, <= 0 for the low branch).
    bool segment_condition = false;

    bool lhs_dominates() const;
    bool rhs_nonnegative() const;
};

/// prior_grad is g_e, one entry per coordinate; a zero product with g_{e+1}
/// selects the low branch. Throws ScopeError for a non-convex objective and
/// std::invalid_argument unless alpha_low < alpha < alpha_high.
SignSwitchReport check_sign_switch(const Objective& obj, std::span<const double> theta_e, double alpha,
                              double alpha_high, double alpha_low, std::span<const double> prior_grad);

enum class LowOp { Multiply, Subtract };
enum class HighOp { Add, Multiply };

/// Steps discarded before mean/std are computed.
inline constexpr std::size_t kWalkBurnIn = 100;

struct WalkStats {
    std::vector<double> series;   // rate after each step
    double mean = 0.0;            // over series after the burn-in
    double std = 0.0;
    double min = 0.0;             // over the whole series
    bool crossed_zero = false;    // some value < 0
};

/// Fair-coin walk: with probability 1/2 apply the low operation (times or
/// minus alpha_low), otherwise the high one (plus or times alpha_high).
/// Throws std::invalid_argument for epochs == 0.
WalkStats simulate_lr_walk(LowOp low_op, HighOp high_op, double alpha_low, double alpha_high,
                           double alpha_init, std::size_t epochs, std::uint64_t seed);

/// Centered differences with step h * (1 + |theta_i|) per coordinate.
Vec finite_diff_grad(const Objective& obj, std::span<const double> theta, double h);

struct AgreementSuiteResult {
    std::size_t cases = 0;
    std::size_t diverged = 0;
    std::size_t elementwise_failures = 0;   // among non-diverged cases
    std::size_t scalar_cases = 0;           // non-diverged, dim 1
    std::size_t scalar_bound_failures = 0;
    std::size_t inner_product_failures = 0; // cu_star . cu_hat < lower_bound
    double seconds = 0.0;

    bool passed() const { return elementwise_failures == 0 && scalar_bound_failures == 0; }
};

/// Random convex quadratics with dim in [1, 8], K in [2, 16] batches,
/// condition number log-uniform in [1, 100], alpha uniform in (0, 1/(2L)]
/// where L is the largest term curvature, theta0 scattered around the
/// minimizer. Roughly a quarter of the cases are scalar.
AgreementSuiteResult agreement_suite(std::size_t cases, std::uint64_t seed);

struct SignSwitchSuiteResult {
    std::size_t cases = 0;
    std::size_t high_cases = 0;       // all coordinates on the high branch
    std::size_t low_cases = 0;        // all coordinates on the low branch
    std::size_t mixed_cases = 0;
    std::size_t lhs_failures = 0;
    std::size_t segment_cases = 0;
    std::size_t rhs_failures = 0;     // rhs < 0 although the segment condition holds
    double seconds = 0.0;

    bool passed() const { return lhs_failures == 0 && rhs_failures == 0; }
};

/// Random convex quadratics (dim in [1, 8]) cycling through all-high,
/// all-low and mixed branch patterns.
SignSwitchSuiteResult sign_switch_suite(std::size_t cases, std::uint64_t seed);

struct WalkPairResult {
    LowOp low_op = LowOp::Multiply;
    HighOp high_op = HighOp::Add;
    std::size_t seeds = 0;
    double grand_mean = 0.0;        // mean of per-seed means
    double grand_std = 0.0;         // mean of per-seed standard deviations
    std::size_t positive_seeds = 0; // min > 0
    std::size_t crossed_zero_seeds = 0;
    std::size_t shrunk_seeds = 0;   // post burn-in mean < 1e-2 * alpha_init
    bool bounded = false;           // every per-seed mean finite and <= 1e3 * alpha_init
};

struct WalkSuiteResult {
    std::vector<WalkPairResult> pairs;   // (Mul,Add), (Mul,Mul), (Sub,Add), (Sub,Mul)
    double seconds = 0.0;

    const WalkPairResult& pair(LowOp low, HighOp high) const;
    /// Multiply/Add stable and alone in that; Subtract pairs cross zero and
    /// Multiply/Multiply collapses, each in all but at most one seed.
    bool passed() const;
};

WalkSuiteResult walk_suite(std::size_t seeds, std::size_t epochs, std::uint64_t seed,
                           double alpha_low = 0.9, double alpha_high = 0.1, double alpha_init = 1.0);

std::string to_json(const AgreementReport& report);
std::string to_json(const SignSwitchReport& report);
std::string to_json(const AgreementSuiteResult& result);
std::string to_json(const SignSwitchSuiteResult& result);
std::string to_json(const WalkSuiteResult& result);

std::string_view to_string(LowOp op);
std::string_view to_string(HighOp op);

} // namespace activelr
