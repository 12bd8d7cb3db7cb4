#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

namespace activelr {

/// How the per-parameter rate vector is interpreted.
///  - Absolute: the stored value is the learning rate itself; growth adds
///    alpha_high to it, shrink multiplies it by alpha_low.
///  - Gain: the stored value is a multiplier on alpha0 (starts at 1); the same
///    add/multiply rule is applied to the multiplier.
enum class AdaptMode { Absolute, Gain };

/// What happens at the first epoch boundary, where the previous cumulative
/// gradient is still the zero vector.
///  - Literal: the zero product falls into the shrink branch.
///  - SkipAdapt: only the buffers are rotated; rates are left alone.
enum class FirstEpochPolicy { Literal, SkipAdapt };

struct ActiveConfig {
    double alpha0 = 1e-3;
    double alpha_high = 0.1;
    double alpha_low = 0.9;
    AdaptMode mode = AdaptMode::Absolute;
    FirstEpochPolicy first_epoch_policy = FirstEpochPolicy::Literal;

    /// Throws std::invalid_argument for hard violations (alpha0 <= 0,
    /// alpha_high <= 0, alpha_low outside (0,1), non-finite values).
    /// Returns soft warnings, currently only alpha_low + alpha_high != 1.
    std::vector<std::string> validate() const;
};

struct AlphaSummary {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

AlphaSummary summarize(std::span<const double> values);

struct EpochAdaptReport {
    std::size_t epoch = 0;   // epoch that just closed, 1-based
    std::size_t grown = 0;
    std::size_t shrunk = 0;
    bool adapted = false;    // false for SkipAdapt's first epoch and for empty epochs
    AlphaSummary alphas;     // effective rates after the update
    std::vector<std::string> warnings;
};

/// Per-parameter step sizes plus the cumulative-gradient buffers that drive
/// their epoch-boundary adaptation. Owns no backbone state.
class ActiveState {
public:
    /// Throws std::invalid_argument on n_params == 0 or an invalid config.
    ActiveState(const ActiveConfig& config, std::size_t n_params);

    /// Adds a raw mini-batch gradient into the current epoch's cumulative
    /// gradient. Non-finite components raise DivergenceError and leave the
    /// state untouched.
    void accumulate(std::span<const double> raw_grad);

    /// Applies the sign rule to every parameter and rotates the buffers.
    /// An epoch without any accumulate() call is a no-op with a warning.
    EpochAdaptReport end_epoch();

    /// Rates the backbone should use right now.
    std::vector<double> effective_alphas() const;
    void effective_alphas(std::span<double> out) const;

    std::size_t size() const noexcept { return alphas_.size(); }
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batches_this_epoch() const noexcept { return batches_this_epoch_; }
    const ActiveConfig& config() const noexcept { return config_; }

    /// Raw stored values: rates in Absolute mode, gains in Gain mode.
    const std::vector<double>& alphas() const noexcept { return alphas_; }
    const std::vector<double>& cumulative_prev() const noexcept { return g_cu_prev_; }
    const std::vector<double>& cumulative_curr() const noexcept { return g_cu_curr_; }

    /// Warnings produced at construction (config soft checks).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Test hook: overwrite the stored values and buffers directly.
    void load(std::vector<double> alphas, std::vector<double> cumulative_prev,
              std::vector<double> cumulative_curr, std::size_t epoch);

private:
    ActiveConfig config_;
    std::vector<double> alphas_;
    std::vector<double> g_cu_prev_;
    std::vector<double> g_cu_curr_;
    std::size_t epoch_ = 0;
    std::size_t batches_this_epoch_ = 0;
    std::vector<std::string> warnings_;
};

ActiveState init_active(const ActiveConfig& config, std::size_t n_params);

std::string_view to_string(AdaptMode mode);
std::string_view to_string(FirstEpochPolicy policy);
std::optional<AdaptMode> parse_adapt_mode(std::string_view text);
std::optional<FirstEpochPolicy> parse_first_epoch_policy(std::string_view text);

} // namespace activelr
