#include "activelr/active_lr.hpp"

#include "activelr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace activelr {

namespace {

// Smallest stored rate; long shrink streaks would otherwise underflow to 0.
constexpr double kAlphaFloor = std::numeric_limits<double>::min();

} // namespace

std::vector<std::string> ActiveConfig::validate() const {
    if (!std::isfinite(alpha0) || alpha0 <= 0.0) {
        throw std::invalid_argument("alpha0 must be a positive finite number");
    }
    if (!std::isfinite(alpha_high) || alpha_high <= 0.0) {
        throw std::invalid_argument("alpha_high must be a positive finite number");
    }
    if (!std::isfinite(alpha_low) || alpha_low <= 0.0 || alpha_low >= 1.0) {
        throw std::invalid_argument("alpha_low must lie in (0, 1)");
    }
    std::vector<std::string> warnings;
    if (std::abs(alpha_low + alpha_high - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "alpha_low + alpha_high = " << (alpha_low + alpha_high)
            << " (recommended family satisfies alpha_low + alpha_high = 1)";
        warnings.push_back(msg.str());
    }
    return warnings;
}

AlphaSummary summarize(std::span<const double> values) {
    AlphaSummary s;
    if (values.empty()) {
        return s;
    }
    s.min = values.front();
    s.max = values.front();
    double sum = 0.0;
    for (double v : values) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

ActiveState::ActiveState(const ActiveConfig& config, std::size_t n_params)
    : config_(config) {
    if (n_params == 0) {
        throw std::invalid_argument("ActiveState needs at least one parameter");
    }
    warnings_ = config_.validate();
    const double initial = config_.mode == AdaptMode::Gain ? 1.0 : config_.alpha0;
    alphas_.assign(n_params, initial);
    g_cu_prev_.assign(n_params, 0.0);
    g_cu_curr_.assign(n_params, 0.0);
}

void ActiveState::accumulate(std::span<const double> raw_grad) {
    if (raw_grad.size() != alphas_.size()) {
        throw std::invalid_argument("accumulate: gradient length does not match parameter count");
    }
    for (std::size_t i = 0; i < raw_grad.size(); ++i) {
        if (!std::isfinite(raw_grad[i])) {
            throw DivergenceError("accumulate: non-finite gradient component", i);
        }
    }
    for (std::size_t i = 0; i < raw_grad.size(); ++i) {
        g_cu_curr_[i] += raw_grad[i];
    }
    ++batches_this_epoch_;
}

EpochAdaptReport ActiveState::end_epoch() {
    EpochAdaptReport report;
    if (batches_this_epoch_ == 0) {
        report.epoch = epoch_;
        report.warnings.emplace_back("end_epoch called without any accumulated mini-batch; ignored");
        report.alphas = summarize(effective_alphas());
        return report;
    }

    const bool skip = epoch_ == 0 && config_.first_epoch_policy == FirstEpochPolicy::SkipAdapt;
    if (!skip) {
        for (std::size_t i = 0; i < alphas_.size(); ++i) {
            if (g_cu_curr_[i] * g_cu_prev_[i] > 0.0) {
                alphas_[i] += config_.alpha_high;
                ++report.grown;
            } else {
                alphas_[i] = std::max(alphas_[i] * config_.alpha_low, kAlphaFloor);
                ++report.shrunk;
            }
        }
        report.adapted = true;
    }

    g_cu_prev_.swap(g_cu_curr_);
    std::fill(g_cu_curr_.begin(), g_cu_curr_.end(), 0.0);
    batches_this_epoch_ = 0;
    ++epoch_;

    report.epoch = epoch_;
    report.alphas = summarize(effective_alphas());
    return report;
}

std::vector<double> ActiveState::effective_alphas() const {
    std::vector<double> out(alphas_.size());
    effective_alphas(out);
    return out;
}

void ActiveState::effective_alphas(std::span<double> out) const {
    if (out.size() != alphas_.size()) {
        throw std::invalid_argument("effective_alphas: output length mismatch");
    }
    if (config_.mode == AdaptMode::Gain) {
        for (std::size_t i = 0; i < alphas_.size(); ++i) {
            out[i] = config_.alpha0 * alphas_[i];
        }
    } else {
        std::copy(alphas_.begin(), alphas_.end(), out.begin());
    }
}

void ActiveState::load(std::vector<double> alphas, std::vector<double> cumulative_prev,
                       std::vector<double> cumulative_curr, std::size_t epoch) {
    const std::size_t n = alphas_.size();
    if (alphas.size() != n || cumulative_prev.size() != n || cumulative_curr.size() != n) {
        throw std::invalid_argument("ActiveState::load: length mismatch");
    }
    if (std::any_of(alphas.begin(), alphas.end(), [](double a) { return !(a > 0.0); })) {
        throw std::invalid_argument("ActiveState::load: rates must be positive");
    }
    alphas_ = std::move(alphas);
    g_cu_prev_ = std::move(cumulative_prev);
    g_cu_curr_ = std::move(cumulative_curr);
    epoch_ = epoch;
    batches_this_epoch_ = 1;
}

ActiveState init_active(const ActiveConfig& config, std::size_t n_params) {
    return ActiveState(config, n_params);
}

std::string_view to_string(AdaptMode mode) {
    return mode == AdaptMode::Gain ? "gain" : "absolute";
}

std::string_view to_string(FirstEpochPolicy policy) {
    return policy == FirstEpochPolicy::SkipAdapt ? "skip" : "literal";
}

std::optional<AdaptMode> parse_adapt_mode(std::string_view text) {
    if (text == "absolute") return AdaptMode::Absolute;
    if (text == "gain") return AdaptMode::Gain;
    return std::nullopt;
}

std::optional<FirstEpochPolicy> parse_first_epoch_policy(std::string_view text) {
    if (text == "literal") return FirstEpochPolicy::Literal;
    if (text == "skip") return FirstEpochPolicy::SkipAdapt;
    return std::nullopt;
}

} // namespace activelr
