#include "activelr/backbones.hpp"

#include "activelr/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace activelr {

namespace {

bool in_unit_interval(double x) { return std::isfinite(x) && x >= 0.0 && x < 1.0; }

void check_inputs(std::span<double> params, std::span<const double> raw_grad,
                  std::span<const double> alphas, const BackboneState& state) {
    const std::size_t n = params.size();
    if (raw_grad.size() != n || alphas.size() != n) {
        throw std::invalid_argument("backbone step: parameter/gradient/rate length mismatch");
    }
    if (state.m.size() != n || state.v.size() != n) {
        throw std::invalid_argument("backbone step: state buffers do not match parameter count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(alphas[i] > 0.0)) {
            throw std::invalid_argument("backbone step: learning rates must be positive");
        }
        if (!std::isfinite(raw_grad[i])) {
            throw DivergenceError("backbone step: non-finite gradient component", i);
        }
    }
}

} // namespace

void BackboneConfig::validate() const {
    if (!in_unit_interval(beta1)) throw std::invalid_argument("beta1 must lie in [0, 1)");
    if (!in_unit_interval(beta2)) throw std::invalid_argument("beta2 must lie in [0, 1)");
    if (!in_unit_interval(momentum)) throw std::invalid_argument("momentum must lie in [0, 1)");
    if (!std::isfinite(epsilon) || epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
        throw std::invalid_argument("weight_decay must be non-negative");
    }
}

void step(const BackboneConfig& config, std::span<double> params, std::span<const double> raw_grad,
          std::span<const double> alphas, BackboneState& state) {
    check_inputs(params, raw_grad, alphas, state);
    const std::size_t n = params.size();
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double wd = config.weight_decay;

    switch (config.kind) {
    case BackboneKind::SgdMomentum: {
        const double mu = config.momentum;
        for (std::size_t i = 0; i < n; ++i) {
            state.m[i] = mu * state.m[i] + raw_grad[i];
            params[i] -= alphas[i] * (state.m[i] + wd * params[i]);
        }
        break;
    }
    case BackboneKind::AdamW:
    case BackboneKind::RAdam: {
        const double b1 = config.beta1;
        const double b2 = config.beta2;
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);

        bool adaptive = true;
        double rect = 1.0;
        if (config.kind == BackboneKind::RAdam) {
            const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
            const double rho_t = rho_inf - 2.0 * t * std::pow(b2, t) / bc2;
            adaptive = rho_t > kRAdamRectifyThreshold;
            if (adaptive) {
                rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                                 ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double g = raw_grad[i];
            state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
            state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
            const double m_hat = state.m[i] / bc1;
            double direction = m_hat;
            if (adaptive) {
                const double v_hat = state.v[i] / bc2;
                direction = rect * m_hat / (std::sqrt(v_hat) + config.epsilon);
            }
            params[i] -= alphas[i] * (direction + wd * params[i]);
        }
        break;
    }
    case BackboneKind::AdaBelief: {
        const double b1 = config.beta1;
        const double b2 = config.beta2;
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = raw_grad[i];
            state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
            const double surprise = g - state.m[i];
            state.v[i] = b2 * state.v[i] + (1.0 - b2) * surprise * surprise + config.epsilon;
            const double m_hat = state.m[i] / bc1;
            const double s_hat = state.v[i] / bc2;
            params[i] -= alphas[i] * (m_hat / (std::sqrt(s_hat) + config.epsilon) + wd * params[i]);
        }
        break;
    }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(params[i])) {
            throw DivergenceError("backbone step: parameter left the finite range", i);
        }
    }
}

std::vector<double> vanilla_alphas(double alpha, std::size_t n) {
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::invalid_argument("vanilla_alphas: learning rate must be positive");
    }
    return std::vector<double>(n, alpha);
}

std::string_view to_string(BackboneKind kind) {
    switch (kind) {
    case BackboneKind::SgdMomentum: return "sgd";
    case BackboneKind::AdamW: return "adamw";
    case BackboneKind::RAdam: return "radam";
    case BackboneKind::AdaBelief: return "adabelief";
    }
    return "unknown";
}

std::optional<BackboneKind> parse_backbone(std::string_view text) {
    if (text == "sgd") return BackboneKind::SgdMomentum;
    if (text == "adamw") return BackboneKind::AdamW;
    if (text == "radam") return BackboneKind::RAdam;
    if (text == "adabelief") return BackboneKind::AdaBelief;
    return std::nullopt;
}

} // namespace activelr
