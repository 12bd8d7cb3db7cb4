#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace activelr {

enum class BackboneKind { SgdMomentum, AdamW, RAdam, AdaBelief };

/// Rectification switches on once the SMA length exceeds this value.
inline constexpr double kRAdamRectifyThreshold = 4.0;

struct BackboneConfig {
    BackboneKind kind = BackboneKind::AdamW;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.9;     // SgdMomentum only
    double weight_decay = 0.0; // decoupled, scaled by the per-parameter rate

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct BackboneState {
    BackboneState() = default;
    explicit BackboneState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    std::vector<double> m;   // momentum buffer / first moment
    std::vector<double> v;   // second moment (AdaBelief: belief variance s)
    std::uint64_t t = 0;
};

/// One inner-loop update, theta_i -= alpha_i * (F(g)_i + weight_decay * theta_i).
///
/// F per backbone:
///   SgdMomentum  m = mu*m + g                         F = m
///   AdamW        m = b1*m + (1-b1)*g, v = b2*v + (1-b2)*g^2
///                F = m_hat / (sqrt(v_hat) + eps)
///   RAdam        Adam moments; rho_inf = 2/(1-b2) - 1,
///                rho_t = rho_inf - 2 t b2^t / (1-b2^t);
///                rho_t > 4: F = r_t * m_hat / (sqrt(v_hat) + eps),
///                r_t = sqrt((rho_t-4)(rho_t-2)rho_inf / ((rho_inf-4)(rho_inf-2)rho_t));
///                otherwise F = m_hat
///   AdaBelief    s = b2*s + (1-b2)*(g-m)^2 + eps      F = m_hat / (sqrt(s_hat) + eps)
///
/// Throws std::invalid_argument on length mismatch or a non-positive rate,
/// DivergenceError if the gradient or the resulting parameters are not finite.
void step(const BackboneConfig& config, std::span<double> params, std::span<const double> raw_grad,
          std::span<const double> alphas, BackboneState& state);

/// n copies of alpha; the vanilla optimizer is the adaptive path with these rates.
std::vector<double> vanilla_alphas(double alpha, std::size_t n);

std::string_view to_string(BackboneKind kind);
std::optional<BackboneKind> parse_backbone(std::string_view text);

} // namespace activelr
