#pragma once

#include "activelr/dataset.hpp"
#include "activelr/objectives.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace activelr {

enum class Activation { Tanh, ReLU };
enum class LossKind { MSE, CrossEntropy };

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;   // input, hidden..., output
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
};

/// Fully connected network with a linear output layer and manual backprop.
/// Flat parameter layout, layer by layer: weights (out x in, row-major)
/// followed by biases (out).
///
/// MSE is 1/2 |y_hat - y|^2 per row (labels one-hot encoded for
/// classification data); CrossEntropy is softmax cross-entropy and needs
/// labels. Both are averaged over the rows of the batch.
class Mlp {
public:
    /// Throws std::invalid_argument when the layer sizes do not fit the data.
    Mlp(MlpSpec spec, std::shared_ptr<const Dataset> data, LossKind loss);

    std::size_t param_count() const noexcept { return param_count_; }
    std::size_t layer_count() const noexcept { return spec_.layer_sizes.size() - 1; }
    const MlpSpec& spec() const noexcept { return spec_; }
    const Dataset& data() const noexcept { return *data_; }
    LossKind loss_kind() const noexcept { return loss_; }

    /// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
    std::vector<double> initial_params() const;

    double loss(std::span<const double> theta, std::span<const std::size_t> rows) const;
    /// Overwrites grad; returns the batch loss.
    double loss_grad(std::span<const double> theta, std::span<const std::size_t> rows,
                     std::span<double> grad) const;

    double full_loss(std::span<const double> theta) const;
    /// Classification accuracy in [0, 1]; for regression the negated full
    /// loss, so larger is better in both cases.
    double metric(std::span<const double> theta) const;

    /// L1 norm of each layer's gradient block (weights and biases).
    std::vector<double> layer_l1(std::span<const double> grad) const;

    const std::vector<std::size_t>& all_rows() const noexcept { return all_rows_; }

private:
    double forward_backward(std::span<const double> theta, std::span<const std::size_t> rows,
                            std::span<double> grad) const;

    MlpSpec spec_;
    std::shared_ptr<const Dataset> data_;
    LossKind loss_;
    std::size_t param_count_ = 0;
    std::vector<std::size_t> offsets_;   // start of each layer block
    std::vector<std::size_t> all_rows_;
};

/// Full-batch objective view (eval/grad over every row).
Objective mlp_objective(const MlpSpec& spec, std::shared_ptr<const Dataset> data, LossKind loss);

std::string_view to_string(Activation activation);
std::string_view to_string(LossKind loss);
std::optional<Activation> parse_activation(std::string_view text);
std::optional<LossKind> parse_loss_kind(std::string_view text);

} // namespace activelr
