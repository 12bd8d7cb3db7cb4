#include "activelr/mlp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace activelr {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;

void apply_activation(Activation a, Eigen::MatrixXd& z) {
    if (a == Activation::Tanh) {
        z = z.array().tanh();
    } else {
        z = z.array().max(0.0);
    }
}

// Derivative expressed through the activation output h.
Eigen::MatrixXd activation_slope(Activation a, const Eigen::MatrixXd& h) {
    if (a == Activation::Tanh) return (1.0 - h.array().square()).matrix();
    return (h.array() > 0.0).cast<double>().matrix();
}

} // namespace

Mlp::Mlp(MlpSpec spec, std::shared_ptr<const Dataset> data, LossKind loss)
    : spec_(std::move(spec)), data_(std::move(data)), loss_(loss) {
    if (!data_) throw std::invalid_argument("Mlp: dataset is required");
    const auto& sizes = spec_.layer_sizes;
    if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output layers");
    for (std::size_t s : sizes) {
        if (s == 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
    }
    if (sizes.front() != data_->n_features) {
        throw std::invalid_argument("Mlp: input width " + std::to_string(sizes.front()) +
                                    " does not match " + std::to_string(data_->n_features) + " features");
    }
    const std::size_t expected_out = data_->is_classification() ? data_->n_classes : 1;
    if (sizes.back() != expected_out) {
        throw std::invalid_argument("Mlp: output width " + std::to_string(sizes.back()) +
                                    " does not match target width " + std::to_string(expected_out));
    }
    if (loss_ == LossKind::CrossEntropy && !data_->is_classification()) {
        throw std::invalid_argument("Mlp: cross-entropy needs a classification dataset");
    }
    if (data_->size() == 0) throw std::invalid_argument("Mlp: dataset is empty");

    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        offsets_.push_back(param_count_);
        param_count_ += sizes[l + 1] * sizes[l] + sizes[l + 1];
    }
    offsets_.push_back(param_count_);
    all_rows_.resize(data_->size());
    std::iota(all_rows_.begin(), all_rows_.end(), std::size_t{0});
}

std::vector<double> Mlp::initial_params() const {
    std::vector<double> theta(param_count_, 0.0);
    std::mt19937_64 rng(spec_.seed);
    const auto& sizes = spec_.layer_sizes;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const double fan_in = static_cast<double>(sizes[l]);
        const double fan_out = static_cast<double>(sizes[l + 1]);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        const std::size_t n_weights = sizes[l] * sizes[l + 1];
        for (std::size_t k = 0; k < n_weights; ++k) theta[offsets_[l] + k] = dist(rng);
    }
    return theta;
}

double Mlp::forward_backward(std::span<const double> theta, std::span<const std::size_t> rows,
                             std::span<double> grad) const {
    if (theta.size() != param_count_) throw std::invalid_argument("Mlp: parameter count mismatch");
    if (!grad.empty() && grad.size() != param_count_) {
        throw std::invalid_argument("Mlp: gradient buffer size mismatch");
    }
    if (rows.empty()) throw std::invalid_argument("Mlp: empty batch");

    const auto& sizes = spec_.layer_sizes;
    const std::size_t b = rows.size();
    const std::size_t n_layers = layer_count();
    const Dataset& d = *data_;

    std::vector<Eigen::MatrixXd> h(n_layers + 1);
    h[0].resize(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d.n_features));
    for (std::size_t r = 0; r < b; ++r) {
        if (rows[r] >= d.size()) throw std::out_of_range("Mlp: row index out of range");
        for (std::size_t j = 0; j < d.n_features; ++j) {
            h[0](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = d.features[rows[r] * d.n_features + j];
        }
    }

    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto in = static_cast<Eigen::Index>(sizes[l]);
        const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
        ConstWeights w(theta.data() + offsets_[l], out, in);
        Eigen::Map<const Eigen::RowVectorXd> bias(theta.data() + offsets_[l] + sizes[l] * sizes[l + 1], out);
        h[l + 1] = (h[l] * w.transpose()).rowwise() + bias;
        if (l + 1 < n_layers) apply_activation(spec_.activation, h[l + 1]);
    }

    const Eigen::MatrixXd& logits = h[n_layers];
    const auto n_out = logits.cols();
    Eigen::MatrixXd delta(logits.rows(), n_out);
    double total = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        if (loss_ == LossKind::CrossEntropy) {
            const double top = logits.row(ri).maxCoeff();
            Eigen::RowVectorXd p = (logits.row(ri).array() - top).exp().matrix();
            const double z = p.sum();
            p /= z;
            const int label = d.labels[rows[r]];
            total += -(logits(ri, label) - top - std::log(z));
            delta.row(ri) = p;
            delta(ri, label) -= 1.0;
        } else {
            for (Eigen::Index k = 0; k < n_out; ++k) {
                double target = 0.0;
                if (d.is_classification()) {
                    target = d.labels[rows[r]] == static_cast<int>(k) ? 1.0 : 0.0;
                } else {
                    target = d.targets[rows[r]];
                }
                const double e = logits(ri, k) - target;
                total += 0.5 * e * e;
                delta(ri, k) = e;
            }
        }
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    if (grad.empty()) return total * inv_b;

    delta *= inv_b;
    for (std::size_t l = n_layers; l-- > 0;) {
        const auto in = static_cast<Eigen::Index>(sizes[l]);
        const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
        Weights gw(grad.data() + offsets_[l], out, in);
        Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + offsets_[l] + sizes[l] * sizes[l + 1], out);
        gw = delta.transpose() * h[l];
        gb = delta.colwise().sum();
        if (l > 0) {
            ConstWeights w(theta.data() + offsets_[l], out, in);
            delta = ((delta * w).array() * activation_slope(spec_.activation, h[l]).array()).matrix();
        }
    }
    return total * inv_b;
}

double Mlp::loss(std::span<const double> theta, std::span<const std::size_t> rows) const {
    return forward_backward(theta, rows, {});
}

double Mlp::loss_grad(std::span<const double> theta, std::span<const std::size_t> rows,
                      std::span<double> grad) const {
    if (grad.size() != param_count_) throw std::invalid_argument("Mlp: gradient buffer size mismatch");
    return forward_backward(theta, rows, grad);
}

double Mlp::full_loss(std::span<const double> theta) const { return loss(theta, all_rows_); }

double Mlp::metric(std::span<const double> theta) const {
    const Dataset& d = *data_;
    if (!d.is_classification()) return -full_loss(theta);
    if (theta.size() != param_count_) throw std::invalid_argument("Mlp: parameter count mismatch");

    const auto& sizes = spec_.layer_sizes;
    std::size_t correct = 0;
    std::vector<double> cur;
    std::vector<double> next;
    for (std::size_t r = 0; r < d.size(); ++r) {
        cur.assign(d.features.begin() + static_cast<std::ptrdiff_t>(r * d.n_features),
                   d.features.begin() + static_cast<std::ptrdiff_t>((r + 1) * d.n_features));
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t in = sizes[l];
            const std::size_t out = sizes[l + 1];
            next.assign(out, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                double z = theta[offsets_[l] + in * out + o];
                for (std::size_t i = 0; i < in; ++i) z += theta[offsets_[l] + o * in + i] * cur[i];
                if (l + 1 < layer_count()) {
                    z = spec_.activation == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0);
                }
                next[o] = z;
            }
            cur.swap(next);
        }
        const auto best = static_cast<int>(std::max_element(cur.begin(), cur.end()) - cur.begin());
        if (best == d.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(d.size());
}

std::vector<double> Mlp::layer_l1(std::span<const double> grad) const {
    if (grad.size() != param_count_) throw std::invalid_argument("Mlp: gradient buffer size mismatch");
    std::vector<double> norms(layer_count(), 0.0);
    for (std::size_t l = 0; l < layer_count(); ++l) {
        for (std::size_t k = offsets_[l]; k < offsets_[l + 1]; ++k) norms[l] += std::abs(grad[k]);
    }
    return norms;
}

Objective mlp_objective(const MlpSpec& spec, std::shared_ptr<const Dataset> data, LossKind loss) {
    auto net = std::make_shared<const Mlp>(spec, std::move(data), loss);
    Objective obj;
    obj.name = "mlp";
    obj.dim = net->param_count();
    obj.eval = [net](std::span<const double> theta) { return net->full_loss(theta); };
    obj.grad = [net](std::span<const double> theta, std::span<double> g) {
        net->loss_grad(theta, net->all_rows(), g);
    };
    return obj;
}

std::string_view to_string(Activation activation) {
    return activation == Activation::Tanh ? "tanh" : "relu";
}

std::string_view to_string(LossKind loss) { return loss == LossKind::MSE ? "mse" : "cross-entropy"; }

std::optional<Activation> parse_activation(std::string_view text) {
    if (text == "tanh") return Activation::Tanh;
    if (text == "relu") return Activation::ReLU;
    return std::nullopt;
}

std::optional<LossKind> parse_loss_kind(std::string_view text) {
    if (text == "mse") return LossKind::MSE;
    if (text == "cross-entropy") return LossKind::CrossEntropy;
    return std::nullopt;
}

} // namespace activelr
