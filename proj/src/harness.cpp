#include "activelr/harness.hpp"

#include "activelr/errors.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace activelr {

namespace {

constexpr double kDivergenceFactor = 1e6;
constexpr std::size_t kMaxRecordedDim = 3;

// Uniform view over the three task kinds.
class Problem {
public:
    virtual ~Problem() = default;
    virtual std::size_t dim() const = 0;
    virtual Vec init() const = 0;
    virtual std::size_t batches_per_epoch() const = 0;
    virtual void begin_epoch(std::size_t /*epoch*/) {}
    /// Writes the gradient of batch b and returns its loss.
    virtual double batch(std::size_t b, std::span<const double> theta, std::span<double> grad) = 0;
    virtual double full_loss(std::span<const double> theta) const = 0;
    virtual std::optional<double> metric(std::span<const double> /*theta*/) const { return std::nullopt; }
    virtual Vec layer_l1(std::span<const double> /*grad*/) const { return {}; }
    virtual bool escaped(std::span<const double> /*theta*/) const { return false; }
    virtual bool stop_on_escape() const { return false; }
};

class AnalyticProblem final : public Problem {
public:
    AnalyticProblem(const AnalyticTask& task, std::uint64_t seed)
        : task_(task), obj_(analytic_objective(task.objective)), rng_(seed) {
        init_ = task.init.empty() ? default_init(task.objective) : task.init;
        if (init_.size() != obj_.dim) {
            throw std::invalid_argument("init point has " + std::to_string(init_.size()) +
                                        " coordinates, objective '" + task.objective + "' needs " +
                                        std::to_string(obj_.dim));
        }
    }
    std::size_t dim() const override { return obj_.dim; }
    Vec init() const override { return init_; }
    std::size_t batches_per_epoch() const override { return task_.steps_per_epoch; }
    double batch(std::size_t, std::span<const double> theta, std::span<double> grad) override {
        obj_.grad(theta, grad);
        if (task_.grad_noise > 0.0) {
            for (double& g : grad) g += task_.grad_noise * normal_(rng_);
        }
        return obj_.eval(theta);
    }
    double full_loss(std::span<const double> theta) const override { return obj_.eval(theta); }
    bool escaped(std::span<const double> theta) const override {
        return obj_.has_escape_predicate() && obj_.escaped(theta);
    }
    bool stop_on_escape() const override { return task_.stop_on_escape; }

private:
    AnalyticTask task_;
    Objective obj_;
    Vec init_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

class QuadraticTaskProblem final : public Problem {
public:
    explicit QuadraticTaskProblem(const QuadraticTask& task)
        : problem_(task.problem ? *task.problem
                                : random_convex_quadratic(task.problem_seed, task.dim, task.cond_number,
                                                          task.batches)),
          obj_(problem_.objective()) {
        if (task.init.empty()) {
            init_.resize(problem_.dim());
            for (std::size_t i = 0; i < init_.size(); ++i) init_[i] = problem_.minimizer[static_cast<Eigen::Index>(i)] + 5.0;
        } else {
            init_ = task.init;
        }
        if (init_.size() != problem_.dim()) throw std::invalid_argument("quadratic task: init dimension mismatch");
    }
    std::size_t dim() const override { return problem_.dim(); }
    Vec init() const override { return init_; }
    std::size_t batches_per_epoch() const override { return obj_.batches.size(); }
    double batch(std::size_t b, std::span<const double> theta, std::span<double> grad) override {
        obj_.batches[b].grad(theta, grad);
        return obj_.batches[b].eval(theta);
    }
    double full_loss(std::span<const double> theta) const override { return obj_.eval(theta); }

private:
    QuadraticProblem problem_;
    Objective obj_;
    Vec init_;
};

class MlpProblem final : public Problem {
public:
    MlpProblem(const MlpTask& task, std::size_t batch_size, std::uint64_t seed)
        : net_(build(task, seed)), batch_size_(batch_size), seed_(seed) {
        if (batch_size_ == 0) throw std::invalid_argument("batch_size must be positive");
        // A batch larger than the dataset is the full batch.
        batch_size_ = std::min(batch_size_, net_.data().size());
    }
    std::size_t dim() const override { return net_.param_count(); }
    Vec init() const override { return net_.initial_params(); }
    std::size_t batches_per_epoch() const override {
        return (net_.data().size() + batch_size_ - 1) / batch_size_;
    }
    void begin_epoch(std::size_t epoch) override {
        const bool shuffle = batch_size_ < net_.data().size();
        batches_ = minibatch_split(net_.data().size(), batch_size_, seed_ * 1000003ULL + epoch, shuffle);
    }
    double batch(std::size_t b, std::span<const double> theta, std::span<double> grad) override {
        return net_.loss_grad(theta, batches_[b], grad);
    }
    double full_loss(std::span<const double> theta) const override { return net_.full_loss(theta); }
    std::optional<double> metric(std::span<const double> theta) const override { return net_.metric(theta); }
    Vec layer_l1(std::span<const double> grad) const override { return net_.layer_l1(grad); }

private:
    static Mlp build(const MlpTask& task, std::uint64_t seed) {
        auto data = std::make_shared<const Dataset>(
            make_synthetic_dataset(task.dataset, task.samples, task.noise, task.data_seed));
        MlpSpec spec;
        spec.layer_sizes.push_back(data->n_features);
        spec.layer_sizes.insert(spec.layer_sizes.end(), task.hidden.begin(), task.hidden.end());
        spec.layer_sizes.push_back(data->is_classification() ? data->n_classes : 1);
        spec.activation = task.activation;
        spec.seed = seed;
        return Mlp(std::move(spec), std::move(data), task.loss);
    }

    Mlp net_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    std::vector<std::vector<std::size_t>> batches_;
};

std::unique_ptr<Problem> make_problem(const RunConfig& cfg) {
    return std::visit(
        [&](const auto& task) -> std::unique_ptr<Problem> {
            using T = std::decay_t<decltype(task)>;
            if constexpr (std::is_same_v<T, AnalyticTask>) {
                return std::make_unique<AnalyticProblem>(task, cfg.seed);
            } else if constexpr (std::is_same_v<T, QuadraticTask>) {
                return std::make_unique<QuadraticTaskProblem>(task);
            } else {
                return std::make_unique<MlpProblem>(task, cfg.batch_size, cfg.seed);
            }
        },
        cfg.task);
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool blew_up(double loss, double initial) {
    return !std::isfinite(loss) || loss - initial > kDivergenceFactor * std::max(std::abs(initial), 1.0);
}

} // namespace

void RunConfig::validate() const {
    backbone.validate();
    active_cfg.validate();
    if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    if (record_every == 0) throw std::invalid_argument("record_every must be >= 1");
    if (loss_target && !std::isfinite(*loss_target)) throw std::invalid_argument("loss target must be finite");
    if (const auto* a = std::get_if<AnalyticTask>(&task)) {
        if (a->steps_per_epoch == 0) throw std::invalid_argument("steps_per_epoch must be >= 1");
        if (!std::isfinite(a->grad_noise) || a->grad_noise < 0.0) {
            throw std::invalid_argument("grad_noise must be non-negative");
        }
        const std::size_t dim = analytic_objective(a->objective).dim;
        if (!a->init.empty() && a->init.size() != dim) {
            throw std::invalid_argument("objective '" + a->objective + "' needs a " + std::to_string(dim) +
                                        "-dimensional start point");
        }
    } else if (const auto* q = std::get_if<QuadraticTask>(&task)) {
        if (!q->problem && (q->dim == 0 || q->batches == 0 || !(q->cond_number >= 1.0))) {
            throw std::invalid_argument("quadratic task needs dim >= 1, batches >= 1, cond_number >= 1");
        }
        const std::size_t dim = q->problem ? q->problem->dim() : q->dim;
        if (!q->init.empty() && q->init.size() != dim) {
            throw std::invalid_argument("quadratic start point must have " + std::to_string(dim) + " entries");
        }
    } else if (const auto* m = std::get_if<MlpTask>(&task)) {
        if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
        if (m->samples < 8) throw std::invalid_argument("MLP task needs at least 8 samples");
        if (batch_size > m->samples) {
            throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                                        std::to_string(m->samples));
        }
    }
}

Vec default_init(std::string_view objective) {
    if (objective == "cubic") return {5.0};
    if (objective == "multimodal") return {-3.99, 6.01};
    if (objective == "saddle") return {0.5, 0.1};
    if (objective == "quadratic") return {-2.0, 2.0};
    if (objective == "mse_line") return {-1.0};
    throw std::invalid_argument("unknown objective '" + std::string(objective) + "'");
}

std::string task_name(const TaskSpec& task) {
    if (const auto* a = std::get_if<AnalyticTask>(&task)) return a->objective;
    if (std::holds_alternative<QuadraticTask>(task)) return "random-quadratic";
    const auto& m = std::get<MlpTask>(task);
    return "mlp-" + std::string(to_string(m.dataset));
}

Trajectory run_training(const RunConfig& cfg) {
    cfg.validate();
    auto problem = make_problem(cfg);
    const std::size_t n = problem->dim();
    const bool record_params = n <= kMaxRecordedDim;

    Trajectory traj;
    traj.header.objective = task_name(cfg.task);
    traj.header.backbone = std::string(to_string(cfg.backbone.kind));
    traj.header.active = cfg.active;
    traj.header.mode = std::string(to_string(cfg.active_cfg.mode));
    traj.header.alpha0 = cfg.active_cfg.alpha0;
    traj.header.alpha_low = cfg.active_cfg.alpha_low;
    traj.header.alpha_high = cfg.active_cfg.alpha_high;
    traj.header.batch_size = std::holds_alternative<MlpTask>(cfg.task) ? cfg.batch_size : 1;
    traj.header.epochs = cfg.epochs;
    traj.header.seed = cfg.seed;
    traj.header.dim = n;

    Vec theta = problem->init();
    Vec grad(n, 0.0);
    Vec alphas = vanilla_alphas(cfg.active_cfg.alpha0, n);
    std::optional<ActiveState> active;
    if (cfg.active) {
        active.emplace(cfg.active_cfg, n);
        traj.warnings = active->warnings();
    }
    BackboneState backbone(n);

    const double initial_loss = problem->full_loss(theta);
    auto& fin = traj.final;
    fin.best_loss = initial_loss;
    fin.final_loss = initial_loss;
    if (record_params) fin.final_params = theta;
    if (!std::isfinite(initial_loss)) {
        fin.diverged = true;
        return traj;
    }

    std::size_t global_step = 0;
    bool stop = false;
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
        std::optional<AlphaSummary> alpha_stats;
        if (active) {
            active->effective_alphas(alphas);
            alpha_stats = summarize(alphas);
        }
        problem->begin_epoch(epoch);

        const std::size_t n_batches = problem->batches_per_epoch();
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        Vec l1_sum;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const double loss = problem->batch(b, theta, grad);
            if (blew_up(loss, initial_loss) || !all_finite(grad)) {
                fin.diverged = true;
                stop = true;
                break;
            }
            try {
                if (active) active->accumulate(grad);
                step(cfg.backbone, theta, grad, alphas, backbone);
            } catch (const DivergenceError&) {
                fin.diverged = true;
                stop = true;
                break;
            }
            ++global_step;
            loss_sum += loss;
            ++loss_count;

            Vec l1 = problem->layer_l1(grad);
            if (!l1.empty()) {
                if (l1_sum.empty()) l1_sum.assign(l1.size(), 0.0);
                for (std::size_t k = 0; k < l1.size(); ++k) l1_sum[k] += l1[k];
            }

            const bool escaped_now = !fin.escaped_at_step && problem->escaped(theta);
            if (escaped_now) fin.escaped_at_step = global_step;
            const bool last_batch = b + 1 == n_batches && epoch == cfg.epochs;
            const bool halt = escaped_now && problem->stop_on_escape();
            if (global_step % cfg.record_every == 0 || last_batch || halt) {
                StepRecord rec;
                rec.epoch = epoch;
                rec.step = global_step;
                rec.loss = loss;
                rec.alpha = alpha_stats;
                if (record_params) rec.params = theta;
                rec.layer_l1 = std::move(l1);
                traj.steps.push_back(std::move(rec));
            }
            if (halt) {
                stop = true;
                break;
            }
        }
        fin.steps_completed = global_step;
        if (fin.diverged) break;

        const double full = problem->full_loss(theta);
        if (blew_up(full, initial_loss)) {
            fin.diverged = true;
            break;
        }
        EpochRecord er;
        er.epoch = epoch;
        er.mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : full;
        er.full_loss = full;
        er.metric = problem->metric(theta);
        er.alpha = alpha_stats;
        if (!l1_sum.empty()) {
            for (double& v : l1_sum) v /= static_cast<double>(loss_count);
            er.layer_l1 = std::move(l1_sum);
        }

        fin.best_loss = std::min(fin.best_loss, full);
        if (er.metric) fin.best_metric = fin.best_metric ? std::max(*fin.best_metric, *er.metric) : *er.metric;
        if (cfg.loss_target && !fin.epochs_to_threshold && er.mean_loss < *cfg.loss_target) {
            fin.epochs_to_threshold = epoch;
        }
        fin.final_loss = full;
        fin.final_metric = er.metric;
        fin.epochs_completed = epoch;
        if (record_params) fin.final_params = theta;
        traj.epochs.push_back(std::move(er));

        if (active && !stop) {
            EpochAdaptReport report = active->end_epoch();
            for (auto& w : report.warnings) traj.warnings.push_back("epoch " + std::to_string(epoch) + ": " + w);
        }
    }
    return traj;
}

} // namespace activelr
