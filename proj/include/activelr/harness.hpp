#pragma once

#include "activelr/active_lr.hpp"
#include "activelr/backbones.hpp"
#include "activelr/dataset.hpp"
#include "activelr/mlp.hpp"
#include "activelr/objectives.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace activelr {

/// One of the analytic functions. An epoch is `steps_per_epoch` steps; each
/// step sees the exact gradient plus grad_noise * N(0, 1) per coordinate.
struct AnalyticTask {
    std::string objective = "cubic";
    Vec init;                          // empty: the objective's default start
    std::size_t steps_per_epoch = 1;
    double grad_noise = 0.0;
    bool stop_on_escape = false;
};

/// Random convex quadratic; one step per batch term, terms visited in order.
struct QuadraticTask {
    std::uint64_t problem_seed = 0;
    std::size_t dim = 2;
    double cond_number = 10.0;
    std::size_t batches = 1;
    std::optional<QuadraticProblem> problem;   // overrides the generated one
    Vec init;                                  // empty: minimizer + 5 per coordinate
};

/// MLP on a synthetic dataset. Weight initialization follows RunConfig::seed;
/// the data itself follows data_seed.
struct MlpTask {
    DatasetKind dataset = DatasetKind::TwoClusters;
    std::size_t samples = 512;
    double noise = 1.0;
    std::uint64_t data_seed = 7;
    std::vector<std::size_t> hidden = {16};
    Activation activation = Activation::Tanh;
    LossKind loss = LossKind::CrossEntropy;
};

using TaskSpec = std::variant<AnalyticTask, QuadraticTask, MlpTask>;

struct RunConfig {
    TaskSpec task = AnalyticTask{};
    BackboneConfig backbone;
    bool active = false;
    /// alpha0 doubles as the fixed rate of the vanilla run.
    ActiveConfig active_cfg;
    std::size_t batch_size = 32;   // MLP tasks only
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    std::size_t record_every = 1;
    std::optional<double> loss_target;

    /// Throws std::invalid_argument for out-of-range fields.
    void validate() const;
};

/// Default start point for an analytic objective.
Vec default_init(std::string_view objective);

struct StepRecord {
    std::size_t epoch = 0;   // 1-based
    std::size_t step = 0;    // 1-based, counted across the whole run
    double loss = 0.0;       // mini-batch loss before the update
    std::optional<AlphaSummary> alpha;   // present iff active
    Vec params;                          // after the update, dim <= 3 only
    Vec layer_l1;                        // MLP only, per layer
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0.0;    // mean of the epoch's mini-batch losses
    double full_loss = 0.0;    // objective at the end of the epoch
    std::optional<double> metric;        // MLP: accuracy (classification)
    std::optional<AlphaSummary> alpha;   // rates used during the epoch
    Vec layer_l1;                        // MLP: epoch mean of the step norms
};

struct TrajectorySummary {
    double best_loss = 0.0;
    std::optional<double> best_metric;
    std::optional<std::size_t> epochs_to_threshold;
    bool diverged = false;
    double final_loss = 0.0;
    std::optional<double> final_metric;
    std::optional<std::size_t> escaped_at_step;
    std::size_t epochs_completed = 0;
    std::size_t steps_completed = 0;
    Vec final_params;   // dim <= 3 only
};

struct TrajectoryHeader {
    std::string objective;
    std::string backbone;
    bool active = false;
    std::string mode;
    double alpha0 = 0.0;
    double alpha_low = 0.0;
    double alpha_high = 0.0;
    std::size_t batch_size = 0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    std::size_t dim = 0;
};

struct Trajectory {
    TrajectoryHeader header;
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    TrajectorySummary final;
    std::vector<std::string> warnings;
};

/// Mini-batch loop: per batch gradient, accumulate (active only), backbone
/// step with the epoch's effective rates; per epoch end_epoch (active only).
/// Divergence (non-finite values or loss - initial > 1e6 * max(|initial|, 1))
/// truncates the trajectory and sets final.diverged. Deterministic in cfg.
Trajectory run_training(const RunConfig& cfg);

std::string task_name(const TaskSpec& task);

} // namespace activelr
