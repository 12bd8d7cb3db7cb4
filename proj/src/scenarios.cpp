#include "activelr/scenarios.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace activelr {

RunConfig toy_scenario(ToyFunction fn, bool active, std::uint64_t seed) {
    RunConfig cfg;
    cfg.backbone.kind = BackboneKind::AdamW;
    cfg.backbone.weight_decay = 0.0;
    cfg.active = active;
    cfg.active_cfg.mode = AdaptMode::Absolute;
    cfg.seed = seed;

    AnalyticTask task;
    switch (fn) {
    case ToyFunction::Cubic:
        task.objective = "cubic";
        task.init = {5.0};
        task.steps_per_epoch = 1000;
        task.grad_noise = 5.0;
        task.stop_on_escape = true;
        cfg.active_cfg.alpha0 = 1e-5;
        cfg.epochs = 500;
        cfg.record_every = 1000;
        break;
    case ToyFunction::Multimodal:
        task.objective = "multimodal";
        task.init = {-3.99, 6.01};
        task.grad_noise = 0.01;
        task.stop_on_escape = true;
        cfg.active_cfg.alpha0 = 1e-3;
        cfg.epochs = 1000;
        break;
    case ToyFunction::Saddle:
        task.objective = "saddle";
        task.init = {0.5, 0.1};
        cfg.active_cfg.alpha0 = 1e-3;
        cfg.epochs = 50;
        break;
    }
    cfg.task = task;
    return cfg;
}

const std::vector<ToyFunction>& all_toy_functions() {
    static const std::vector<ToyFunction> fns = {ToyFunction::Cubic, ToyFunction::Multimodal, ToyFunction::Saddle};
    return fns;
}

std::string_view to_string(ToyFunction fn) {
    switch (fn) {
    case ToyFunction::Cubic: return "cubic";
    case ToyFunction::Multimodal: return "multimodal";
    case ToyFunction::Saddle: return "saddle";
    }
    return "unknown";
}

std::optional<ToyFunction> parse_toy_function(std::string_view text) {
    for (ToyFunction fn : all_toy_functions()) {
        if (to_string(fn) == text) return fn;
    }
    return std::nullopt;
}

double distance_to_nearest(std::span<const double> p, const std::vector<Vec>& targets) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : targets) {
        if (t.size() != p.size()) throw std::invalid_argument("distance_to_nearest: dimension mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
        best = std::min(best, std::sqrt(s));
    }
    return best;
}

std::optional<std::size_t> first_step_within(const Trajectory& traj, const std::vector<Vec>& targets,
                                             double radius) {
    for (const auto& s : traj.steps) {
        if (!s.params.empty() && distance_to_nearest(s.params, targets) < radius) return s.step;
    }
    return std::nullopt;
}

} // namespace activelr
