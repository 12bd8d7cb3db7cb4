#include "activelr/sweep.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace activelr {

namespace {

struct Job {
    std::size_t cell = 0;
    bool active = false;
    RunConfig cfg;
};

struct Outcome {
    bool diverged = false;
    double final_loss = 0.0;
    std::optional<double> final_metric;
};

std::vector<Outcome> run_jobs(const std::vector<Job>& jobs, std::size_t threads) {
    std::vector<Outcome> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                const Trajectory t = run_training(jobs[i].cfg);
                results[i].diverged = t.final.diverged;
                results[i].final_loss = t.final.final_loss;
                results[i].final_metric = t.final.final_metric;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

void finish_series(SweepSeries& s) {
    std::optional<double> lo;
    std::optional<double> hi;
    std::optional<double> mlo;
    std::optional<double> mhi;
    for (auto& c : s.cells) {
        const auto [m, sd] = mean_std(c.final_losses);
        c.mean_loss = m;
        c.std_loss = sd;
        if (!c.final_metrics.empty()) {
            const auto [mm, msd] = mean_std(c.final_metrics);
            c.mean_metric = mm;
            c.std_metric = msd;
        }
        if (c.all_diverged() || c.final_losses.empty()) continue;
        lo = lo ? std::min(*lo, m) : m;
        hi = hi ? std::max(*hi, m) : m;
        if (c.mean_metric) {
            mlo = mlo ? std::min(*mlo, *c.mean_metric) : *c.mean_metric;
            mhi = mhi ? std::max(*mhi, *c.mean_metric) : *c.mean_metric;
        }
    }
    if (lo) s.loss_spread = *hi - *lo;
    if (mlo) s.metric_spread = *mhi - *mlo;
}

SweepReport run_sweep(const RunConfig& base, const std::vector<RunConfig>& per_cell, const std::vector<double>& grid,
                      std::size_t n_seeds, std::size_t threads, std::string kind) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < per_cell.size(); ++c) {
        for (int variant = 0; variant < 2; ++variant) {
            for (std::size_t k = 0; k < n_seeds; ++k) {
                Job j;
                j.cell = c;
                j.active = variant == 1;
                j.cfg = per_cell[c];
                j.cfg.active = j.active;
                j.cfg.seed = base.seed + k;
                j.cfg.record_every = std::numeric_limits<std::size_t>::max();
                jobs.push_back(std::move(j));
            }
        }
    }
    const auto outcomes = run_jobs(jobs, threads);

    SweepReport report;
    report.kind = std::move(kind);
    report.objective = task_name(base.task);
    report.backbone = std::string(to_string(base.backbone.kind));
    report.grid = grid;
    report.n_seeds = n_seeds;
    report.vanilla.active = false;
    report.active.active = true;
    for (double g : grid) {
        report.vanilla.cells.push_back(SweepCell{g, {}, {}, 0, 0, 0.0, 0.0, std::nullopt, std::nullopt});
        report.active.cells.push_back(SweepCell{g, {}, {}, 0, 0, 0.0, 0.0, std::nullopt, std::nullopt});
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        SweepCell& cell = (jobs[i].active ? report.active : report.vanilla).cells[jobs[i].cell];
        ++cell.runs;
        if (outcomes[i].diverged) {
            ++cell.diverged_runs;
            continue;
        }
        cell.final_losses.push_back(outcomes[i].final_loss);
        if (outcomes[i].final_metric) cell.final_metrics.push_back(*outcomes[i].final_metric);
    }
    finish_series(report.vanilla);
    finish_series(report.active);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json real_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json optional_json(const std::optional<double>& v) {
    if (v) return real_or_null(*v);
    return nullptr;
}

nlohmann::json series_json(const SweepSeries& s) {
    nlohmann::json j;
    j["active"] = s.active;
    j["loss_spread"] = optional_json(s.loss_spread);
    j["metric_spread"] = optional_json(s.metric_spread);
    j["spread_undefined"] = s.spread_undefined();
    j["full_batch_metric_drop"] = optional_json(s.full_batch_metric_drop);
    j["cells"] = nlohmann::json::array();
    for (const auto& c : s.cells) {
        nlohmann::json e;
        e["value"] = c.value;
        e["runs"] = c.runs;
        e["diverged_runs"] = c.diverged_runs;
        e["all_diverged"] = c.all_diverged();
        e["mean_loss"] = real_or_null(c.mean_loss);
        e["std_loss"] = real_or_null(c.std_loss);
        e["mean_metric"] = optional_json(c.mean_metric);
        e["std_metric"] = optional_json(c.std_metric);
        e["final_losses"] = c.final_losses;
        e["final_metrics"] = c.final_metrics;
        j["cells"].push_back(e);
    }
    return j;
}

} // namespace

std::vector<double> default_lr_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 8; ++k) grid.push_back(5.0 * std::pow(10.0, -7.0 + 0.5 * k));
    return grid;
}

SweepReport lr_sensitivity_sweep(const RunConfig& base, const std::vector<double>& lr_grid, std::size_t n_seeds,
                                 std::size_t threads) {
    if (lr_grid.empty()) throw std::invalid_argument("lr sweep: grid is empty");
    if (n_seeds == 0) throw std::invalid_argument("lr sweep: need at least one seed");
    std::vector<RunConfig> cells;
    for (double lr : lr_grid) {
        if (!std::isfinite(lr) || lr <= 0.0) throw std::invalid_argument("lr sweep: rates must be positive");
        RunConfig c = base;
        c.active_cfg.alpha0 = lr;
        c.validate();
        cells.push_back(std::move(c));
    }
    return run_sweep(base, cells, lr_grid, n_seeds, threads, "lr");
}

SweepReport batch_size_sweep(const RunConfig& base, const std::vector<std::size_t>& sizes, std::size_t n_seeds,
                             std::size_t threads) {
    if (sizes.empty()) throw std::invalid_argument("batch-size sweep: no sizes given");
    if (n_seeds == 0) throw std::invalid_argument("batch-size sweep: need at least one seed");
    const auto* mlp = std::get_if<MlpTask>(&base.task);
    if (!mlp) throw std::invalid_argument("batch-size sweep: needs an MLP task");
    const std::size_t n = mlp->samples;

    std::vector<std::size_t> unique;
    for (std::size_t s : sizes) {
        if (s == 0) throw std::invalid_argument("batch-size sweep: sizes must be positive");
        const std::size_t clamped = std::min(s, n);
        if (std::find(unique.begin(), unique.end(), clamped) == unique.end()) unique.push_back(clamped);
    }
    std::vector<RunConfig> cells;
    std::vector<double> grid;
    for (std::size_t s : unique) {
        RunConfig c = base;
        c.batch_size = s;
        c.validate();
        cells.push_back(std::move(c));
        grid.push_back(static_cast<double>(s));
    }
    SweepReport report = run_sweep(base, cells, grid, n_seeds, threads, "batch-size");

    for (SweepSeries* s : {&report.vanilla, &report.active}) {
        std::optional<double> best;
        std::optional<double> full;
        for (const auto& c : s->cells) {
            if (!c.mean_metric) continue;
            best = best ? std::max(*best, *c.mean_metric) : *c.mean_metric;
            if (static_cast<std::size_t>(c.value) == n) full = c.mean_metric;
        }
        if (best && full) s->full_batch_metric_drop = *best - *full;
    }
    return report;
}

std::string to_json(const SweepReport& r) {
    nlohmann::json j;
    j["kind"] = r.kind;
    j["objective"] = r.objective;
    j["backbone"] = r.backbone;
    j["grid"] = r.grid;
    j["n_seeds"] = r.n_seeds;
    j["vanilla"] = series_json(r.vanilla);
    j["active"] = series_json(r.active);
    j["seconds"] = r.seconds;
    return j.dump(2);
}

} // namespace activelr
