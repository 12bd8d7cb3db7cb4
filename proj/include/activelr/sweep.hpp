#pragma once

#include "activelr/harness.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace activelr {

/// Outcome of every seed at one grid value for one variant.
struct SweepCell {
    double value = 0.0;                 // learning rate or batch size
    std::vector<double> final_losses;   // non-diverged seeds only
    std::vector<double> final_metrics;  // non-diverged seeds with a metric
    std::size_t runs = 0;
    std::size_t diverged_runs = 0;
    double mean_loss = 0.0;
    double std_loss = 0.0;
    std::optional<double> mean_metric;
    std::optional<double> std_metric;

    bool all_diverged() const { return runs > 0 && diverged_runs == runs; }
};

struct SweepSeries {
    bool active = false;
    std::vector<SweepCell> cells;
    /// max - min of the cell mean final losses over cells that did not all
    /// diverge; empty when no such cell exists.
    std::optional<double> loss_spread;
    std::optional<double> metric_spread;
    /// Batch-size sweeps with a full-batch entry: best cell mean metric minus
    /// the full-batch cell mean metric.
    std::optional<double> full_batch_metric_drop;
    bool spread_undefined() const { return !loss_spread.has_value(); }
};

struct SweepReport {
    std::string kind;           // "lr" or "batch-size"
    std::string objective;
    std::string backbone;
    std::vector<double> grid;   // after deduplication / clamping
    std::size_t n_seeds = 0;
    SweepSeries vanilla;
    SweepSeries active;
    double seconds = 0.0;
};

/// 5 * 10^n for n = -7, -6.5, ..., -3 (nine rates).
std::vector<double> default_lr_grid();

/// Runs vanilla and active for every grid rate and seed (base.seed + k);
/// the rate replaces base.active_cfg.alpha0. Cells run concurrently on
/// `threads` workers (0: hardware concurrency). Throws std::invalid_argument
/// for an empty grid, n_seeds == 0 or a non-positive rate.
SweepReport lr_sensitivity_sweep(const RunConfig& base, const std::vector<double>& lr_grid,
                                 std::size_t n_seeds, std::size_t threads = 0);

/// Same for batch sizes on an MLP task. Sizes at or above the dataset size
/// become the full batch; duplicates are dropped, first occurrence wins.
SweepReport batch_size_sweep(const RunConfig& base, const std::vector<std::size_t>& sizes,
                             std::size_t n_seeds, std::size_t threads = 0);

std::string to_json(const SweepReport& report);

} // namespace activelr
