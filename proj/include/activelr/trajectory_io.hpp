#pragma once

#include "activelr/harness.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace activelr {

enum class TrajectoryFormat { JsonLines, Csv };

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File content is not a valid trajectory; line() is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// JSON lines: one object per line with a "type" field, in this order:
///   header   objective, backbone, active, mode, alpha0, alpha_low, alpha_high,
///            batch_size, epochs, seed, dim
///   warning  message
///   step     epoch, step, loss, [alpha_min, alpha_mean, alpha_max], [params], [layer_l1]
///   epoch    epoch, mean_loss, full_loss, [metric], [alpha_*], [layer_l1]
///   final    best_loss, best_metric, epochs_to_threshold, diverged, final_loss,
///            final_metric, escaped_at_step, epochs_completed, steps_completed,
///            final_params
/// Absent optionals are written as null. Reals use 17 significant digits.
///
/// CSV: column header
///   epoch,step,loss,alpha_min,alpha_mean,alpha_max,layer_l1_0..,theta_0..
/// then one row per step record (empty cells for absent values), followed by
/// '#'-prefixed lines carrying the header, warning, epoch and final records in
/// their JSON form ("# epoch {...}").
std::string format_trajectory(const Trajectory& traj, TrajectoryFormat format);
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path, TrajectoryFormat format);

/// Detects the format from the first line. Throws IoError or ParseError.
Trajectory parse_trajectory(std::string_view text);
Trajectory read_trajectory(const std::filesystem::path& path);

std::optional<TrajectoryFormat> parse_trajectory_format(std::string_view text);
/// ".csv" selects Csv, anything else JsonLines.
TrajectoryFormat format_for_path(const std::filesystem::path& path);

/// %.17g, or "null" for non-finite values.
std::string format_real(double v);

} // namespace activelr
