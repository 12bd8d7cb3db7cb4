#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace activelr {

enum class DatasetKind { LinearRegression, TwoClusters, TwoSpirals };

/// Row-major feature matrix plus either regression targets or class labels.
struct Dataset {
    DatasetKind kind = DatasetKind::TwoClusters;
    std::size_t n_features = 0;
    std::vector<double> features;          // size() * n_features
    std::vector<double> targets;           // regression only, one per row
    std::vector<int> labels;               // classification only, in [0, n_classes)
    std::size_t n_classes = 0;             // 0 for regression
    std::vector<double> generating_weights; // LinearRegression: weights then bias

    std::size_t size() const noexcept {
        return n_features == 0 ? 0 : features.size() / n_features;
    }
    bool is_classification() const noexcept { return n_classes > 0; }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }
};

/// Deterministic given seed; features standardized to zero mean and unit
/// variance per column.
///  - LinearRegression: 3 features, y = x.w + b + noise * N(0,1) on the
///    standardized features (noise = 0 gives an exact fit).
///  - TwoClusters: 2 features, centers 4 units apart, per-coordinate spread
///    `noise` with offsets truncated to 1.8 spreads; noise = 1 is a 4-sigma
///    separation and linearly separable.
///  - TwoSpirals: 2 interleaved spirals, Gaussian jitter `noise`.
/// Throws std::invalid_argument for n < 8 or negative noise.
Dataset make_synthetic_dataset(DatasetKind kind, std::size_t n, double noise, std::uint64_t seed);

/// CSV with a header row. Columns x0..x{d-1} followed by `y` (regression)
/// or `label` (classification).
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

std::string_view to_string(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view text);

} // namespace activelr
