#include "activelr/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace activelr {

namespace {

constexpr double kClusterTruncation = 1.8;

void standardize(Dataset& data) {
    const std::size_t n = data.size();
    const std::size_t d = data.n_features;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data.features[i * d + j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = data.features[i * d + j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            data.features[i * d + j] = (data.features[i * d + j] - mean) / sd;
        }
    }
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Dataset make_synthetic_dataset(DatasetKind kind, std::size_t n, double noise, std::uint64_t seed) {
    if (n < 8) throw std::invalid_argument("make_synthetic_dataset: need at least 8 samples");
    if (!std::isfinite(noise) || noise < 0.0) {
        throw std::invalid_argument("make_synthetic_dataset: noise must be non-negative");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset data;
    data.kind = kind;
    switch (kind) {
    case DatasetKind::LinearRegression: {
        data.n_features = 3;
        data.features.resize(n * 3);
        for (double& x : data.features) x = normal(rng);
        standardize(data);
        data.generating_weights.resize(4);
        for (double& w : data.generating_weights) w = normal(rng);
        data.targets.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double y = data.generating_weights[3];
            for (std::size_t j = 0; j < 3; ++j) y += data.generating_weights[j] * data.features[i * 3 + j];
            data.targets[i] = y + noise * normal(rng);
        }
        break;
    }
    case DatasetKind::TwoClusters: {
        data.n_features = 2;
        data.n_classes = 2;
        const double angle = 2.0 * M_PI * unit(rng);
        const double ux = std::cos(angle);
        const double uy = std::sin(angle);
        data.features.resize(n * 2);
        data.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(i % 2);
            const double sign = label == 0 ? -1.0 : 1.0;
            double zx = 0.0;
            double zy = 0.0;
            do {
                zx = normal(rng);
                zy = normal(rng);
            } while (zx * zx + zy * zy > kClusterTruncation * kClusterTruncation);
            data.features[2 * i] = sign * 2.0 * ux + noise * zx;
            data.features[2 * i + 1] = sign * 2.0 * uy + noise * zy;
            data.labels[i] = label;
        }
        standardize(data);
        break;
    }
    case DatasetKind::TwoSpirals: {
        data.n_features = 2;
        data.n_classes = 2;
        data.features.resize(n * 2);
        data.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int label = static_cast<int>(i % 2);
            const double t = 0.25 + 2.75 * unit(rng);   // turns in [0.25, 3]
            const double radius = t;
            const double phase = 2.0 * M_PI * t / 2.0 + (label == 0 ? 0.0 : M_PI);
            data.features[2 * i] = radius * std::cos(phase) + noise * normal(rng);
            data.features[2 * i + 1] = radius * std::sin(phase) + noise * normal(rng);
            data.labels[i] = label;
        }
        standardize(data);
        break;
    }
    }
    return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (std::size_t j = 0; j < data.n_features; ++j) out << 'x' << j << ',';
    out << (data.is_classification() ? "label" : "y") << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.n_features; ++j) {
            out << format_number(data.features[i * data.n_features + j]) << ',';
        }
        if (data.is_classification()) {
            out << data.labels[i];
        } else {
            out << format_number(data.targets[i]);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2) throw std::runtime_error("dataset header needs at least two columns");
    Dataset data;
    data.n_features = header.size() - 1;
    const bool classification = header.back() == "label";
    if (!classification && header.back() != "y") {
        throw std::runtime_error("dataset header must end with 'y' or 'label'");
    }
    data.kind = classification ? DatasetKind::TwoClusters : DatasetKind::LinearRegression;

    std::size_t line_no = 1;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (values.size() != header.size()) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": wrong column count");
        }
        data.features.insert(data.features.end(), values.begin(), values.end() - 1);
        if (classification) {
            const int label = static_cast<int>(values.back());
            data.labels.push_back(label);
            max_label = std::max(max_label, label);
        } else {
            data.targets.push_back(values.back());
        }
    }
    if (classification) data.n_classes = static_cast<std::size_t>(std::max(max_label + 1, 2));
    return data;
}

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::LinearRegression: return "linear-regression";
    case DatasetKind::TwoClusters: return "two-clusters";
    case DatasetKind::TwoSpirals: return "two-spirals";
    }
    return "unknown";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view text) {
    if (text == "linear-regression") return DatasetKind::LinearRegression;
    if (text == "two-clusters") return DatasetKind::TwoClusters;
    if (text == "two-spirals") return DatasetKind::TwoSpirals;
    return std::nullopt;
}

} // namespace activelr
