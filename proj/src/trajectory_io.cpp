#include "activelr/trajectory_io.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace activelr {

namespace {

using nlohmann::json;

// Minimal writer that keeps key order and number formatting under control.
class ObjectWriter {
public:
    explicit ObjectWriter(std::string_view type) { key("type").append(quote(type)); }

    ObjectWriter& real(std::string_view k, double v) {
        key(k).append(format_real(v));
        return *this;
    }
    ObjectWriter& real(std::string_view k, const std::optional<double>& v) {
        key(k).append(v ? format_real(*v) : "null");
        return *this;
    }
    ObjectWriter& count(std::string_view k, std::uint64_t v) {
        key(k).append(std::to_string(v));
        return *this;
    }
    ObjectWriter& count(std::string_view k, const std::optional<std::size_t>& v) {
        key(k).append(v ? std::to_string(*v) : "null");
        return *this;
    }
    ObjectWriter& flag(std::string_view k, bool v) {
        key(k).append(v ? "true" : "false");
        return *this;
    }
    ObjectWriter& text(std::string_view k, std::string_view v) {
        key(k).append(quote(v));
        return *this;
    }
    ObjectWriter& reals(std::string_view k, const Vec& v) {
        std::string& out = key(k);
        out += '[';
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ',';
            out += format_real(v[i]);
        }
        out += ']';
        return *this;
    }
    ObjectWriter& alpha(const std::optional<AlphaSummary>& a) {
        real("alpha_min", a ? std::optional<double>(a->min) : std::nullopt);
        real("alpha_mean", a ? std::optional<double>(a->mean) : std::nullopt);
        real("alpha_max", a ? std::optional<double>(a->max) : std::nullopt);
        return *this;
    }
    std::string str() const { return body_ + '}'; }

private:
    static std::string quote(std::string_view s) { return json(std::string(s)).dump(); }
    std::string& key(std::string_view k) {
        body_ += body_.empty() ? '{' : ',';
        body_ += quote(k);
        body_ += ':';
        return body_;
    }
    std::string body_;
};

std::string header_line(const TrajectoryHeader& h) {
    return ObjectWriter("header")
        .text("objective", h.objective)
        .text("backbone", h.backbone)
        .flag("active", h.active)
        .text("mode", h.mode)
        .real("alpha0", h.alpha0)
        .real("alpha_low", h.alpha_low)
        .real("alpha_high", h.alpha_high)
        .count("batch_size", h.batch_size)
        .count("epochs", h.epochs)
        .count("seed", h.seed)
        .count("dim", h.dim)
        .str();
}

std::string warning_line(const std::string& w) { return ObjectWriter("warning").text("message", w).str(); }

std::string step_line(const StepRecord& s) {
    return ObjectWriter("step")
        .count("epoch", s.epoch)
        .count("step", s.step)
        .real("loss", s.loss)
        .alpha(s.alpha)
        .reals("params", s.params)
        .reals("layer_l1", s.layer_l1)
        .str();
}

std::string epoch_line(const EpochRecord& e) {
    return ObjectWriter("epoch")
        .count("epoch", e.epoch)
        .real("mean_loss", e.mean_loss)
        .real("full_loss", e.full_loss)
        .real("metric", e.metric)
        .alpha(e.alpha)
        .reals("layer_l1", e.layer_l1)
        .str();
}

std::string final_line(const TrajectorySummary& f) {
    return ObjectWriter("final")
        .real("best_loss", f.best_loss)
        .real("best_metric", f.best_metric)
        .count("epochs_to_threshold", f.epochs_to_threshold)
        .flag("diverged", f.diverged)
        .real("final_loss", f.final_loss)
        .real("final_metric", f.final_metric)
        .count("escaped_at_step", f.escaped_at_step)
        .count("epochs_completed", f.epochs_completed)
        .count("steps_completed", f.steps_completed)
        .reals("final_params", f.final_params)
        .str();
}

// ---- reading ----

double real_field(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k)) throw ParseError(std::string("missing field '") + k + "'", line);
    const json& v = j.at(k);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw ParseError(std::string("field '") + k + "' is not a number", line);
    return v.get<double>();
}

std::optional<double> optional_real(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return real_field(j, k, line);
}

std::uint64_t count_field(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k) || !j.at(k).is_number_unsigned()) {
        throw ParseError(std::string("field '") + k + "' must be a non-negative integer", line);
    }
    return j.at(k).get<std::uint64_t>();
}

std::optional<std::size_t> optional_count(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return static_cast<std::size_t>(count_field(j, k, line));
}

Vec reals_field(const json& j, const char* k, std::size_t line) {
    Vec out;
    if (!j.contains(k) || j.at(k).is_null()) return out;
    if (!j.at(k).is_array()) throw ParseError(std::string("field '") + k + "' must be an array", line);
    for (const auto& v : j.at(k)) {
        if (v.is_null()) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        } else if (v.is_number()) {
            out.push_back(v.get<double>());
        } else {
            throw ParseError(std::string("field '") + k + "' holds a non-number", line);
        }
    }
    return out;
}

std::string text_field(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k) || !j.at(k).is_string()) throw ParseError(std::string("field '") + k + "' must be a string", line);
    return j.at(k).get<std::string>();
}

bool flag_field(const json& j, const char* k, std::size_t line) {
    if (!j.contains(k) || !j.at(k).is_boolean()) throw ParseError(std::string("field '") + k + "' must be a boolean", line);
    return j.at(k).get<bool>();
}

std::optional<AlphaSummary> alpha_fields(const json& j, std::size_t line) {
    const auto mn = optional_real(j, "alpha_min", line);
    const auto me = optional_real(j, "alpha_mean", line);
    const auto mx = optional_real(j, "alpha_max", line);
    if (!mn && !me && !mx) return std::nullopt;
    if (!mn || !me || !mx) throw ParseError("alpha_min/mean/max must be present together", line);
    return AlphaSummary{*mn, *me, *mx};
}

json parse_object(std::string_view text, std::size_t line) {
    json j = json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("not a JSON object", line);
    if (!j.contains("type") || !j.at("type").is_string()) throw ParseError("record has no \"type\"", line);
    return j;
}

StepRecord parse_step(const json& j, std::size_t line) {
    StepRecord s;
    s.epoch = count_field(j, "epoch", line);
    s.step = count_field(j, "step", line);
    s.loss = real_field(j, "loss", line);
    s.alpha = alpha_fields(j, line);
    s.params = reals_field(j, "params", line);
    s.layer_l1 = reals_field(j, "layer_l1", line);
    return s;
}

// Applies a non-step record; returns false for an unknown type.
bool apply_record(Trajectory& t, const json& j, std::size_t line, bool& seen_header) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
        auto& h = t.header;
        h.objective = text_field(j, "objective", line);
        h.backbone = text_field(j, "backbone", line);
        h.active = flag_field(j, "active", line);
        h.mode = text_field(j, "mode", line);
        h.alpha0 = real_field(j, "alpha0", line);
        h.alpha_low = real_field(j, "alpha_low", line);
        h.alpha_high = real_field(j, "alpha_high", line);
        h.batch_size = count_field(j, "batch_size", line);
        h.epochs = count_field(j, "epochs", line);
        h.seed = count_field(j, "seed", line);
        h.dim = count_field(j, "dim", line);
        seen_header = true;
    } else if (type == "warning") {
        t.warnings.push_back(text_field(j, "message", line));
    } else if (type == "epoch") {
        EpochRecord e;
        e.epoch = count_field(j, "epoch", line);
        e.mean_loss = real_field(j, "mean_loss", line);
        e.full_loss = real_field(j, "full_loss", line);
        e.metric = optional_real(j, "metric", line);
        e.alpha = alpha_fields(j, line);
        e.layer_l1 = reals_field(j, "layer_l1", line);
        t.epochs.push_back(std::move(e));
    } else if (type == "final") {
        auto& f = t.final;
        f.best_loss = real_field(j, "best_loss", line);
        f.best_metric = optional_real(j, "best_metric", line);
        f.epochs_to_threshold = optional_count(j, "epochs_to_threshold", line);
        f.diverged = flag_field(j, "diverged", line);
        f.final_loss = real_field(j, "final_loss", line);
        f.final_metric = optional_real(j, "final_metric", line);
        f.escaped_at_step = optional_count(j, "escaped_at_step", line);
        f.epochs_completed = count_field(j, "epochs_completed", line);
        f.steps_completed = count_field(j, "steps_completed", line);
        f.final_params = reals_field(j, "final_params", line);
    } else if (type == "step") {
        t.steps.push_back(parse_step(j, line));
    } else {
        return false;
    }
    return true;
}

std::size_t layer_columns(const Trajectory& t) {
    std::size_t n = 0;
    for (const auto& s : t.steps) n = std::max(n, s.layer_l1.size());
    return n;
}

std::size_t param_columns(const Trajectory& t) {
    std::size_t n = 0;
    for (const auto& s : t.steps) n = std::max(n, s.params.size());
    return n;
}

std::string csv_header(std::size_t layers, std::size_t params) {
    std::string h = "epoch,step,loss,alpha_min,alpha_mean,alpha_max";
    for (std::size_t k = 0; k < layers; ++k) h += ",layer_l1_" + std::to_string(k);
    for (std::size_t k = 0; k < params; ++k) h += ",theta_" + std::to_string(k);
    return h;
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::optional<double> csv_real(const std::string& cell, std::size_t line) {
    if (cell.empty()) return std::nullopt;
    if (cell == "null") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used == cell.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("bad number '" + cell + "'", line);
}

std::size_t csv_count(const std::string& cell, std::size_t line) {
    if (cell.empty() || cell.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError("bad integer '" + cell + "'", line);
    }
    return static_cast<std::size_t>(std::stoull(cell));
}

Trajectory parse_jsonl(std::string_view text) {
    Trajectory t;
    bool seen_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_object(line, line_no);
        if (!apply_record(t, j, line_no, seen_header)) {
            throw ParseError("unknown record type '" + j.at("type").get<std::string>() + "'", line_no);
        }
    }
    if (!seen_header) throw ParseError("no header record", line_no == 0 ? 1 : line_no);
    return t;
}

Trajectory parse_csv(std::string_view text) {
    Trajectory t;
    bool seen_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<std::string> columns;
    std::size_t layers = 0;
    std::size_t params = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            columns = split_csv(line);
            if (columns.size() < 6 || csv_header(0, 0) != std::string(line.substr(0, csv_header(0, 0).size()))) {
                throw ParseError("unexpected CSV column header", line_no);
            }
            for (std::size_t c = 6; c < columns.size(); ++c) {
                if (columns[c].rfind("layer_l1_", 0) == 0) {
                    ++layers;
                } else if (columns[c].rfind("theta_", 0) == 0) {
                    ++params;
                } else {
                    throw ParseError("unknown column '" + columns[c] + "'", line_no);
                }
            }
            if (csv_header(layers, params) != std::string(line)) throw ParseError("unexpected CSV column order", line_no);
            continue;
        }
        if (line.front() == '#') {
            const std::size_t brace = line.find('{');
            if (brace == std::string_view::npos) throw ParseError("comment line without a record", line_no);
            const json j = parse_object(line.substr(brace), line_no);
            if (j.at("type") == "step" || !apply_record(t, j, line_no, seen_header)) {
                throw ParseError("unexpected record in comment line", line_no);
            }
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != columns.size()) throw ParseError("wrong number of cells", line_no);
        StepRecord s;
        s.epoch = csv_count(cells[0], line_no);
        s.step = csv_count(cells[1], line_no);
        const auto loss = csv_real(cells[2], line_no);
        if (!loss) throw ParseError("missing loss", line_no);
        s.loss = *loss;
        const auto mn = csv_real(cells[3], line_no);
        const auto me = csv_real(cells[4], line_no);
        const auto mx = csv_real(cells[5], line_no);
        if (mn && me && mx) {
            s.alpha = AlphaSummary{*mn, *me, *mx};
        } else if (mn || me || mx) {
            throw ParseError("alpha_min/mean/max must be present together", line_no);
        }
        for (std::size_t k = 0; k < layers; ++k) {
            if (auto v = csv_real(cells[6 + k], line_no)) s.layer_l1.push_back(*v);
        }
        for (std::size_t k = 0; k < params; ++k) {
            if (auto v = csv_real(cells[6 + layers + k], line_no)) s.params.push_back(*v);
        }
        t.steps.push_back(std::move(s));
    }
    if (columns.empty()) throw ParseError("empty CSV", 1);
    if (!seen_header) throw ParseError("no header record", line_no);
    return t;
}

} // namespace

std::string format_real(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_trajectory(const Trajectory& traj, TrajectoryFormat format) {
    std::string out;
    if (format == TrajectoryFormat::JsonLines) {
        out += header_line(traj.header) + '\n';
        for (const auto& w : traj.warnings) out += warning_line(w) + '\n';
        for (const auto& s : traj.steps) out += step_line(s) + '\n';
        for (const auto& e : traj.epochs) out += epoch_line(e) + '\n';
        out += final_line(traj.final) + '\n';
        return out;
    }

    const std::size_t layers = layer_columns(traj);
    const std::size_t params = param_columns(traj);
    out += csv_header(layers, params) + '\n';
    auto cell = [&out](const std::optional<double>& v) {
        out += ',';
        if (v) out += format_real(*v);
    };
    for (const auto& s : traj.steps) {
        out += std::to_string(s.epoch) + ',' + std::to_string(s.step) + ',' + format_real(s.loss);
        cell(s.alpha ? std::optional<double>(s.alpha->min) : std::nullopt);
        cell(s.alpha ? std::optional<double>(s.alpha->mean) : std::nullopt);
        cell(s.alpha ? std::optional<double>(s.alpha->max) : std::nullopt);
        for (std::size_t k = 0; k < layers; ++k) {
            cell(k < s.layer_l1.size() ? std::optional<double>(s.layer_l1[k]) : std::nullopt);
        }
        for (std::size_t k = 0; k < params; ++k) {
            cell(k < s.params.size() ? std::optional<double>(s.params[k]) : std::nullopt);
        }
        out += '\n';
    }
    out += "# header " + header_line(traj.header) + '\n';
    for (const auto& w : traj.warnings) out += "# warning " + warning_line(w) + '\n';
    for (const auto& e : traj.epochs) out += "# epoch " + epoch_line(e) + '\n';
    out += "# final " + final_line(traj.final) + '\n';
    return out;
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path, TrajectoryFormat format) {
    const std::string body = format_trajectory(traj, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Trajectory parse_trajectory(std::string_view text) {
    std::size_t first = 0;
    while (first < text.size() && (text[first] == '\n' || text[first] == '\r')) ++first;
    if (first >= text.size()) throw ParseError("empty trajectory", 1);
    if (text[first] == '{') return parse_jsonl(text);
    return parse_csv(text);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
    return parse_trajectory(buf.str());
}

std::optional<TrajectoryFormat> parse_trajectory_format(std::string_view text) {
    if (text == "jsonl") return TrajectoryFormat::JsonLines;
    if (text == "csv") return TrajectoryFormat::Csv;
    return std::nullopt;
}

TrajectoryFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? TrajectoryFormat::Csv : TrajectoryFormat::JsonLines;
}

} // namespace activelr
