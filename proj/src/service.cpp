#include "activelr/service.hpp"

#include "activelr/harness.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <set>
#include <stdexcept>
#include <thread>

namespace activelr {

namespace {

using nlohmann::json;

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct Bounds {
    double x_min, x_max, y_min, y_max;
};

Bounds suggested_bounds(std::string_view name) {
    if (name == "cubic") return {-1.0, 6.0, 0.0, 0.0};
    if (name == "mse_line") return {-1.0, 4.0, 0.0, 0.0};
    if (name == "multimodal") return {-6.0, 3.0, -5.0, 9.0};
    if (name == "saddle") return {-1.5, 1.5, -1.75, 1.75};
    return {-3.0, 3.0, -3.0, 3.0};
}

json bounds_json(const Bounds& b, std::size_t dim) {
    json j;
    j["x_min"] = b.x_min;
    j["x_max"] = b.x_max;
    if (dim == 2) {
        j["y_min"] = b.y_min;
        j["y_max"] = b.y_max;
    }
    return j;
}

class RequestError : public std::runtime_error {
public:
    RequestError(int status, std::string field, const std::string& what)
        : std::runtime_error(what), status_(status), field_(std::move(field)) {}
    int status() const { return status_; }
    const std::string& field() const { return field_; }

private:
    int status_;
    std::string field_;
};

[[noreturn]] void bad(const std::string& field, const std::string& what) { throw RequestError(400, field, what); }

double real_field(const json& j, const char* k, double fallback, double lo, double hi, bool lo_open) {
    if (!j.contains(k)) return fallback;
    const json& v = j.at(k);
    if (!v.is_number()) bad(k, std::string("'") + k + "' must be a number");
    const double x = v.get<double>();
    const bool low_ok = lo_open ? x > lo : x >= lo;
    if (!std::isfinite(x) || !low_ok || x > hi) {
        bad(k, std::string("'") + k + "' must lie in " + (lo_open ? "(" : "[") + format_number(lo) + ", " +
                   format_number(hi) + "]");
    }
    return x;
}

std::uint64_t count_field(const json& j, const char* k, std::uint64_t fallback) {
    if (!j.contains(k)) return fallback;
    const json& v = j.at(k);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) bad(k, std::string("'") + k + "' must be non-negative");
    bad(k, std::string("'") + k + "' must be an integer");
}

std::string text_field(const json& j, const char* k, const std::string& fallback) {
    if (!j.contains(k)) return fallback;
    if (!j.at(k).is_string()) bad(k, std::string("'") + k + "' must be a string");
    return j.at(k).get<std::string>();
}

json error_body(const std::string& message, const std::string& field) {
    json j;
    j["error"] = message;
    if (!field.empty()) j["field"] = field;
    return j;
}

bool localhost_origin(const std::string& origin) {
    for (const char* prefix : {"http://localhost", "http://127.0.0.1", "https://localhost", "https://127.0.0.1",
                               "http://[::1]"}) {
        const std::string p(prefix);
        if (origin.compare(0, p.size(), p) == 0) {
            const std::string rest = origin.substr(p.size());
            if (rest.empty() || rest.front() == ':') return true;
        }
    }
    return false;
}

} // namespace

HttpResult handle_run_request(std::string_view body, std::size_t iteration_cap, std::uint64_t default_seed) {
    HttpResult result;
    try {
        const json req = json::parse(body.begin(), body.end(), nullptr, false);
        if (req.is_discarded()) bad("", "request body is not valid JSON");
        if (!req.is_object()) bad("", "request body must be a JSON object");

        static const std::set<std::string> known = {"objective", "optimizer", "active", "alpha0",
                                                    "alpha_low", "alpha_high", "mode", "init_point",
                                                    "iterations", "seed"};
        for (const auto& [key, value] : req.items()) {
            if (!known.count(key)) bad(key, "unknown field '" + key + "'");
        }

        if (!req.contains("objective")) bad("objective", "'objective' is required");
        const std::string objective = text_field(req, "objective", "");
        const auto& names = analytic_objective_names();
        if (std::find(names.begin(), names.end(), objective) == names.end()) {
            bad("objective", "unknown objective '" + objective + "'");
        }

        const std::string optimizer = text_field(req, "optimizer", "adamw");
        const auto backbone = parse_backbone(optimizer);
        if (!backbone) bad("optimizer", "optimizer must be one of sgd, adamw, radam, adabelief");

        bool active = false;
        if (req.contains("active")) {
            if (!req.at("active").is_boolean()) bad("active", "'active' must be a boolean");
            active = req.at("active").get<bool>();
        }

        RunConfig cfg;
        cfg.backbone.kind = *backbone;
        cfg.active = active;
        cfg.active_cfg.alpha0 = real_field(req, "alpha0", 1e-3, 0.0, 10.0, true);
        cfg.active_cfg.alpha_low = real_field(req, "alpha_low", 0.9, 0.0, 1.0, true);
        if (cfg.active_cfg.alpha_low >= 1.0) bad("alpha_low", "'alpha_low' must lie in (0, 1)");
        cfg.active_cfg.alpha_high = real_field(req, "alpha_high", 0.1, 0.0, 10.0, true);
        const std::string mode = text_field(req, "mode", "absolute");
        const auto parsed_mode = parse_adapt_mode(mode);
        if (!parsed_mode) bad("mode", "mode must be absolute or gain");
        cfg.active_cfg.mode = *parsed_mode;

        const std::uint64_t iterations = count_field(req, "iterations", 100);
        if (iterations > iteration_cap) {
            bad("iterations", "'iterations' exceeds the server cap of " + std::to_string(iteration_cap));
        }
        cfg.seed = count_field(req, "seed", default_seed);

        const Objective obj = analytic_objective(objective);
        Vec init = default_init(objective);
        if (req.contains("init_point")) {
            const json& p = req.at("init_point");
            if (!p.is_array()) bad("init_point", "'init_point' must be an array of numbers");
            init.clear();
            for (const auto& v : p) {
                if (!v.is_number()) bad("init_point", "'init_point' must be an array of numbers");
                const double x = v.get<double>();
                if (!std::isfinite(x) || std::abs(x) > 1e6) bad("init_point", "'init_point' values must lie in [-1e6, 1e6]");
                init.push_back(x);
            }
            if (init.size() != obj.dim) {
                throw RequestError(422, "init_point",
                                   "objective '" + objective + "' needs a " + std::to_string(obj.dim) +
                                       "-dimensional init_point, got " + std::to_string(init.size()));
            }
        }

        json out;
        out["objective"] = objective;
        out["optimizer"] = optimizer;
        out["active"] = active;
        json points = json::array();
        auto point = [&](std::size_t iter, const Vec& params, double alpha_mean) {
            json p;
            p["iter"] = iter;
            p["params"] = params;
            p["loss"] = obj.eval(params);
            p["alpha_mean"] = alpha_mean;
            points.push_back(std::move(p));
        };
        point(0, init, cfg.active_cfg.alpha0);

        bool diverged = false;
        json warnings = json::array();
        if (iterations > 0) {
            AnalyticTask task;
            task.objective = objective;
            task.init = init;
            cfg.task = task;
            cfg.epochs = iterations;
            cfg.record_every = 1;
            const Trajectory traj = run_training(cfg);
            for (const auto& s : traj.steps) {
                point(s.step, s.params, s.alpha ? s.alpha->mean : cfg.active_cfg.alpha0);
            }
            diverged = traj.final.diverged;
            for (const auto& w : traj.warnings) warnings.push_back(w);
        }
        out["points"] = std::move(points);
        out["diverged"] = diverged;
        out["warnings"] = std::move(warnings);

        if (obj.dim == 2) {
            const Bounds b = suggested_bounds(objective);
            json values = json::array();
            const std::size_t n = kContourResolution;
            for (std::size_t r = 0; r < n; ++r) {
                const double y = b.y_min + (b.y_max - b.y_min) * static_cast<double>(r) / static_cast<double>(n - 1);
                json row = json::array();
                for (std::size_t c = 0; c < n; ++c) {
                    const double x = b.x_min + (b.x_max - b.x_min) * static_cast<double>(c) / static_cast<double>(n - 1);
                    row.push_back(obj.eval(Vec{x, y}));
                }
                values.push_back(std::move(row));
            }
            json contour = bounds_json(b, 2);
            contour["nx"] = n;
            contour["ny"] = n;
            contour["values"] = std::move(values);
            out["contour"] = std::move(contour);
        }
        result.body = out.dump();
    } catch (const RequestError& e) {
        result.status = e.status();
        result.body = error_body(e.what(), e.field()).dump();
    } catch (const std::invalid_argument& e) {
        result.status = 400;
        result.body = error_body(e.what(), "").dump();
    }
    return result;
}

std::string objectives_json() {
    json list = json::array();
    for (const auto& name : analytic_objective_names()) {
        const Objective obj = analytic_objective(name);
        json e;
        e["name"] = name;
        e["dim"] = obj.dim;
        e["default_init"] = default_init(name);
        e["suggested_bounds"] = bounds_json(suggested_bounds(name), obj.dim);
        list.push_back(std::move(e));
    }
    return list.dump();
}

struct TrajServer::Impl {
    ServiceOptions options;
    httplib::Server server;
    bool bound = false;
    bool served = false;
};

TrajServer::TrajServer(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    auto& srv = impl_->server;
    const std::size_t cap = impl_->options.iteration_cap;
    const std::uint64_t default_seed = impl_->options.default_seed;

    // The library default adds SO_REUSEPORT, which lets a second server share
    // a port that is already in use.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    srv.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
        const std::string origin = req.get_header_value("Origin");
        if (!origin.empty() && localhost_origin(origin)) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Vary", "Origin");
        }
    });
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    srv.Get("/api/objectives", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(objectives_json(), "application/json");
    });
    srv.Post("/api/run", [cap, default_seed](const httplib::Request& req, httplib::Response& res) {
        const HttpResult r = handle_run_request(req.body, cap, default_seed);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    });
    if (!impl_->options.static_dir.empty()) srv.set_mount_point("/", impl_->options.static_dir);
    if (impl_->options.access_log) {
        auto log = impl_->options.access_log;
        srv.set_logger([log](const httplib::Request& req, const httplib::Response& res) {
            log(req.method + " " + req.path + " " + std::to_string(res.status));
        });
    }
}

TrajServer::~TrajServer() {
    if (impl_->bound && !impl_->served) {
        // httplib only releases its socket from a running server.
        std::thread t([this] { impl_->server.listen_after_bind(); });
        impl_->server.wait_until_ready();
        impl_->server.stop();
        t.join();
    }
    stop();
}

int TrajServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                                : (impl_->server.bind_to_port(host, port) ? port : -1);
    impl_->bound = bound > 0;
    return bound;
}

bool TrajServer::listen_after_bind() {
    impl_->served = true;
    return impl_->server.listen_after_bind();
}

void TrajServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void TrajServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace activelr
