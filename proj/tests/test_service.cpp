#include "activelr/service.hpp"

#include "doctest.h"

#include "httplib.h"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <thread>

using namespace activelr;
using nlohmann::json;

namespace {

json ok_body(const std::string& req, std::size_t cap = kDefaultIterationCap) {
    const HttpResult r = handle_run_request(req, cap);
    REQUIRE(r.status == 200);
    return json::parse(r.body);
}

void expect_error(const std::string& req, int status, const std::string& field) {
    const HttpResult r = handle_run_request(req);
    CAPTURE(req);
    CHECK(r.status == status);
    const json j = json::parse(r.body);
    CHECK(j.contains("error"));
    if (!field.empty()) CHECK(j.value("field", "") == field);
}

class RunningServer {
public:
    explicit RunningServer(ServiceOptions options = {}) : server_(std::move(options)) {
        port_ = server_.bind("127.0.0.1", 0);
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~RunningServer() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c;
    }

private:
    TrajServer server_;
    int port_ = -1;
    std::thread thread_;
};

} // namespace

TEST_CASE("saddle with active adam approaches a minimum") {
    const json j = ok_body(R"({"objective":"saddle","optimizer":"adamw","active":true,"alpha0":0.001,
                               "init_point":[0.5,0.1],"iterations":100})");
    const auto& pts = j.at("points");
    REQUIRE(pts.size() == 101);
    CHECK(pts[0].at("iter") == 0);
    CHECK(pts[0].at("params") == json::array({0.5, 0.1}));
    const auto last = pts.back().at("params").get<std::vector<double>>();
    CHECK(std::hypot(last[0], std::abs(last[1]) - 1.0) < 0.1);
    CHECK(j.at("diverged") == false);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i].at("iter") == i);
}

TEST_CASE("zero iterations returns only the start") {
    const json j = ok_body(R"({"objective":"cubic","iterations":0})");
    REQUIRE(j.at("points").size() == 1);
    CHECK(j.at("points")[0].at("params") == json::array({5.0}));
    CHECK(j.at("points")[0].at("loss") == 20.0);
}

TEST_CASE("contour only for two-dimensional objectives") {
    const json s = ok_body(R"({"objective":"multimodal","iterations":1})");
    const json& c = s.at("contour");
    CHECK(c.at("nx") == kContourResolution);
    CHECK(c.at("ny") == kContourResolution);
    REQUIRE(c.at("values").size() == kContourResolution);
    CHECK(c.at("values")[0].size() == kContourResolution);
    // row 0 is y_min, column 0 is x_min
    const double x = c.at("x_min"), y = c.at("y_min");
    const double f = -x * x * x - x * x * y + y * y + 4 * y + 1680;
    CHECK(c.at("values")[0][0].get<double>() == doctest::Approx(f));
    CHECK_FALSE(ok_body(R"({"objective":"mse_line","iterations":1})").contains("contour"));
}

TEST_CASE("identical requests give identical bodies") {
    const std::string req = R"({"objective":"multimodal","active":true,"iterations":300,"seed":5})";
    CHECK(handle_run_request(req).body == handle_run_request(req).body);
}

TEST_CASE("default seed fills in a missing seed") {
    const std::string req = R"({"objective":"quadratic","iterations":20})";
    CHECK(handle_run_request(req, kDefaultIterationCap, 3).body ==
          handle_run_request(R"({"objective":"quadratic","iterations":20,"seed":3})").body);
}

TEST_CASE("request validation") {
    expect_error("{not json", 400, "");
    expect_error("[1,2]", 400, "");
    expect_error(R"({"iterations":5})", 400, "objective");
    expect_error(R"({"objective":"rosenbrock"})", 400, "objective");
    expect_error(R"({"objective":"cubic","colour":"red"})", 400, "colour");
    expect_error(R"({"objective":"cubic","optimizer":"lamb"})", 400, "optimizer");
    expect_error(R"({"objective":"cubic","active":"yes"})", 400, "active");
    expect_error(R"({"objective":"cubic","alpha0":0})", 400, "alpha0");
    expect_error(R"({"objective":"cubic","alpha0":"0.1"})", 400, "alpha0");
    expect_error(R"({"objective":"cubic","alpha_low":1.0})", 400, "alpha_low");
    expect_error(R"({"objective":"cubic","alpha_high":-0.1})", 400, "alpha_high");
    expect_error(R"({"objective":"cubic","mode":"relative"})", 400, "mode");
    expect_error(R"({"objective":"cubic","iterations":-1})", 400, "iterations");
    expect_error(R"({"objective":"cubic","iterations":2.5})", 400, "iterations");
    expect_error(R"({"objective":"cubic","iterations":10001})", 400, "iterations");
    expect_error(R"({"objective":"cubic","seed":-4})", 400, "seed");
    expect_error(R"({"objective":"cubic","init_point":"5"})", 400, "init_point");
    expect_error(R"({"objective":"cubic","init_point":[1e9]})", 400, "init_point");
    expect_error(R"({"objective":"saddle","init_point":[0.5]})", 422, "init_point");
    expect_error(R"({"objective":"cubic","init_point":[1,2]})", 422, "init_point");
}

TEST_CASE("iteration cap is configurable") {
    CHECK(handle_run_request(R"({"objective":"cubic","iterations":11})", 10).status == 400);
    CHECK(handle_run_request(R"({"objective":"cubic","iterations":10})", 10).status == 200);
}

TEST_CASE("divergence is a flag, not an error") {
    const json j = ok_body(R"({"objective":"quadratic","optimizer":"sgd","alpha0":10,"iterations":500})");
    CHECK(j.at("diverged") == true);
    CHECK(j.at("points").size() < 501);
}

TEST_CASE("objectives listing") {
    const json list = json::parse(objectives_json());
    REQUIRE(list.size() == 5);
    std::set<std::string> names;
    for (const auto& e : list) {
        names.insert(e.at("name"));
        CHECK(e.at("default_init").size() == e.at("dim"));
        const auto& b = e.at("suggested_bounds");
        CHECK(b.at("x_min") < b.at("x_max"));
        if (e.at("dim") == 2) CHECK(b.at("y_min") < b.at("y_max"));
    }
    CHECK(names == std::set<std::string>{"cubic", "multimodal", "saddle", "quadratic", "mse_line"});
    CHECK(objectives_json() == objectives_json());
}

TEST_CASE("http endpoints") {
    RunningServer srv;
    auto cli = srv.client();
    auto h = cli.Get("/healthz");
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(h->body == "ok");

    auto o = cli.Get("/api/objectives");
    REQUIRE(o);
    CHECK(o->status == 200);
    CHECK(o->body == objectives_json());

    const std::string req = R"({"objective":"saddle","active":true,"iterations":50})";
    auto r = cli.Post("/api/run", req, "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->body == handle_run_request(req).body);

    auto bad = cli.Post("/api/run", R"({"objective":"saddle","init_point":[1]})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);
}

TEST_CASE("cors for localhost origins only") {
    RunningServer srv;
    auto cli = srv.client();
    auto local = cli.Get("/api/objectives", {{"Origin", "http://localhost:5173"}});
    REQUIRE(local);
    CHECK(local->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
    auto remote = cli.Get("/api/objectives", {{"Origin", "http://localhost.evil.com"}});
    REQUIRE(remote);
    CHECK_FALSE(remote->has_header("Access-Control-Allow-Origin"));
    auto pre = cli.Options("/api/run", {{"Origin", "http://127.0.0.1:8080"}});
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("concurrent requests match their sequential replay") {
    RunningServer srv;
    const std::vector<std::string> reqs = {
        R"({"objective":"multimodal","active":true,"iterations":2000,"seed":1})",
        R"({"objective":"multimodal","active":true,"iterations":2000,"seed":2})",
        R"({"objective":"saddle","optimizer":"radam","iterations":3000})",
        R"({"objective":"mse_line","optimizer":"sgd","active":true,"alpha0":0.01,"iterations":2500})",
    };
    std::vector<std::future<std::string>> futures;
    for (int round = 0; round < 2; ++round) {
        for (const auto& req : reqs) {
            futures.push_back(std::async(std::launch::async, [&srv, req] {
                auto cli = srv.client();
                auto r = cli.Post("/api/run", req, "application/json");
                return r ? r->body : std::string("<no response>");
            }));
        }
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
        CHECK(futures[i].get() == handle_run_request(reqs[i % reqs.size()]).body);
    }
}

TEST_CASE("health check answers during a long run") {
    ServiceOptions opts;
    opts.iteration_cap = 1000000;
    RunningServer srv(opts);
    std::atomic<bool> run_done{false};
    auto long_run = std::async(std::launch::async, [&] {
        auto cli = srv.client();
        auto r = cli.Post("/api/run", R"({"objective":"cubic","active":true,"iterations":200000})", "application/json");
        run_done = true;
        return r ? r->status : -1;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    auto cli = srv.client();
    auto h = cli.Get("/healthz");
    const bool answered_first = !run_done.load();
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(answered_first);
    CHECK(long_run.get() == 200);
}

TEST_CASE("bind reports a busy port") {
    RunningServer first;
    TrajServer second;
    CHECK(second.bind("127.0.0.1", first.port()) == -1);
}

TEST_CASE("access log sees every request") {
    std::mutex m;
    std::vector<std::string> lines;
    ServiceOptions opts;
    opts.access_log = [&](const std::string& line) {
        std::lock_guard<std::mutex> lock(m);
        lines.push_back(line);
    };
    {
        RunningServer srv(opts);
        auto cli = srv.client();
        cli.Get("/healthz");
        cli.Post("/api/run", "{}", "application/json");
    }
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "GET /healthz 200");
    CHECK(lines[1] == "POST /api/run 400");
}
