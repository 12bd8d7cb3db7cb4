#include "activelr/backbones.hpp"
#include "activelr/cli.hpp"
#include "activelr/harness.hpp"
#include "activelr/mlp.hpp"
#include "activelr/scenarios.hpp"
#include "activelr/sweep.hpp"
#include "activelr/trajectory_io.hpp"
#include "activelr/verification.hpp"

#include "support/reference_backbones.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

using namespace activelr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int g_failures = 0;

void criterion(int id, double limit_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && s >= limit_s) {
        v.pass = false;
        v.detail += fmt(" [over the %.0f s budget]", limit_s);
    }
    if (!v.pass) ++g_failures;
    std::printf("criterion %2d %s  %s  (%.2f s)\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), s);
    std::fflush(stdout);
}

const std::vector<Vec> kSaddleMinima = {{0.0, 1.0}, {0.0, -1.0}};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict agreement() {
    const AgreementSuiteResult r = agreement_suite(200, 1);
    return {r.passed(), fmt("cases %zu, diverged %zu, elementwise failures %zu, scalar bound failures %zu/%zu",
                            r.cases, r.diverged, r.elementwise_failures, r.scalar_bound_failures, r.scalar_cases)};
}

Verdict sign_switch() {
    const SignSwitchSuiteResult r = sign_switch_suite(200, 1);
    return {r.passed(), fmt("cases %zu (high %zu, low %zu, mixed %zu), lhs failures %zu, rhs failures %zu/%zu",
                            r.cases, r.high_cases, r.low_cases, r.mixed_cases, r.lhs_failures, r.rhs_failures,
                            r.segment_cases)};
}

Verdict lr_walk() {
    const WalkSuiteResult r = walk_suite(30, 10000, 1);
    const auto& ma = r.pair(LowOp::Multiply, HighOp::Add);
    const auto& mm = r.pair(LowOp::Multiply, HighOp::Multiply);
    const auto& sa = r.pair(LowOp::Subtract, HighOp::Add);
    const auto& sm = r.pair(LowOp::Subtract, HighOp::Multiply);
    const bool ok = ma.positive_seeds == 30 && std::abs(ma.grand_mean - 1.0) <= 0.1 &&
                    std::abs(ma.grand_std - 0.30) <= 0.07 && sa.crossed_zero_seeds >= 29 &&
                    sm.crossed_zero_seeds >= 29 && mm.shrunk_seeds >= 29;
    return {ok, fmt("mul/add positive %zu/30 mean %.4f std %.4f; sub/add negative %zu, sub/mul negative %zu, "
                    "mul/mul shrunk %zu",
                    ma.positive_seeds, ma.grand_mean, ma.grand_std, sa.crossed_zero_seeds, sm.crossed_zero_seeds,
                    mm.shrunk_seeds)};
}

Verdict cubic_escape() {
    int escaped = 0, trapped = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Trajectory a = run_training(toy_scenario(ToyFunction::Cubic, true, seed));
        if (a.final.escaped_at_step) ++escaped;
        const Trajectory v = run_training(toy_scenario(ToyFunction::Cubic, false, seed));
        const double d = std::abs(v.final.final_params.at(0) - 3.0);
        worst = std::max(worst, d);
        if (!v.final.diverged && d < 0.2) ++trapped;
    }
    return {escaped >= 9 && trapped == 10,
            fmt("active escaped %d/10, vanilla within 0.2 of 3 in %d/10 (worst %.4f)", escaped, trapped, worst)};
}

Verdict saddle_escape() {
    const RunConfig ac = toy_scenario(ToyFunction::Saddle, true, 0);
    const Trajectory a = run_training(ac);
    const auto hit = first_step_within(a, kSaddleMinima, 0.1);
    const Trajectory v = run_training(toy_scenario(ToyFunction::Saddle, false, 0));
    const Vec& start = std::get<AnalyticTask>(ac.task).init;
    const Vec s = start.empty() ? default_init("saddle") : start;
    const Vec& end = v.final.final_params;
    const double moved = std::hypot(end.at(0) - s[0], end.at(1) - s[1]);
    const bool ok = hit && a.steps.at(*hit).step <= 50 && moved < 0.2;
    return {ok, fmt("active within 0.1 of a minimum at iteration %s, vanilla moved %.4f",
                    hit ? std::to_string(a.steps.at(*hit).step).c_str() : "never", moved)};
}

Verdict multimodal() {
    const Objective f = bivariate_multimodal();
    double worst = 0.0;
    for (const Vec& p : std::vector<Vec>{{-4.0, 6.0}, {0.0, -2.0}, {1.0, -1.5}}) {
        for (double g : f.gradient(p)) worst = std::max(worst, std::abs(g));
    }
    int escaped = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RunConfig c = toy_scenario(ToyFunction::Multimodal, true, seed);
        const Trajectory t = run_training(c);
        if (t.final.escaped_at_step && *t.final.escaped_at_step <= 1000) ++escaped;
    }
    return {worst <= 1e-12 && escaped >= 8,
            fmt("max stationary gradient %.1e, f < 1676 within 1000 iterations in %d/10 seeds", worst, escaped)};
}

Verdict fidelity() {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst_backbone = 0.0;
    for (BackboneKind kind : {BackboneKind::SgdMomentum, BackboneKind::AdamW, BackboneKind::RAdam,
                              BackboneKind::AdaBelief}) {
        for (int seq = 0; seq < 100; ++seq) {
            BackboneConfig c;
            c.kind = kind;
            c.weight_decay = seq % 2 == 0 ? 0.0 : 0.01 * u01(rng);
            testing::RefScalar ref{kind};
            ref.wd = c.weight_decay;
            BackboneState st(1);
            std::vector<double> theta = {n01(rng)};
            double ref_theta = theta[0];
            const double alpha = std::pow(10.0, -4.0 + 3.0 * u01(rng));
            const double scale = std::pow(10.0, -2.0 + 4.0 * u01(rng));
            for (int k = 0; k < 100; ++k) {
                const double g = scale * n01(rng);
                step(c, theta, std::vector<double>{g}, std::vector<double>{alpha}, st);
                ref_theta = ref.update(ref_theta, g, alpha);
                worst_backbone =
                    std::max(worst_backbone, std::abs(theta[0] - ref_theta) / std::max(std::abs(ref_theta), 1e-300));
            }
        }
    }

    auto data = std::make_shared<Dataset>(make_synthetic_dataset(DatasetKind::TwoClusters, 64, 1.0, 5));
    const Objective net = mlp_objective(MlpSpec{{2, 8, 2}, Activation::Tanh, 0}, data, LossKind::CrossEntropy);
    double worst_fd = 0.0;
    for (int k = 0; k < 20; ++k) {
        Vec theta(net.dim);
        for (auto& x : theta) x = n01(rng);
        const Vec analytic = net.gradient(theta);
        const Vec numeric = finite_diff_grad(net, theta, 1e-5);
        for (std::size_t i = 0; i < net.dim; ++i) {
            const double den = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-7});
            worst_fd = std::max(worst_fd, std::abs(analytic[i] - numeric[i]) / den);
        }
    }
    return {worst_backbone <= 1e-10 && worst_fd <= 1e-5,
            fmt("backbone worst relative error %.2e, backprop vs finite differences %.2e", worst_backbone, worst_fd)};
}

RunConfig mlp_base(BackboneKind kind) {
    RunConfig c;
    c.task = MlpTask{};
    c.backbone.kind = kind;
    c.batch_size = 32;
    c.epochs = 20;
    return c;
}

Verdict spread() {
    int better = 0;
    std::string detail;
    for (BackboneKind kind : {BackboneKind::SgdMomentum, BackboneKind::AdamW, BackboneKind::RAdam,
                              BackboneKind::AdaBelief}) {
        const SweepReport r = lr_sensitivity_sweep(mlp_base(kind), default_lr_grid(), 3);
        const auto& v = r.vanilla.loss_spread;
        const auto& a = r.active.loss_spread;
        if (a && (!v || *a < *v)) ++better;
        detail += fmt("%s %s/%s; ", std::string(to_string(kind)).c_str(),
                      v ? fmt("%.4f", *v).c_str() : "undef", a ? fmt("%.4f", *a).c_str() : "undef");
    }
    return {better >= 3, fmt("active spread smaller for %d/4 (vanilla/active: %s)", better, detail.c_str())};
}

Verdict batch_size() {
    RunConfig base = mlp_base(BackboneKind::SgdMomentum);
    base.active_cfg.alpha0 = 1e-3;
    const std::size_t n = std::get<MlpTask>(base.task).samples;
    const SweepReport r = batch_size_sweep(base, {8, 32, 128, n}, 3);
    const auto& v = r.vanilla.full_batch_metric_drop;
    const auto& a = r.active.full_batch_metric_drop;
    const bool ok = v && a && *v > *a;
    return {ok, fmt("full-batch accuracy drop vanilla %.4f, active %.4f", v ? *v : NAN, a ? *a : NAN)};
}

struct Invocation {
    std::string args;
    int expected;
};

Verdict determinism_and_formats() {
    const fs::path dir = fs::temp_directory_path() / ("activelr_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::string problems;

    std::vector<RunConfig> configs;
    {
        RunConfig c = toy_scenario(ToyFunction::Multimodal, true, 3);
        configs.push_back(c);
        RunConfig q;
        q.task = QuadraticTask{4, 3, 20.0, 4};
        q.active = true;
        q.backbone.kind = BackboneKind::RAdam;
        q.epochs = 30;
        configs.push_back(q);
        RunConfig m = mlp_base(BackboneKind::AdaBelief);
        MlpTask t;
        t.dataset = DatasetKind::TwoSpirals;
        t.samples = 96;
        t.hidden = {8, 8};
        m.task = t;
        m.active = true;
        m.epochs = 4;
        configs.push_back(m);
        RunConfig d;
        d.task = QuadraticTask{1, 2, 10.0, 2};
        d.backbone.kind = BackboneKind::SgdMomentum;
        d.active_cfg.alpha0 = 100.0;
        d.epochs = 50;
        configs.push_back(d);
    }
    std::size_t identical = 0, lossless = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        for (TrajectoryFormat f : {TrajectoryFormat::JsonLines, TrajectoryFormat::Csv}) {
            const std::string ext = f == TrajectoryFormat::Csv ? ".csv" : ".jsonl";
            const fs::path a = dir / ("a" + std::to_string(i) + ext), b = dir / ("b" + std::to_string(i) + ext);
            write_trajectory(run_training(configs[i]), a, f);
            write_trajectory(run_training(configs[i]), b, f);
            const std::string text = slurp(a);
            if (text == slurp(b)) ++identical;
            else problems += fmt("config %zu%s not byte-identical; ", i, ext.c_str());
            if (format_trajectory(read_trajectory(a), f) == text) ++lossless;
            else problems += fmt("config %zu%s round trip differs; ", i, ext.c_str());
        }
    }

    const std::string cli = ACTIVELR_CLI_PATH;
    const std::vector<Invocation> matrix = {
        {"--help", kExitOk},
        {"train --objective saddle --epochs 5 --out t.jsonl", kExitOk},
        {"train --objective cubic --active --epochs 3 --out t.csv", kExitOk},
        {"train --objective two-clusters --samples 64 --epochs 2 --out m.jsonl", kExitOk},
        {"toy --function multimodal --out toy", kExitOk},
        {"verify --objective mse_line --out v.json", kExitOk},
        {"sweep --samples 64 --hidden 4 --epochs 2 --seeds 1 --grid 1e-3 --out s.json", kExitOk},
        {"train --objective random-quadratic --optimizer sgd --alpha0 100 --epochs 50 --out d.jsonl", kExitDiverged},
        {"verify --cases 20 --walk-seeds 3 --walk-steps 1000 --out suite.json", kExitCheckFailed},
        {"", kExitUsage},
        {"plot", kExitUsage},
        {"train --optimizer lamb", kExitUsage},
        {"train --no-such-flag", kExitUsage},
        {"train --epochs 0", kExitUsage},
        {"train --alpha-low 1.5", kExitUsage},
        {"train --objective saddle --init 1", kExitUsage},
        {"train --out t.jsonl/x.jsonl", kExitUsage},
        {"verify --objective saddle", kExitUsage},
        {"toy --function rosenbrock", kExitUsage},
        {"sweep --kind momentum", kExitUsage},
        {"serve --port 70000", kExitUsage},
    };
    std::size_t matched = 0;
    for (const auto& inv : matrix) {
        const std::string cmd =
            "cd '" + dir.string() + "' && '" + cli + "' " + inv.args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        if (code == inv.expected) ++matched;
        else problems += fmt("'%s' exited %d, expected %d; ", inv.args.c_str(), code, inv.expected);
    }
    fs::remove_all(dir);

    const std::size_t files = configs.size() * 2;
    const bool ok = identical == files && lossless == files && matched == matrix.size();
    return {ok, fmt("byte-identical %zu/%zu, lossless round trips %zu/%zu, cli matrix %zu/%zu%s%s", identical, files,
                    lossless, files, matched, matrix.size(), problems.empty() ? "" : " : ",
                    problems.c_str())};
}

} // namespace

int main() {
    criterion(1, 10.0, agreement);
    criterion(2, 10.0, sign_switch);
    criterion(3, 5.0, lr_walk);
    criterion(4, 10.0, cubic_escape);
    criterion(5, 5.0, saddle_escape);
    criterion(6, 0.0, multimodal);
    criterion(7, 0.0, fidelity);
    criterion(8, 600.0, spread);
    criterion(9, 600.0, batch_size);
    criterion(10, 0.0, determinism_and_formats);
    std::printf("%d of 10 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
