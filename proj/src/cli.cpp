#include "activelr/cli.hpp"

#include "activelr/errors.hpp"
#include "activelr/harness.hpp"
#include "activelr/scenarios.hpp"
#include "activelr/service.hpp"
#include "activelr/sweep.hpp"
#include "activelr/trajectory_io.hpp"
#include "activelr/verification.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>

namespace activelr {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kBackbones = {"sgd", "adamw", "radam", "adabelief"};
const std::vector<std::string> kDatasets = {"two-clusters", "two-spirals", "linear-regression"};

std::vector<std::string> train_objectives() {
    std::vector<std::string> names = analytic_objective_names();
    names.push_back("random-quadratic");
    names.insert(names.end(), kDatasets.begin(), kDatasets.end());
    return names;
}

std::string fmt(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

std::string fmt_vec(const Vec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) s += ", ";
        s += fmt(v[i]);
    }
    return s + ")";
}

// Common --seed/--out plumbing.
struct Common {
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* seed_opt = nullptr;

    void add(CLI::App* app, const std::string& out_default, const std::string& out_help) {
        seed_opt = app->add_option("--seed", seed, "Random seed (falls back to $ACTIVELR_SEED, then 0)");
        out = out_default;
        app->add_option("--out", out, out_help)->capture_default_str();
    }

    std::uint64_t resolved_seed() const {
        if (seed_opt->count() > 0) return seed;
        const char* env = std::getenv("ACTIVELR_SEED");
        if (env == nullptr || *env == '\0') return 0;
        const std::string text(env);
        if (text.find_first_not_of("0123456789") != std::string::npos) {
            throw UsageError("ACTIVELR_SEED must be a non-negative integer, got '" + text + "'");
        }
        try {
            return std::stoull(text);
        } catch (const std::exception&) {
            throw UsageError("ACTIVELR_SEED is out of range: '" + text + "'");
        }
    }
};

struct ActiveFlags {
    bool active = false;
    double alpha0 = 1e-3;
    double alpha_low = 0.9;
    double alpha_high = 0.1;
    std::string mode = "absolute";
    std::string first_epoch = "literal";

    void add(CLI::App* app, bool with_active_flag) {
        if (with_active_flag) app->add_flag("--active", active, "Wrap the optimizer with per-parameter rate adaptation");
        app->add_option("--alpha0", alpha0, "Initial learning rate (also the vanilla rate)")->capture_default_str();
        app->add_option("--alpha-low", alpha_low, "Shrink factor on a sign change")->capture_default_str();
        app->add_option("--alpha-high", alpha_high, "Growth increment on sign agreement")->capture_default_str();
        app->add_option("--mode", mode, "Adapt rates directly or a gain on alpha0")
            ->check(CLI::IsMember({"absolute", "gain"}))
            ->capture_default_str();
        app->add_option("--first-epoch", first_epoch, "First boundary: adapt against zero, or skip")
            ->check(CLI::IsMember({"literal", "skip"}))
            ->capture_default_str();
    }

    ActiveConfig config() const {
        ActiveConfig c;
        c.alpha0 = alpha0;
        c.alpha_low = alpha_low;
        c.alpha_high = alpha_high;
        c.mode = *parse_adapt_mode(mode);
        c.first_epoch_policy = *parse_first_epoch_policy(first_epoch);
        return c;
    }
};

struct BackboneFlags {
    std::string optimizer = "adamw";
    double weight_decay = 0.0;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void add(CLI::App* app) {
        app->add_option("--optimizer", optimizer, "Backbone optimizer")
            ->check(CLI::IsMember(kBackbones))
            ->capture_default_str();
        app->add_option("--weight-decay", weight_decay, "Decoupled weight decay")->capture_default_str();
        app->add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
        app->add_option("--beta1", beta1, "First-moment decay")->capture_default_str();
        app->add_option("--beta2", beta2, "Second-moment decay")->capture_default_str();
        app->add_option("--eps", epsilon, "Denominator epsilon")->capture_default_str();
    }

    BackboneConfig config() const {
        BackboneConfig c;
        c.kind = *parse_backbone(optimizer);
        c.weight_decay = weight_decay;
        c.momentum = momentum;
        c.beta1 = beta1;
        c.beta2 = beta2;
        c.epsilon = epsilon;
        return c;
    }
};

struct MlpFlags {
    std::string dataset = "two-clusters";
    std::size_t samples = 512;
    double noise = 1.0;
    std::uint64_t data_seed = 7;
    std::vector<std::size_t> hidden = {16};
    std::string activation = "tanh";
    std::string loss = "auto";

    void add(CLI::App* app, bool with_dataset) {
        if (with_dataset) {
            app->add_option("--dataset", dataset, "Synthetic dataset")
                ->check(CLI::IsMember(kDatasets))
                ->capture_default_str();
        }
        app->add_option("--samples", samples, "Dataset size (MLP tasks)")->capture_default_str();
        app->add_option("--noise", noise, "Dataset noise level (MLP tasks)")->capture_default_str();
        app->add_option("--data-seed", data_seed, "Dataset seed (MLP tasks)")->capture_default_str();
        app->add_option("--hidden", hidden, "Hidden layer widths (MLP tasks)")->capture_default_str()->delimiter(',');
        app->add_option("--activation", activation, "Hidden activation (MLP tasks)")
            ->check(CLI::IsMember({"tanh", "relu"}))
            ->capture_default_str();
        app->add_option("--loss", loss, "Loss; auto picks cross-entropy for classification, else mse")
            ->check(CLI::IsMember({"auto", "mse", "cross-entropy"}))
            ->capture_default_str();
    }

    MlpTask task(const std::string& name) const {
        MlpTask t;
        t.dataset = *parse_dataset_kind(name);
        t.samples = samples;
        t.noise = noise;
        t.data_seed = data_seed;
        t.hidden = hidden;
        t.activation = *parse_activation(activation);
        if (loss == "auto") {
            t.loss = t.dataset == DatasetKind::LinearRegression ? LossKind::MSE : LossKind::CrossEntropy;
        } else {
            t.loss = *parse_loss_kind(loss);
        }
        return t;
    }
};

TrajectoryFormat pick_format(const std::string& flag, const fs::path& out) {
    if (flag.empty()) return format_for_path(out);
    return *parse_trajectory_format(flag);
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& path, const std::string& body) {
    ensure_parent(path);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << body;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

// ---- train ----

struct TrainCmd {
    Common common;
    ActiveFlags active;
    BackboneFlags backbone;
    MlpFlags mlp;
    std::string objective = "cubic";
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::size_t steps_per_epoch = 1;
    double grad_noise = 0.0;
    std::vector<double> init;
    std::size_t dim = 2;
    double cond = 10.0;
    std::size_t batches = 4;
    std::size_t record_every = 1;
    double loss_target = 0.0;
    CLI::Option* loss_target_opt = nullptr;
    std::string format;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Train one configuration and write its trajectory");
        common.add(cmd, "trajectory.jsonl", "Trajectory file (.csv selects CSV unless --format is given)");
        cmd->add_option("--objective", objective, "Objective: analytic function, random-quadratic or dataset")
            ->check(CLI::IsMember(train_objectives()))
            ->capture_default_str();
        backbone.add(cmd);
        active.add(cmd, true);
        cmd->add_option("--batch-size", batch_size, "Mini-batch size (MLP tasks)")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Number of epochs")->capture_default_str();
        cmd->add_option("--steps-per-epoch", steps_per_epoch, "Steps per epoch (analytic functions)")
            ->capture_default_str();
        cmd->add_option("--grad-noise", grad_noise, "Gaussian gradient noise (analytic functions)")
            ->capture_default_str();
        cmd->add_option("--init", init, "Start point (analytic functions, random-quadratic)")->delimiter(',');
        cmd->add_option("--dim", dim, "Dimension (random-quadratic)")->capture_default_str();
        cmd->add_option("--cond", cond, "Condition number (random-quadratic)")->capture_default_str();
        cmd->add_option("--batches", batches, "Batch terms (random-quadratic)")->capture_default_str();
        mlp.add(cmd, false);
        cmd->add_option("--record-every", record_every, "Record every n-th step")->capture_default_str();
        loss_target_opt = cmd->add_option("--loss-target", loss_target, "Epoch-mean loss for epochs_to_threshold");
        cmd->add_option("--format", format, "Output format (default: from the file extension)")
            ->check(CLI::IsMember({"jsonl", "csv"}));
    }

    int run(std::ostream& out) const {
        RunConfig cfg;
        cfg.seed = common.resolved_seed();
        cfg.backbone = backbone.config();
        cfg.active = active.active;
        cfg.active_cfg = active.config();
        cfg.batch_size = batch_size;
        cfg.epochs = epochs;
        cfg.record_every = record_every;
        if (loss_target_opt->count() > 0) cfg.loss_target = loss_target;

        const auto& analytic = analytic_objective_names();
        if (std::find(analytic.begin(), analytic.end(), objective) != analytic.end()) {
            AnalyticTask t;
            t.objective = objective;
            t.init = init;
            t.steps_per_epoch = steps_per_epoch;
            t.grad_noise = grad_noise;
            cfg.task = t;
        } else if (objective == "random-quadratic") {
            QuadraticTask t;
            t.problem_seed = cfg.seed;
            t.dim = dim;
            t.cond_number = cond;
            t.batches = batches;
            t.init = init;
            cfg.task = t;
        } else {
            cfg.task = mlp.task(objective);
        }

        const Trajectory traj = run_training(cfg);
        const fs::path path(common.out);
        ensure_parent(path);
        write_trajectory(traj, path, pick_format(format, path));
        for (const auto& w : traj.warnings) out << "warning: " << w << '\n';
        out << "wrote " << traj.steps.size() << " step records to " << path.string() << '\n';
        out << "epochs completed: " << traj.final.epochs_completed << ", final loss: " << fmt(traj.final.final_loss);
        if (traj.final.final_metric) out << ", final metric: " << fmt(*traj.final.final_metric);
        out << '\n';
        if (traj.final.diverged) {
            out << "diverged: run truncated at step " << traj.final.steps_completed << '\n';
            return kExitDiverged;
        }
        return kExitOk;
    }
};

// ---- toy ----

struct ToyCmd {
    Common common;
    std::string function = "all";
    std::string format = "jsonl";

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("toy", "Run the paired vanilla/active analytic-function scenarios");
        common.add(cmd, "toy_out", "Output directory");
        std::vector<std::string> choices = {"all"};
        for (ToyFunction fn : all_toy_functions()) choices.emplace_back(to_string(fn));
        cmd->add_option("--function", function, "Scenario to run")->check(CLI::IsMember(choices))->capture_default_str();
        cmd->add_option("--format", format, "Trajectory format")
            ->check(CLI::IsMember({"jsonl", "csv"}))
            ->capture_default_str();
    }

    int run(std::ostream& out) const {
        const std::uint64_t seed = common.resolved_seed();
        std::vector<ToyFunction> fns;
        if (function == "all") {
            fns = all_toy_functions();
        } else {
            fns.push_back(*parse_toy_function(function));
        }
        const fs::path dir(common.out);
        fs::create_directories(dir);
        const TrajectoryFormat fmt_kind = *parse_trajectory_format(format);
        const std::string ext = fmt_kind == TrajectoryFormat::Csv ? ".csv" : ".jsonl";

        out << "function    variant  epochs  final point               escaped at step  diverged\n";
        for (ToyFunction fn : fns) {
            for (bool active : {false, true}) {
                const Trajectory traj = run_training(toy_scenario(fn, active, seed));
                const std::string name = std::string(to_string(fn)) + (active ? "_active" : "_vanilla") + ext;
                write_trajectory(traj, dir / name, fmt_kind);
                char line[256];
                std::snprintf(line, sizeof line, "%-11s %-8s %6zu  %-25s %-16s %s\n", std::string(to_string(fn)).c_str(),
                              active ? "active" : "vanilla", traj.final.epochs_completed,
                              fmt_vec(traj.final.final_params).c_str(),
                              traj.final.escaped_at_step ? std::to_string(*traj.final.escaped_at_step).c_str() : "-",
                              traj.final.diverged ? "yes" : "no");
                out << line;
            }
        }
        out << "wrote " << 2 * fns.size() << " trajectories to " << dir.string() << '\n';
        return kExitOk;
    }
};

// ---- verify ----

struct VerifyCmd {
    Common common;
    std::size_t cases = 200;
    std::size_t walk_seeds = 30;
    std::size_t walk_steps = 10000;
    std::string objective;
    double alpha = 0.01;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("verify", "Run the convexity property suites and the learning-rate walk");
        common.add(cmd, "", "Optional JSON report path");
        cmd->add_option("--cases", cases, "Random problems per suite")->capture_default_str();
        cmd->add_option("--walk-seeds", walk_seeds, "Seeds for the learning-rate walk")->capture_default_str();
        cmd->add_option("--walk-steps", walk_steps, "Steps per walk")->capture_default_str();
        cmd->add_option("--objective", objective, "Check one analytic objective instead of the suites")
            ->check(CLI::IsMember(analytic_objective_names()));
        cmd->add_option("--alpha", alpha, "Rate for --objective checks")->capture_default_str();
    }

    static void row(std::ostream& out, const std::string& check, bool ok, const std::string& detail) {
        char line[512];
        std::snprintf(line, sizeof line, "%-26s %-5s %s\n", check.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
        out << line;
    }

    int run_objective(std::ostream& out, std::uint64_t seed) const {
        const Objective obj = analytic_objective(objective);
        if (!obj.convex) {
            throw ScopeError("objective '" + objective + "' is not convex; the convexity checks do not apply");
        }
        if (!(alpha > 0.0)) throw UsageError("--alpha must be positive");
        const Vec theta = default_init(objective);
        nlohmann::json report;
        bool all_ok = true;
        out << "check                      result detail\n";
        if (obj.batches.size() >= 2) {
            const AgreementReport r1 = check_agreement(obj, theta, alpha, seed);
            const bool ok = r1.diverged || (r1.elementwise_nonnegative() &&
                                            (r1.product.size() != 1 || r1.scalar_bound_holds()));
            all_ok = all_ok && ok;
            row(out, "agreement " + objective, ok,
                r1.diverged ? "diverged, no assertion"
                            : "product " + fmt_vec(r1.product) + " lower bound " + fmt(r1.lower_bound));
            report["agreement"] = nlohmann::json::parse(to_json(r1));
        } else {
            out << "agreement " << objective << ": skipped, objective has fewer than 2 batch terms\n";
        }
        const Vec g = obj.gradient(theta);
        for (bool high : {true, false}) {
            Vec prior = g;
            if (!high) {
                for (double& v : prior) v = -v;
            }
            const SignSwitchReport r2 = check_sign_switch(obj, theta, alpha, 2.0 * alpha, 0.5 * alpha, prior);
            const bool ok = r2.lhs_dominates() && (!r2.segment_condition || r2.rhs_nonnegative());
            all_ok = all_ok && ok;
            row(out, std::string("sign_switch ") + (high ? "high " : "low ") + objective, ok,
                "lhs " + fmt(r2.lhs) + " rhs " + fmt(r2.rhs) +
                    (r2.segment_condition ? " (segment condition holds)" : ""));
            report[high ? "sign_switch_high" : "sign_switch_low"] = nlohmann::json::parse(to_json(r2));
        }
        if (!common.out.empty()) write_text(common.out, report.dump(2) + "\n");
        return all_ok ? kExitOk : kExitCheckFailed;
    }

    int run(std::ostream& out) const {
        const std::uint64_t seed = common.resolved_seed();
        if (!objective.empty()) return run_objective(out, seed);
        if (cases == 0) throw UsageError("--cases must be at least 1");
        if (walk_seeds == 0 || walk_steps == 0) throw UsageError("--walk-seeds and --walk-steps must be at least 1");

        const AgreementSuiteResult t1 = agreement_suite(cases, seed);
        const SignSwitchSuiteResult t2 = sign_switch_suite(cases, seed);
        const WalkSuiteResult walk = walk_suite(walk_seeds, walk_steps, seed);

        out << "check                      result detail\n";
        const std::size_t checked = t1.cases - t1.diverged;
        row(out, "agreement (" + std::to_string(t1.cases) + " cases)", t1.passed(),
            "elementwise failures " + std::to_string(t1.elementwise_failures) + "/" + std::to_string(checked) +
                ", scalar bound failures " + std::to_string(t1.scalar_bound_failures) + "/" +
                std::to_string(t1.scalar_cases) + ", inner-product bound failures " +
                std::to_string(t1.inner_product_failures) + ", diverged " + std::to_string(t1.diverged));
        row(out, "sign_switch (" + std::to_string(t2.cases) + " cases)", t2.passed(),
            "lhs<rhs " + std::to_string(t2.lhs_failures) + ", rhs<0 under segment condition " +
                std::to_string(t2.rhs_failures) + "/" + std::to_string(t2.segment_cases) + " (high " +
                std::to_string(t2.high_cases) + ", low " + std::to_string(t2.low_cases) + ", mixed " +
                std::to_string(t2.mixed_cases) + ")");
        const auto& ma = walk.pair(LowOp::Multiply, HighOp::Add);
        row(out, "lr walk (" + std::to_string(walk_seeds) + " seeds)", walk.passed(),
            "multiply/add mean " + fmt(ma.grand_mean, 4) + " std " + fmt(ma.grand_std, 4) + ", min>0 in " +
                std::to_string(ma.positive_seeds) + "/" + std::to_string(ma.seeds) + " seeds");
        for (const auto& p : walk.pairs) {
            out << "    " << to_string(p.low_op) << "/" << to_string(p.high_op) << ": mean " << fmt(p.grand_mean, 4)
                << ", std " << fmt(p.grand_std, 4) << ", crossed zero " << p.crossed_zero_seeds << ", shrunk "
                << p.shrunk_seeds << ", bounded " << (p.bounded ? "yes" : "no") << '\n';
        }

        if (!common.out.empty()) {
            nlohmann::json report;
            report["seed"] = seed;
            report["agreement"] = nlohmann::json::parse(to_json(t1));
            report["sign_switch"] = nlohmann::json::parse(to_json(t2));
            report["walk"] = nlohmann::json::parse(to_json(walk));
            write_text(common.out, report.dump(2) + "\n");
        }
        return t1.passed() && t2.passed() && walk.passed() ? kExitOk : kExitCheckFailed;
    }
};

// ---- sweep ----

struct SweepCmd {
    Common common;
    std::string kind = "lr";
    BackboneFlags backbone;
    ActiveFlags active;
    MlpFlags mlp;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::vector<double> grid;
    std::vector<std::size_t> sizes;
    std::size_t seeds = 3;
    std::size_t threads = 0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("sweep", "Learning-rate or batch-size sensitivity sweep on an MLP task");
        common.add(cmd, "sweep.json", "JSON report path");
        cmd->add_option("--kind", kind, "Sweep dimension")->check(CLI::IsMember({"lr", "batch-size"}))->capture_default_str();
        backbone.add(cmd);
        active.add(cmd, false);
        mlp.add(cmd, true);
        cmd->add_option("--epochs", epochs, "Epochs per run")->capture_default_str();
        cmd->add_option("--batch-size", batch_size, "Mini-batch size for lr sweeps")->capture_default_str();
        cmd->add_option("--grid", grid, "Learning rates (default 5e-7 ... 5e-3 in half decades)")->delimiter(',');
        cmd->add_option("--sizes", sizes, "Batch sizes (default 8,32,128 and the full batch)")->delimiter(',');
        cmd->add_option("--seeds", seeds, "Seeds per cell")->capture_default_str();
        cmd->add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
    }

    int run(std::ostream& out) const {
        RunConfig base;
        base.seed = common.resolved_seed();
        base.backbone = backbone.config();
        base.active_cfg = active.config();
        base.epochs = epochs;
        base.batch_size = std::min(batch_size, mlp.samples);
        base.task = mlp.task(mlp.dataset);

        SweepReport report;
        if (kind == "lr") {
            report = lr_sensitivity_sweep(base, grid.empty() ? default_lr_grid() : grid, seeds, threads);
        } else {
            std::vector<std::size_t> s = sizes;
            if (s.empty()) s = {8, 32, 128, mlp.samples};
            report = batch_size_sweep(base, s, seeds, threads);
        }
        write_text(common.out, to_json(report) + "\n");

        out << "value        vanilla loss  active loss   vanilla metric  active metric\n";
        for (std::size_t i = 0; i < report.grid.size(); ++i) {
            const auto& v = report.vanilla.cells[i];
            const auto& a = report.active.cells[i];
            char line[256];
            std::snprintf(line, sizeof line, "%-12s %-13s %-13s %-15s %s\n", fmt(report.grid[i]).c_str(),
                          v.all_diverged() ? "diverged" : fmt(v.mean_loss, 5).c_str(),
                          a.all_diverged() ? "diverged" : fmt(a.mean_loss, 5).c_str(),
                          v.mean_metric ? fmt(*v.mean_metric, 4).c_str() : "-",
                          a.mean_metric ? fmt(*a.mean_metric, 4).c_str() : "-");
            out << line;
        }
        auto spread = [](const SweepSeries& s) {
            return s.loss_spread ? fmt(*s.loss_spread, 5) : std::string("undefined (all cells diverged)");
        };
        out << "loss spread: vanilla " << spread(report.vanilla) << ", active " << spread(report.active) << '\n';
        if (report.vanilla.full_batch_metric_drop && report.active.full_batch_metric_drop) {
            out << "full-batch metric drop: vanilla " << fmt(*report.vanilla.full_batch_metric_drop, 4) << ", active "
                << fmt(*report.active.full_batch_metric_drop, 4) << '\n';
        }
        out << "report written to " << common.out << '\n';
        return kExitOk;
    }
};

// ---- serve ----

std::atomic<TrajServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
    if (TrajServer* s = g_server.load()) s->stop();
}

struct ServeCmd {
    Common common;
    int port = kDefaultPort;
    std::string host = "127.0.0.1";
    std::size_t max_iters = kDefaultIterationCap;
    std::string static_dir;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("serve", "Serve trajectories over HTTP for the playground");
        common.add(cmd, "", "Optional access log file");
        cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535))->capture_default_str();
        cmd->add_option("--host", host, "Bind address")->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "Per-request iteration cap")->capture_default_str();
        cmd->add_option("--static-dir", static_dir, "Directory of static assets served at /");
    }

    int run(std::ostream& out, std::ostream& err) const {
        ServiceOptions opts;
        opts.iteration_cap = max_iters;
        opts.default_seed = common.resolved_seed();
        opts.static_dir = static_dir;
        if (!static_dir.empty() && !fs::is_directory(static_dir)) {
            throw UsageError("--static-dir '" + static_dir + "' is not a directory");
        }
        std::shared_ptr<std::ofstream> log_file;
        if (!common.out.empty()) {
            log_file = std::make_shared<std::ofstream>(common.out, std::ios::app);
            if (!*log_file) throw IoError("cannot open log file '" + common.out + "'");
            auto mutex = std::make_shared<std::mutex>();
            opts.access_log = [log_file, mutex](const std::string& line) {
                std::lock_guard<std::mutex> lock(*mutex);
                *log_file << line << std::endl;
            };
        }
        TrajServer server(opts);
        const int bound = server.bind(host, port);
        if (bound < 0) {
            err << "error: cannot listen on " << host << ":" << port << " (address in use or unavailable)\n";
            return kExitUsage;
        }
        out << "listening on http://" << host << ":" << bound << " (iteration cap " << max_iters << ")" << std::endl;
        g_server.store(&server);
        std::signal(SIGINT, handle_stop_signal);
        std::signal(SIGTERM, handle_stop_signal);
        const bool ok = server.listen_after_bind();
        g_server.store(nullptr);
        return ok ? kExitOk : kExitUsage;
    }
};

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Per-parameter sign-driven learning-rate adaptation: experiments and checks", "activelr"};
    app.require_subcommand(1);
    app.fallthrough(false);

    TrainCmd train;
    ToyCmd toy;
    VerifyCmd verify;
    SweepCmd sweep;
    ServeCmd serve;
    train.add(app);
    toy.add(app);
    verify.add(app);
    sweep.add(app);
    serve.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand("train")) return train.run(out);
        if (app.got_subcommand("toy")) return toy.run(out);
        if (app.got_subcommand("verify")) return verify.run(out);
        if (app.got_subcommand("sweep")) return sweep.run(out);
        if (app.got_subcommand("serve")) return serve.run(out, err);
    } catch (const ScopeError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace activelr
