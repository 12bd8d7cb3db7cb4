#include "activelr/verification.hpp"

#include "activelr/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace activelr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_convex(const Objective& obj, const char* who) {
    if (!obj.convex) {
        throw ScopeError(std::string(who) + ": objective '" + obj.name +
                         "' is not convex; the check only covers convex objectives");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Rounding allowance for an expression built from terms of magnitude `scale`.
double slack(double scale) { return 1e-10 * scale + 1e-300; }

nlohmann::json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json vector_json(const Vec& v) {
    nlohmann::json out = nlohmann::json::array();
    for (double x : v) out.push_back(number_or_null(x));
    return out;
}

} // namespace

double AgreementReport::bound_rounding() const {
    return 1e-13 * (std::abs(initial_loss) + std::abs(final_loss)) / alpha;
}

bool AgreementReport::elementwise_nonnegative() const {
    for (std::size_t i = 0; i < product.size(); ++i) {
        const double scale = (std::abs(cu_star[i]) + std::abs(cu_hat[i]));
        if (product[i] < -slack(scale * scale)) return false;
    }
    return true;
}

bool AgreementReport::scalar_bound_holds() const {
    if (product.size() != 1) return true;
    const double tol = slack(std::abs(product[0]) + std::abs(lower_bound)) + bound_rounding();
    return product[0] >= lower_bound - tol && lower_bound >= -tol;
}

bool AgreementReport::inner_product_bound_holds() const {
    const double tol = slack(std::abs(inner_product) + std::abs(lower_bound)) + bound_rounding();
    return inner_product >= lower_bound - tol;
}

AgreementReport check_agreement(const Objective& obj, std::span<const double> theta0, double alpha,
                              std::uint64_t order_seed) {
    require_convex(obj, "check_agreement");
    if (obj.batches.size() < 2) {
        throw std::invalid_argument("check_agreement: need at least 2 mini-batch terms");
    }
    if (theta0.size() != obj.dim) throw std::invalid_argument("check_agreement: dimension mismatch");
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::invalid_argument("check_agreement: alpha must be positive");
    }

    const std::size_t n = obj.dim;
    const std::size_t k = obj.batches.size();
    AgreementReport r;
    r.alpha = alpha;
    r.order.resize(k);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::mt19937_64 rng(order_seed);
    std::shuffle(r.order.begin(), r.order.end(), rng);

    r.cu_star.assign(n, 0.0);
    r.cu_hat.assign(n, 0.0);
    Vec g(n);
    Vec theta_hat(theta0.begin(), theta0.end());
    for (std::size_t t : r.order) {
        obj.batches[t].grad(theta0, g);
        for (std::size_t i = 0; i < n; ++i) r.cu_star[i] += g[i];
        r.initial_loss += obj.batches[t].eval(theta0);

        obj.batches[t].grad(theta_hat, g);
        for (std::size_t i = 0; i < n; ++i) {
            r.cu_hat[i] += g[i];
            theta_hat[i] -= alpha * g[i];
        }
    }
    for (std::size_t t = 0; t < k; ++t) r.final_loss += obj.batches[t].eval(theta_hat);

    r.product.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.product[i] = r.cu_star[i] * r.cu_hat[i];
    r.inner_product = dot(r.cu_star, r.cu_hat);
    r.lower_bound = (r.initial_loss - r.final_loss) / alpha;
    r.diverged = !std::isfinite(r.final_loss) || r.final_loss > r.initial_loss;
    return r;
}

bool SignSwitchReport::lhs_dominates() const {
    const double tol = slack(std::abs(loss_vanilla) + std::abs(loss_active) + std::abs(rhs));
    return lhs >= rhs - tol;
}

bool SignSwitchReport::rhs_nonnegative() const {
    double scale = 0.0;
    for (std::size_t i = 0; i < grad_next.size(); ++i) {
        scale += std::abs(grad_after[i] * grad_next[i] * branch_alpha[i]);
    }
    return rhs >= -slack(scale);
}

SignSwitchReport check_sign_switch(const Objective& obj, std::span<const double> theta_e, double alpha,
                              double alpha_high, double alpha_low, std::span<const double> prior_grad) {
    require_convex(obj, "check_sign_switch");
    const std::size_t n = obj.dim;
    if (theta_e.size() != n || prior_grad.size() != n) {
        throw std::invalid_argument("check_sign_switch: dimension mismatch");
    }
    if (!(alpha_low > 0.0 && alpha_low < alpha && alpha < alpha_high && std::isfinite(alpha_high))) {
        throw std::invalid_argument("check_sign_switch: need 0 < alpha_low < alpha < alpha_high");
    }

    SignSwitchReport r;
    r.grad_next.assign(n, 0.0);
    obj.grad(theta_e, r.grad_next);

    Vec theta_s(n);
    Vec theta_a(n);
    r.branch_alpha.resize(n);
    r.high_branch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool high = prior_grad[i] * r.grad_next[i] > 0.0;
        r.high_branch[i] = high;
        r.branch_alpha[i] = high ? alpha_high : alpha_low;
        theta_s[i] = theta_e[i] - alpha * r.grad_next[i];
        theta_a[i] = theta_e[i] - r.branch_alpha[i] * r.grad_next[i];
    }
    r.grad_after.assign(n, 0.0);
    obj.grad(theta_a, r.grad_after);
    r.loss_vanilla = obj.eval(theta_s);
    r.loss_active = obj.eval(theta_a);
    r.lhs = r.loss_vanilla - r.loss_active;

    r.segment_condition = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double agreement = r.grad_after[i] * r.grad_next[i];
        r.rhs += agreement * (r.branch_alpha[i] - alpha);
        if (r.high_branch[i] ? agreement < 0.0 : agreement > 0.0) r.segment_condition = false;
    }
    return r;
}

WalkStats simulate_lr_walk(LowOp low_op, HighOp high_op, double alpha_low, double alpha_high,
                           double alpha_init, std::size_t epochs, std::uint64_t seed) {
    if (epochs == 0) throw std::invalid_argument("simulate_lr_walk: epochs must be >= 1");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);

    WalkStats s;
    s.series.reserve(epochs);
    double a = alpha_init;
    for (std::size_t e = 0; e < epochs; ++e) {
        if (coin(rng)) {
            a = low_op == LowOp::Multiply ? a * alpha_low : a - alpha_low;
        } else {
            a = high_op == HighOp::Add ? a + alpha_high : a * alpha_high;
        }
        s.series.push_back(a);
    }

    const std::size_t start = epochs > kWalkBurnIn ? kWalkBurnIn : 0;
    const auto tail = std::span<const double>(s.series).subspan(start);
    const double count = static_cast<double>(tail.size());
    s.mean = std::accumulate(tail.begin(), tail.end(), 0.0) / count;
    double var = 0.0;
    for (double x : tail) var += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(var / count);
    s.min = *std::min_element(s.series.begin(), s.series.end());
    s.crossed_zero = s.min < 0.0;
    return s;
}

Vec finite_diff_grad(const Objective& obj, std::span<const double> theta, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Vec probe(theta.begin(), theta.end());
    Vec g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double step = h * (1.0 + std::abs(theta[i]));
        probe[i] = theta[i] + step;
        const double up = obj.eval(probe);
        probe[i] = theta[i] - step;
        const double down = obj.eval(probe);
        probe[i] = theta[i];
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

AgreementSuiteResult agreement_suite(std::size_t cases, std::uint64_t seed) {
    const auto start = Clock::now();
    AgreementSuiteResult res;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 8);
    std::uniform_int_distribution<std::size_t> batch_dist(2, 16);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t dim = unit(rng) < 0.25 ? 1 : dim_dist(rng);
        const std::size_t k = batch_dist(rng);
        const double cond = std::pow(100.0, unit(rng));
        const QuadraticProblem q = random_convex_quadratic(rng(), dim, cond, k);
        const Objective obj = q.objective();
        Vec theta0(dim);
        for (std::size_t i = 0; i < dim; ++i) theta0[i] = q.minimizer[static_cast<Eigen::Index>(i)] + 3.0 * normal(rng);
        const double alpha = (1.0 - unit(rng)) / (2.0 * q.lipschitz);
        const AgreementReport r = check_agreement(obj, theta0, alpha, rng());

        ++res.cases;
        if (r.diverged) {
            ++res.diverged;
            continue;
        }
        if (!r.elementwise_nonnegative()) ++res.elementwise_failures;
        if (!r.inner_product_bound_holds()) ++res.inner_product_failures;
        if (dim == 1) {
            ++res.scalar_cases;
            if (!r.scalar_bound_holds()) ++res.scalar_bound_failures;
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

SignSwitchSuiteResult sign_switch_suite(std::size_t cases, std::uint64_t seed) {
    const auto start = Clock::now();
    SignSwitchSuiteResult res;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t dim = dim_dist(rng);
        const double cond = std::pow(100.0, unit(rng));
        const QuadraticProblem q = random_convex_quadratic(rng(), dim, cond, 1);
        const Objective obj = q.objective();
        Vec theta_e(dim);
        for (std::size_t i = 0; i < dim; ++i) theta_e[i] = q.minimizer[static_cast<Eigen::Index>(i)] + 3.0 * normal(rng);

        // Rates span both the monotone and the overshooting regime.
        const double alpha = (0.05 + 1.9 * unit(rng)) / q.lipschitz;
        const double alpha_high = alpha * (1.0 + unit(rng));
        const double alpha_low = alpha * (0.05 + 0.9 * unit(rng));

        const Vec g = obj.gradient(theta_e);
        Vec prior(dim);
        const std::size_t pattern = c % 3;   // 0 all high, 1 all low, 2 mixed
        for (std::size_t i = 0; i < dim; ++i) {
            bool agree = pattern == 0 || (pattern == 2 && unit(rng) < 0.5);
            const double magnitude = 0.1 + unit(rng);
            const double sign = g[i] >= 0.0 ? 1.0 : -1.0;
            prior[i] = (agree ? sign : -sign) * magnitude;
        }
        const SignSwitchReport r = check_sign_switch(obj, theta_e, alpha, alpha_high, alpha_low, prior);

        ++res.cases;
        const auto n_high = static_cast<std::size_t>(std::count(r.high_branch.begin(), r.high_branch.end(), true));
        if (n_high == dim) {
            ++res.high_cases;
        } else if (n_high == 0) {
            ++res.low_cases;
        } else {
            ++res.mixed_cases;
        }
        if (!r.lhs_dominates()) ++res.lhs_failures;
        if (r.segment_condition) {
            ++res.segment_cases;
            if (!r.rhs_nonnegative()) ++res.rhs_failures;
        }
    }
    res.seconds = seconds_since(start);
    return res;
}

const WalkPairResult& WalkSuiteResult::pair(LowOp low, HighOp high) const {
    for (const auto& p : pairs) {
        if (p.low_op == low && p.high_op == high) return p;
    }
    throw std::out_of_range("walk suite: operation pair not present");
}

bool WalkSuiteResult::passed() const {
    std::size_t stable = 0;
    for (const auto& p : pairs) {
        if (p.bounded && p.positive_seeds == p.seeds) ++stable;
    }
    const auto& mul_add = pair(LowOp::Multiply, HighOp::Add);
    const auto& mul_mul = pair(LowOp::Multiply, HighOp::Multiply);
    const auto& sub_add = pair(LowOp::Subtract, HighOp::Add);
    const auto& sub_mul = pair(LowOp::Subtract, HighOp::Multiply);
    const std::size_t need = mul_add.seeds > 0 ? mul_add.seeds - 1 : 0;
    return stable == 1 && mul_add.bounded && mul_add.positive_seeds == mul_add.seeds &&
           sub_add.crossed_zero_seeds >= need && sub_mul.crossed_zero_seeds >= need &&
           mul_mul.shrunk_seeds >= need;
}

WalkSuiteResult walk_suite(std::size_t seeds, std::size_t epochs, std::uint64_t seed, double alpha_low,
                           double alpha_high, double alpha_init) {
    const auto start = Clock::now();
    WalkSuiteResult res;
    const std::pair<LowOp, HighOp> combos[] = {{LowOp::Multiply, HighOp::Add},
                                               {LowOp::Multiply, HighOp::Multiply},
                                               {LowOp::Subtract, HighOp::Add},
                                               {LowOp::Subtract, HighOp::Multiply}};
    for (const auto& [low, high] : combos) {
        WalkPairResult p;
        p.low_op = low;
        p.high_op = high;
        p.seeds = seeds;
        p.bounded = true;
        for (std::size_t s = 0; s < seeds; ++s) {
            const WalkStats w = simulate_lr_walk(low, high, alpha_low, alpha_high, alpha_init, epochs, seed + s);
            p.grand_mean += w.mean;
            p.grand_std += w.std;
            if (w.min > 0.0) ++p.positive_seeds;
            if (w.crossed_zero) ++p.crossed_zero_seeds;
            if (std::abs(w.mean) < 1e-2 * std::abs(alpha_init)) ++p.shrunk_seeds;
            if (!std::isfinite(w.mean) || std::abs(w.mean) > 1e3 * std::abs(alpha_init)) p.bounded = false;
        }
        if (seeds > 0) {
            p.grand_mean /= static_cast<double>(seeds);
            p.grand_std /= static_cast<double>(seeds);
        }
        res.pairs.push_back(p);
    }
    res.seconds = seconds_since(start);
    return res;
}

std::string to_json(const AgreementReport& r) {
    nlohmann::json j;
    j["cu_star"] = vector_json(r.cu_star);
    j["cu_hat"] = vector_json(r.cu_hat);
    j["product"] = vector_json(r.product);
    j["inner_product"] = number_or_null(r.inner_product);
    j["lower_bound"] = number_or_null(r.lower_bound);
    j["initial_loss"] = number_or_null(r.initial_loss);
    j["final_loss"] = number_or_null(r.final_loss);
    j["diverged"] = r.diverged;
    j["elementwise_nonnegative"] = r.elementwise_nonnegative();
    j["inner_product_bound_holds"] = r.inner_product_bound_holds();
    if (r.product.size() == 1) j["scalar_bound_holds"] = r.scalar_bound_holds();
    return j.dump();
}

std::string to_json(const SignSwitchReport& r) {
    nlohmann::json j;
    j["grad_next"] = vector_json(r.grad_next);
    j["grad_after"] = vector_json(r.grad_after);
    j["branch_alpha"] = vector_json(r.branch_alpha);
    j["loss_vanilla"] = number_or_null(r.loss_vanilla);
    j["loss_active"] = number_or_null(r.loss_active);
    j["lhs"] = number_or_null(r.lhs);
    j["rhs"] = number_or_null(r.rhs);
    j["segment_condition"] = r.segment_condition;
    j["lhs_dominates"] = r.lhs_dominates();
    j["rhs_nonnegative"] = r.rhs_nonnegative();
    return j.dump();
}

std::string to_json(const AgreementSuiteResult& r) {
    nlohmann::json j;
    j["cases"] = r.cases;
    j["diverged"] = r.diverged;
    j["elementwise_failures"] = r.elementwise_failures;
    j["scalar_cases"] = r.scalar_cases;
    j["scalar_bound_failures"] = r.scalar_bound_failures;
    j["inner_product_failures"] = r.inner_product_failures;
    j["seconds"] = r.seconds;
    j["passed"] = r.passed();
    return j.dump();
}

std::string to_json(const SignSwitchSuiteResult& r) {
    nlohmann::json j;
    j["cases"] = r.cases;
    j["high_cases"] = r.high_cases;
    j["low_cases"] = r.low_cases;
    j["mixed_cases"] = r.mixed_cases;
    j["lhs_failures"] = r.lhs_failures;
    j["segment_cases"] = r.segment_cases;
    j["rhs_failures"] = r.rhs_failures;
    j["seconds"] = r.seconds;
    j["passed"] = r.passed();
    return j.dump();
}

std::string to_json(const WalkSuiteResult& r) {
    nlohmann::json j;
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : r.pairs) {
        nlohmann::json e;
        e["low_op"] = std::string(to_string(p.low_op));
        e["high_op"] = std::string(to_string(p.high_op));
        e["seeds"] = p.seeds;
        e["grand_mean"] = number_or_null(p.grand_mean);
        e["grand_std"] = number_or_null(p.grand_std);
        e["positive_seeds"] = p.positive_seeds;
        e["crossed_zero_seeds"] = p.crossed_zero_seeds;
        e["shrunk_seeds"] = p.shrunk_seeds;
        e["bounded"] = p.bounded;
        j["pairs"].push_back(e);
    }
    j["seconds"] = r.seconds;
    j["passed"] = r.passed();
    return j.dump();
}

std::string_view to_string(LowOp op) { return op == LowOp::Multiply ? "multiply" : "subtract"; }
std::string_view to_string(HighOp op) { return op == HighOp::Add ? "add" : "multiply"; }

} // namespace activelr
