#include "activelr/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

namespace activelr {

Vec Objective::gradient(std::span<const double> theta) const {
    Vec g(dim, 0.0);
    grad(theta, g);
    return g;
}

Objective cubic_1d() {
    Objective obj;
    obj.name = "cubic";
    obj.dim = 1;
    obj.eval = [](std::span<const double> p) {
        const double x = p[0];
        return x * x * x - 6.0 * x * x + 9.0 * x;
    };
    obj.grad = [](std::span<const double> p, std::span<double> g) {
        const double x = p[0];
        g[0] = 3.0 * x * x - 12.0 * x + 9.0;
    };
    obj.stationary_points = {{1.0}, {3.0}};
    obj.escaped = [](std::span<const double> p) { return p[0] < 0.5; };
    return obj;
}

Objective bivariate_multimodal() {
    Objective obj;
    obj.name = "multimodal";
    obj.dim = 2;
    obj.eval = [](std::span<const double> p) {
        const double x = p[0];
        const double y = p[1];
        return -x * x * x - x * x * y + y * y + 4.0 * y + 1680.0;
    };
    obj.grad = [](std::span<const double> p, std::span<double> g) {
        const double x = p[0];
        const double y = p[1];
        g[0] = -3.0 * x * x - 2.0 * x * y;
        g[1] = -x * x + 2.0 * y + 4.0;
    };
    // (-4, 6) has an indefinite Hessian; these are stationary points, not all minima.
    obj.stationary_points = {{-4.0, 6.0}, {0.0, -2.0}, {1.0, -1.5}};
    auto eval = obj.eval;
    obj.escaped = [eval](std::span<const double> p) { return eval(p) < kMultimodalEscapeLevel; };
    return obj;
}

Objective saddle_2d() {
    Objective obj;
    obj.name = "saddle";
    obj.dim = 2;
    obj.eval = [](std::span<const double> p) {
        const double x = p[0];
        const double y = p[1];
        const double y2 = y * y;
        return y2 * y2 - 2.0 * y2 + x * x;
    };
    obj.grad = [](std::span<const double> p, std::span<double> g) {
        const double x = p[0];
        const double y = p[1];
        g[0] = 2.0 * x;
        g[1] = 4.0 * y * y * y - 4.0 * y;
    };
    obj.stationary_points = {{0.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    return obj;
}

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> p) {
    return {p.data(), static_cast<Eigen::Index>(p.size())};
}

double term_value(const QuadraticTerm& term, std::span<const double> p) {
    const Eigen::VectorXd d = as_vector(p) - term.center;
    return 0.5 * d.dot(term.a * d);
}

void term_gradient(const QuadraticTerm& term, std::span<const double> p, std::span<double> g) {
    const Eigen::VectorXd r = term.a * (as_vector(p) - term.center);
    std::copy(r.data(), r.data() + r.size(), g.begin());
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            g(i, j) = normal(rng);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

} // namespace

Objective QuadraticProblem::objective() const {
    auto shared = std::make_shared<const QuadraticProblem>(*this);
    Objective obj;
    obj.name = "quadratic";
    obj.dim = dim();
    obj.convex = true;
    obj.eval = [shared](std::span<const double> p) {
        double sum = 0.0;
        for (const auto& term : shared->terms) sum += term_value(term, p);
        return sum / static_cast<double>(shared->terms.size());
    };
    obj.grad = [shared](std::span<const double> p, std::span<double> g) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
        for (const auto& term : shared->terms) acc += term.a * (as_vector(p) - term.center);
        acc /= static_cast<double>(shared->terms.size());
        std::copy(acc.data(), acc.data() + acc.size(), g.begin());
    };
    for (std::size_t k = 0; k < terms.size(); ++k) {
        BatchTerm bt;
        bt.eval = [shared, k](std::span<const double> p) { return term_value(shared->terms[k], p); };
        bt.grad = [shared, k](std::span<const double> p, std::span<double> g) {
            term_gradient(shared->terms[k], p, g);
        };
        obj.batches.push_back(std::move(bt));
    }
    obj.stationary_points = {Vec(minimizer.data(), minimizer.data() + minimizer.size())};
    return obj;
}

QuadraticProblem make_quadratic(std::vector<QuadraticTerm> terms) {
    if (terms.empty()) {
        throw std::invalid_argument("make_quadratic: need at least one term");
    }
    const Eigen::Index n = terms.front().center.size();
    if (n == 0) {
        throw std::invalid_argument("make_quadratic: zero-dimensional term");
    }
    QuadraticProblem problem;
    problem.hessian = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (const auto& term : terms) {
        if (term.a.rows() != n || term.a.cols() != n || term.center.size() != n) {
            throw std::invalid_argument("make_quadratic: inconsistent term shapes");
        }
        problem.hessian += term.a;
        rhs += term.a * term.center;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(term.a, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < 0.0) {
            throw std::invalid_argument("make_quadratic: term matrix is not positive semidefinite");
        }
        problem.lipschitz = std::max(problem.lipschitz, eig.eigenvalues().maxCoeff());
    }
    const double k = static_cast<double>(terms.size());
    problem.hessian /= k;
    rhs /= k;
    Eigen::LLT<Eigen::MatrixXd> llt(problem.hessian);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("make_quadratic: mean Hessian is not positive definite");
    }
    problem.minimizer = llt.solve(rhs);
    problem.terms = std::move(terms);
    return problem;
}

QuadraticProblem random_convex_quadratic(std::uint64_t seed, std::size_t dim, double cond_number,
                                         std::size_t batches) {
    if (dim == 0) throw std::invalid_argument("random_convex_quadratic: dim must be >= 1");
    if (!(cond_number >= 1.0)) throw std::invalid_argument("random_convex_quadratic: cond_number must be >= 1");
    if (batches == 0) throw std::invalid_argument("random_convex_quadratic: batches must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    const double log_cond = std::log(cond_number);

    Eigen::VectorXd common(n);
    for (Eigen::Index i = 0; i < n; ++i) common(i) = normal(rng);

    std::vector<QuadraticTerm> terms;
    terms.reserve(batches);
    for (std::size_t k = 0; k < batches; ++k) {
        Eigen::VectorXd eigenvalues(n);
        for (Eigen::Index i = 0; i < n; ++i) eigenvalues(i) = std::exp(unit(rng) * log_cond);
        if (n > 1) {
            eigenvalues(0) = 1.0;
            eigenvalues(n - 1) = cond_number;
        }
        const Eigen::MatrixXd q = random_orthogonal(rng, n);
        QuadraticTerm term;
        term.a = q * eigenvalues.asDiagonal() * q.transpose();
        term.a = 0.5 * (term.a + term.a.transpose());
        term.center = common;
        if (batches > 1) {
            for (Eigen::Index i = 0; i < n; ++i) term.center(i) += normal(rng);
        }
        terms.push_back(std::move(term));
    }
    return make_quadratic(std::move(terms));
}

std::vector<std::vector<std::size_t>> minibatch_split(std::size_t n, std::size_t batch_size,
                                                      std::uint64_t seed, bool shuffle) {
    if (batch_size == 0 || batch_size > n) {
        throw std::invalid_argument("minibatch_split: batch_size must lie in [1, n]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

Objective mse_line() {
    // Fixed sample of y = 2x + noise on x in [-1, 1]; independent of any run seed.
    auto xs = std::make_shared<Vec>();
    auto ys = std::make_shared<Vec>();
    std::mt19937_64 rng(2022);
    std::normal_distribution<double> noise(0.0, 0.3);
    constexpr int kPoints = 16;
    for (int i = 0; i < kPoints; ++i) {
        const double x = -1.0 + 2.0 * i / (kPoints - 1);
        xs->push_back(x);
        ys->push_back(2.0 * x + noise(rng));
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (int i = 0; i < kPoints; ++i) {
        sxx += (*xs)[i] * (*xs)[i];
        sxy += (*xs)[i] * (*ys)[i];
    }

    Objective obj;
    obj.name = "mse_line";
    obj.dim = 1;
    obj.convex = true;
    obj.eval = [xs, ys](std::span<const double> p) {
        double sum = 0.0;
        for (std::size_t i = 0; i < xs->size(); ++i) {
            const double r = p[0] * (*xs)[i] - (*ys)[i];
            sum += 0.5 * r * r;
        }
        return sum / static_cast<double>(xs->size());
    };
    obj.grad = [xs, ys](std::span<const double> p, std::span<double> g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < xs->size(); ++i) {
            sum += (p[0] * (*xs)[i] - (*ys)[i]) * (*xs)[i];
        }
        g[0] = sum / static_cast<double>(xs->size());
    };
    for (std::size_t i = 0; i < xs->size(); ++i) {
        BatchTerm term;
        term.eval = [xs, ys, i](std::span<const double> p) {
            const double r = p[0] * (*xs)[i] - (*ys)[i];
            return 0.5 * r * r;
        };
        term.grad = [xs, ys, i](std::span<const double> p, std::span<double> g) {
            g[0] = (p[0] * (*xs)[i] - (*ys)[i]) * (*xs)[i];
        };
        obj.batches.push_back(std::move(term));
    }
    obj.stationary_points = {{sxy / sxx}};
    return obj;
}

Objective playground_quadratic() {
    const double c = std::cos(M_PI / 6.0);
    const double s = std::sin(M_PI / 6.0);
    Eigen::Matrix2d q;
    q << c, -s, s, c;
    QuadraticTerm term;
    term.a = q * Eigen::Vector2d(1.0, 10.0).asDiagonal() * q.transpose();
    term.center = Eigen::Vector2d(1.0, -1.0);
    Objective obj = make_quadratic({term}).objective();
    obj.batches.clear();
    return obj;
}

const std::vector<std::string>& analytic_objective_names() {
    static const std::vector<std::string> names{"cubic", "multimodal", "saddle", "quadratic", "mse_line"};
    return names;
}

Objective analytic_objective(std::string_view name) {
    if (name == "cubic") return cubic_1d();
    if (name == "multimodal") return bivariate_multimodal();
    if (name == "saddle") return saddle_2d();
    if (name == "quadratic") return playground_quadratic();
    if (name == "mse_line") return mse_line();
    throw std::invalid_argument("unknown objective '" + std::string(name) +
                                "' (expected cubic, multimodal, saddle, quadratic or mse_line)");
}

} // namespace activelr
