#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace activelr {

using Vec = std::vector<double>;
using EvalFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

/// One mini-batch term f_t of a decomposed objective.
struct BatchTerm {
    EvalFn eval;
    GradFn grad;
};

/// Evaluatable function bundle. When `batches` is non-empty the full
/// objective equals the mean of the batch terms.
struct Objective {
    std::string name;
    std::size_t dim = 0;
    EvalFn eval;
    GradFn grad;
    std::vector<BatchTerm> batches;
    std::vector<Vec> stationary_points;
    bool convex = false;
    /// Region predicate for unbounded-below functions ("left the trap").
    std::function<bool(std::span<const double>)> escaped;

    Vec gradient(std::span<const double> theta) const;
    bool has_escape_predicate() const { return static_cast<bool>(escaped); }
};

/// f(x) = x^3 - 6x^2 + 9x. Local minimum at 3, local maximum at 1,
/// unbounded below as x -> -inf. Escape region: x < 0.5.
Objective cubic_1d();

/// f(x, y) = -x^3 - x^2 y + y^2 + 4y + 1680. Stationary at (-4,6), (0,-2),
/// (1,-1.5). Escape region: f below f(0,-2) = 1676.
Objective bivariate_multimodal();
inline constexpr double kMultimodalEscapeLevel = 1676.0;

/// f(x, y) = y^4 - 2y^2 + x^2. Saddle at (0,0), minima at (0,+-1).
Objective saddle_2d();

/// 1/2 (theta - c)^T A (theta - c).
struct QuadraticTerm {
    Eigen::MatrixXd a;
    Eigen::VectorXd center;
};

/// Convex quadratic given as the mean of K terms (K = 1: no decomposition).
struct QuadraticProblem {
    std::vector<QuadraticTerm> terms;
    Eigen::MatrixXd hessian;     // mean of the term matrices
    Eigen::VectorXd minimizer;
    double lipschitz = 0.0;      // max over terms of the largest eigenvalue

    std::size_t dim() const { return static_cast<std::size_t>(minimizer.size()); }
    Objective objective() const;
};

/// Builds a problem from explicit terms; computes the minimizer of their mean.
QuadraticProblem make_quadratic(std::vector<QuadraticTerm> terms);

/// Random SPD quadratic with term eigenvalues log-spread over [1, cond_number]
/// (the extremes are always present) and random orthogonal eigenbases.
/// With batches > 1 every term has its own basis and a center scattered
/// around a common point.
QuadraticProblem random_convex_quadratic(std::uint64_t seed, std::size_t dim, double cond_number,
                                         std::size_t batches = 1);

/// Partition of row indices [0, n) into consecutive chunks of batch_size;
/// the last chunk may be smaller. Shuffled with a seeded generator when asked.
std::vector<std::vector<std::size_t>> minibatch_split(std::size_t n, std::size_t batch_size,
                                                      std::uint64_t seed, bool shuffle);

/// Fixed-data 1-D least squares, f(w) = mean 1/2 (w x_i - y_i)^2, one batch
/// term per sample.
Objective mse_line();

/// Fixed 2-D ill-conditioned quadratic used by the playground.
Objective playground_quadratic();

/// Lookup for the analytic objectives by name: cubic, multimodal, saddle,
/// quadratic, mse_line. Throws std::invalid_argument for unknown names.
Objective analytic_objective(std::string_view name);
const std::vector<std::string>& analytic_objective_names();

} // namespace activelr
