#include "activelr/dataset.hpp"
#include "activelr/objectives.hpp"
#include "activelr/verification.hpp"

#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

using namespace activelr;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

void check_fd(const Objective& obj, std::uint64_t seed, double spread) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 20; ++k) {
        Vec theta(obj.dim);
        for (auto& x : theta) x = spread * n01(rng);
        const Vec analytic = obj.gradient(theta);
        const Vec numeric = finite_diff_grad(obj, theta, 1e-6);
        for (std::size_t i = 0; i < obj.dim; ++i) {
            CAPTURE(obj.name);
            CAPTURE(i);
            CHECK(rel_err(analytic[i], numeric[i]) <= 1e-5);
        }
    }
}

double batch_mean(const Objective& obj, const Vec& theta) {
    double s = 0.0;
    for (const auto& b : obj.batches) s += b.eval(theta);
    return s / static_cast<double>(obj.batches.size());
}

} // namespace

TEST_CASE("cubic values") {
    const Objective f = cubic_1d();
    CHECK(f.dim == 1);
    CHECK(f.eval(Vec{3.0}) == 0.0);
    CHECK(f.gradient(Vec{1.0})[0] == 0.0);
    CHECK(f.gradient(Vec{5.0})[0] == 24.0);
    CHECK_FALSE(f.convex);
    REQUIRE(f.has_escape_predicate());
    CHECK(f.escaped(Vec{0.4}));
    CHECK_FALSE(f.escaped(Vec{0.6}));
}

TEST_CASE("multimodal values") {
    const Objective f = bivariate_multimodal();
    CHECK(f.eval(Vec{0.0, 0.0}) == 1680.0);
    CHECK(f.eval(Vec{0.0, -2.0}) == kMultimodalEscapeLevel);
    for (const Vec& p : {Vec{-4.0, 6.0}, Vec{0.0, -2.0}, Vec{1.0, -1.5}}) {
        const Vec g = f.gradient(p);
        CHECK(std::hypot(g[0], g[1]) <= 1e-12);
    }
    REQUIRE(f.has_escape_predicate());
    CHECK(f.escaped(Vec{3.0, 0.0}));
    CHECK_FALSE(f.escaped(Vec{-4.0, 6.0}));
}

TEST_CASE("saddle values") {
    const Objective f = saddle_2d();
    CHECK(f.eval(Vec{0.0, 1.0}) == -1.0);
    CHECK(f.eval(Vec{0.0, -1.0}) == -1.0);
    const Vec g = f.gradient(Vec{0.0, 0.0});
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("listed stationary points have vanishing gradients") {
    for (const auto& name : analytic_objective_names()) {
        const Objective f = analytic_objective(name);
        CAPTURE(name);
        for (const Vec& p : f.stationary_points) {
            const Vec g = f.gradient(p);
            double norm = 0.0;
            for (double x : g) norm += x * x;
            CHECK(std::sqrt(norm) <= 1e-12);
        }
    }
    CHECK(cubic_1d().stationary_points.size() == 2);
    CHECK(bivariate_multimodal().stationary_points.size() == 3);
    CHECK(saddle_2d().stationary_points.size() == 3);
}

TEST_CASE("analytic gradients agree with finite differences") {
    check_fd(cubic_1d(), 1, 3.0);
    check_fd(bivariate_multimodal(), 2, 3.0);
    check_fd(saddle_2d(), 3, 1.5);
    check_fd(playground_quadratic(), 4, 2.0);
    check_fd(mse_line(), 5, 2.0);
    check_fd(random_convex_quadratic(6, 5, 50.0, 4).objective(), 6, 2.0);
}

TEST_CASE("explicit one-dimensional quadratic") {
    QuadraticTerm t;
    t.a = Eigen::MatrixXd::Constant(1, 1, 2.0);
    t.center = Eigen::VectorXd::Zero(1);
    const QuadraticProblem p = make_quadratic({t});
    const Objective f = p.objective();
    CHECK(f.eval(Vec{3.0}) == 9.0);
    CHECK(f.gradient(Vec{3.0})[0] == 6.0);
    CHECK(p.lipschitz == doctest::Approx(2.0));
    CHECK(f.convex);
}

TEST_CASE("random quadratic: minimizer, spectrum and batch recomposition") {
    for (std::size_t batches : {1u, 2u, 7u}) {
        const QuadraticProblem p = random_convex_quadratic(42 + batches, 4, 100.0, batches);
        CHECK(p.terms.size() == batches);
        const Objective f = p.objective();
        const Vec star(p.minimizer.data(), p.minimizer.data() + p.minimizer.size());
        for (double g : f.gradient(star)) CHECK(std::abs(g) <= 1e-10);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.terms[0].a);
        CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(100.0).epsilon(1e-9));

        if (batches > 1) {
            REQUIRE(f.batches.size() == batches);
            std::mt19937_64 rng(batches);
            std::normal_distribution<double> n01;
            for (int k = 0; k < 10; ++k) {
                Vec theta(4);
                for (auto& x : theta) x = 3.0 * n01(rng);
                CHECK(rel_err(batch_mean(f, theta), f.eval(theta)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("random quadratic is deterministic in the seed") {
    const auto a = random_convex_quadratic(3, 3, 10.0, 3);
    const auto b = random_convex_quadratic(3, 3, 10.0, 3);
    CHECK(a.minimizer == b.minimizer);
    CHECK(a.hessian == b.hessian);
}

TEST_CASE("mse_line recomposes from per-sample terms and is convex") {
    const Objective f = mse_line();
    CHECK(f.convex);
    CHECK(f.batches.size() == 16);
    for (double w : {-1.0, 0.3, 2.0, 5.0}) CHECK(rel_err(batch_mean(f, Vec{w}), f.eval(Vec{w})) <= 1e-10);
    REQUIRE(f.stationary_points.size() == 1);
    CHECK(std::abs(f.gradient(f.stationary_points[0])[0]) <= 1e-12);
}

TEST_CASE("analytic_objective lookup") {
    CHECK(analytic_objective_names().size() == 5);
    for (const auto& n : analytic_objective_names()) CHECK(analytic_objective(n).name == n);
    CHECK_THROWS_AS(analytic_objective("rosenbrock"), std::invalid_argument);
}

TEST_CASE("minibatch_split") {
    auto sizes = [](const std::vector<std::vector<std::size_t>>& b) {
        std::vector<std::size_t> s;
        for (const auto& x : b) s.push_back(x.size());
        return s;
    };
    CHECK(sizes(minibatch_split(10, 4, 0, false)) == std::vector<std::size_t>{4, 4, 2});
    CHECK(minibatch_split(10, 10, 0, true).size() == 1);
    const auto ordered = minibatch_split(6, 4, 0, false);
    CHECK(ordered[0] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(ordered[1] == std::vector<std::size_t>{4, 5});

    const auto a = minibatch_split(50, 7, 9, true);
    const auto b = minibatch_split(50, 7, 9, true);
    CHECK(a == b);
    std::multiset<std::size_t> seen;
    for (const auto& batch : a) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(seen.count(i) == 1);
    CHECK(a != minibatch_split(50, 7, 10, true));

    CHECK_THROWS_AS(minibatch_split(10, 0, 0, false), std::invalid_argument);
    CHECK_THROWS_AS(minibatch_split(10, 11, 0, false), std::invalid_argument);
}

TEST_CASE("synthetic datasets are standardized and deterministic") {
    for (DatasetKind kind : {DatasetKind::LinearRegression, DatasetKind::TwoClusters, DatasetKind::TwoSpirals}) {
        CAPTURE(to_string(kind));
        const Dataset d = make_synthetic_dataset(kind, 200, 0.5, 3);
        CHECK(d.size() == 200);
        for (std::size_t j = 0; j < d.n_features; ++j) {
            double mean = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) mean += d.row(i)[j];
            mean /= 200.0;
            for (std::size_t i = 0; i < d.size(); ++i) sq += (d.row(i)[j] - mean) * (d.row(i)[j] - mean);
            CHECK(std::abs(mean) <= 1e-12);
            CHECK(sq / 200.0 == doctest::Approx(1.0).epsilon(1e-9));
        }
        const Dataset again = make_synthetic_dataset(kind, 200, 0.5, 3);
        CHECK(again.features == d.features);
        CHECK(again.targets == d.targets);
        CHECK(again.labels == d.labels);
    }
    CHECK_THROWS_AS(make_synthetic_dataset(DatasetKind::TwoClusters, 7, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic_dataset(DatasetKind::TwoClusters, 64, -1.0, 0), std::invalid_argument);
}

TEST_CASE("noise-free regression data is fit exactly by the generating weights") {
    const Dataset d = make_synthetic_dataset(DatasetKind::LinearRegression, 100, 0.0, 5);
    REQUIRE(d.generating_weights.size() == d.n_features + 1);
    double loss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double y = d.generating_weights.back();
        for (std::size_t j = 0; j < d.n_features; ++j) y += d.generating_weights[j] * d.row(i)[j];
        loss += 0.5 * (y - d.targets[i]) * (y - d.targets[i]);
    }
    CHECK(loss / 100.0 <= 1e-20);
}

TEST_CASE("two clusters at unit noise are linearly separable (LDA)") {
    for (std::uint64_t seed : {1u, 7u, 99u}) {
        const Dataset d = make_synthetic_dataset(DatasetKind::TwoClusters, 512, 1.0, seed);
        REQUIRE(d.n_classes == 2);
        Eigen::Vector2d mu[2] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
        int count[2] = {0, 0};
        for (std::size_t i = 0; i < d.size(); ++i) {
            mu[d.labels[i]] += Eigen::Vector2d(d.row(i)[0], d.row(i)[1]);
            ++count[d.labels[i]];
        }
        REQUIRE(count[0] > 0);
        REQUIRE(count[1] > 0);
        mu[0] /= count[0];
        mu[1] /= count[1];
        Eigen::Matrix2d sw = Eigen::Matrix2d::Zero();
        for (std::size_t i = 0; i < d.size(); ++i) {
            const Eigen::Vector2d x(d.row(i)[0], d.row(i)[1]);
            const Eigen::Vector2d c = x - mu[d.labels[i]];
            sw += c * c.transpose();
        }
        const Eigen::Vector2d w = sw.ldlt().solve(mu[1] - mu[0]);
        const double threshold = 0.5 * w.dot(mu[0] + mu[1]);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double s = w.dot(Eigen::Vector2d(d.row(i)[0], d.row(i)[1]));
            correct += (s > threshold) == (d.labels[i] == 1);
        }
        CHECK(correct == d.size());
    }
}

TEST_CASE("dataset CSV round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "activelr_dataset_test";
    std::filesystem::create_directories(dir);
    for (DatasetKind kind : {DatasetKind::LinearRegression, DatasetKind::TwoSpirals}) {
        const Dataset d = make_synthetic_dataset(kind, 40, 0.3, 11);
        const auto path = dir / (std::string(to_string(kind)) + ".csv");
        write_dataset_csv(d, path);
        const Dataset back = read_dataset_csv(path);
        CHECK(back.n_features == d.n_features);
        CHECK(back.features == d.features);
        CHECK(back.targets == d.targets);
        CHECK(back.labels == d.labels);
        CHECK(back.n_classes == d.n_classes);
    }
    CHECK_THROWS(read_dataset_csv(dir / "missing.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset kind names round trip") {
    for (DatasetKind k : {DatasetKind::LinearRegression, DatasetKind::TwoClusters, DatasetKind::TwoSpirals})
        CHECK(parse_dataset_kind(to_string(k)) == k);
    CHECK_FALSE(parse_dataset_kind("mnist").has_value());
}
