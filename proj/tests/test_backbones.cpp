#include "activelr/backbones.hpp"
#include "activelr/errors.hpp"

#include "support/reference_backbones.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

using namespace activelr;
using activelr::testing::RefScalar;

namespace {

const BackboneKind kAll[] = {BackboneKind::SgdMomentum, BackboneKind::AdamW, BackboneKind::RAdam,
                             BackboneKind::AdaBelief};

bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace

TEST_CASE("sgd step with zero momentum") {
    BackboneConfig c;
    c.kind = BackboneKind::SgdMomentum;
    c.momentum = 0.0;
    std::vector<double> theta = {2.0};
    BackboneState st(1);
    step(c, theta, std::vector<double>{4.0}, std::vector<double>{0.1}, st);
    CHECK(theta[0] == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(st.t == 1);
}

TEST_CASE("first adamw step is about alpha times the gradient sign") {
    BackboneConfig c;
    c.kind = BackboneKind::AdamW;
    std::vector<double> theta = {0.0};
    BackboneState st(1);
    step(c, theta, std::vector<double>{3.0}, std::vector<double>{0.1}, st);
    CHECK(theta[0] == doctest::Approx(-0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("first adabelief step matches the hand-computed value") {
    BackboneConfig c;
    c.kind = BackboneKind::AdaBelief;
    std::vector<double> theta = {0.0};
    BackboneState st(1);
    step(c, theta, std::vector<double>{1.0}, std::vector<double>{0.1}, st);
    const double expected = -0.11111042401185281615;
    CHECK(std::abs(theta[0] - expected) <= 1e-12 * std::abs(expected));
}

TEST_CASE("every backbone matches its reference on random scalar streams") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (BackboneKind kind : kAll) {
        CAPTURE(to_string(kind));
        double worst = 0.0;
        for (int seq = 0; seq < 100; ++seq) {
            BackboneConfig c;
            c.kind = kind;
            c.weight_decay = seq % 3 == 0 ? 0.0 : 0.01 * u01(rng);
            c.momentum = 0.5 + 0.45 * u01(rng);
            RefScalar ref{kind};
            ref.wd = c.weight_decay;
            ref.mu = c.momentum;
            BackboneState st(1);
            std::vector<double> theta = {n01(rng)};
            double ref_theta = theta[0];
            const double alpha = std::pow(10.0, -4.0 + 3.0 * u01(rng));
            const double scale = std::pow(10.0, -2.0 + 4.0 * u01(rng));
            const int len = 20 + static_cast<int>(u01(rng) * 80);
            for (int k = 0; k < len; ++k) {
                const double g = scale * n01(rng);
                step(c, theta, std::vector<double>{g}, std::vector<double>{alpha}, st);
                ref_theta = ref.update(ref_theta, g, alpha);
                const double err = std::abs(theta[0] - ref_theta) / std::max(std::abs(ref_theta), 1e-300);
                worst = std::max(worst, err);
            }
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("doubling the rates doubles the displacement") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    for (BackboneKind kind : kAll) {
        BackboneConfig c;
        c.kind = kind;
        c.weight_decay = 0.05;
        BackboneState base(3);
        std::vector<double> theta = {n01(rng), n01(rng), n01(rng)};
        for (int k = 0; k < 7; ++k) {
            std::vector<double> g = {n01(rng), n01(rng), n01(rng)};
            step(c, theta, g, vanilla_alphas(1e-2, 3), base);
        }
        const std::vector<double> g = {n01(rng), n01(rng), n01(rng)};
        const std::vector<double> alphas = {0.01, 0.02, 0.005};
        const std::vector<double> doubled = {0.02, 0.04, 0.01};
        BackboneState s1 = base, s2 = base;
        std::vector<double> t1 = theta, t2 = theta;
        step(c, t1, g, alphas, s1);
        step(c, t2, g, doubled, s2);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rel_close(t2[i] - theta[i], 2.0 * (t1[i] - theta[i]), 1e-12));
        }
    }
}

TEST_CASE("second moment stays non-negative") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (BackboneKind kind : {BackboneKind::AdamW, BackboneKind::RAdam, BackboneKind::AdaBelief}) {
        BackboneConfig c;
        c.kind = kind;
        BackboneState st(4);
        std::vector<double> theta(4, 0.0);
        for (int k = 0; k < 500; ++k) {
            std::vector<double> g(4);
            for (auto& x : g) x = 10.0 * n01(rng);
            step(c, theta, g, vanilla_alphas(1e-3, 4), st);
            for (double v : st.v) REQUIRE(v >= 0.0);
        }
    }
}

TEST_CASE("rectified steps approach adam after many iterations") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    BackboneConfig adam;
    adam.kind = BackboneKind::AdamW;
    BackboneConfig radam;
    radam.kind = BackboneKind::RAdam;
    BackboneState sa(1), sr(1);
    std::vector<double> ta = {0.0}, tr = {0.0};
    double last_a = 0.0, last_r = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double g = 1.0 + 0.3 * n01(rng);
        const double pa = ta[0], pr = tr[0];
        step(adam, ta, std::vector<double>{g}, std::vector<double>{1e-4}, sa);
        step(radam, tr, std::vector<double>{g}, std::vector<double>{1e-4}, sr);
        last_a = ta[0] - pa;
        last_r = tr[0] - pr;
    }
    CHECK((last_a < 0) == (last_r < 0));
    const double ratio = last_r / last_a;
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
}

TEST_CASE("radam uses plain momentum while the variance is untrusted") {
    BackboneConfig c;
    c.kind = BackboneKind::RAdam;
    BackboneState st(1);
    std::vector<double> theta = {1.0};
    step(c, theta, std::vector<double>{2.0}, std::vector<double>{0.1}, st);
    // rho_1 = 1 <= 4, so F = m_hat = g.
    CHECK(theta[0] == doctest::Approx(1.0 - 0.1 * 2.0).epsilon(1e-14));
}

TEST_CASE("step rejects bad input") {
    BackboneConfig c;
    BackboneState st(2);
    std::vector<double> theta = {0.0, 0.0};
    CHECK_THROWS_AS(step(c, theta, std::vector<double>{1.0}, vanilla_alphas(0.1, 2), st),
                    std::invalid_argument);
    CHECK_THROWS_AS(step(c, theta, std::vector<double>{1.0, 1.0}, std::vector<double>{0.1, 0.0}, st),
                    std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(step(c, theta, std::vector<double>{1.0, inf}, vanilla_alphas(0.1, 2), st), DivergenceError);

    BackboneConfig sgd;
    sgd.kind = BackboneKind::SgdMomentum;
    BackboneState s2(1);
    std::vector<double> big = {1e308};
    CHECK_THROWS_AS(step(sgd, big, std::vector<double>{1e308}, std::vector<double>{10.0}, s2), DivergenceError);
}

TEST_CASE("vanilla_alphas") {
    CHECK(vanilla_alphas(0.01, 2) == std::vector<double>{0.01, 0.01});
    CHECK(vanilla_alphas(1e-5, 1) == std::vector<double>{1e-5});
    CHECK_THROWS_AS(vanilla_alphas(0.0, 1), std::invalid_argument);
}

TEST_CASE("config validation and names") {
    BackboneConfig c;
    CHECK_NOTHROW(c.validate());
    c.beta1 = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = BackboneConfig{};
    c.weight_decay = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    for (BackboneKind k : kAll) CHECK(parse_backbone(to_string(k)) == k);
    CHECK_FALSE(parse_backbone("lamb").has_value());
}
