#include "doctest.h"

#include "support/problems.hpp"
#include "tperiodic/averaging.hpp"
#include "tperiodic/error.hpp"
#include "tperiodic/translation.hpp"

#include <cmath>

using namespace tperiodic;
using namespace tperiodic::testing;

namespace {

Vec s(double v) { return Vec::Constant(1, v); }

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

TranslationConfig small_cfg(int m = 16) {
    TranslationConfig cfg;
    cfg.m = m;
    cfg.steps_per_delay = 32;
    return cfg;
}

// k = 0, y' = a (y - y^3) + lambda (cos t + 0.5 y(t - 1)) with a = s (1 + 0.5 sin t).
CoupledProblem forced_cubic(double s_a = -1.0) {
    ProblemFields f;
    f.dim_x = 0;
    f.dim_y = 1;
    f.g = [](VecIn, VecIn y, VecOut out) { out[0] = y[0] - y[0] * y[0] * y[0]; };
    f.h = [](double t, VecIn, VecIn, VecIn, VecIn yd, VecOut out) { out[0] = std::cos(t) + 0.5 * yd[0]; };
    f.a = PeriodicFn1D([s_a](double t) { return s_a * (1.0 - 0.5 * std::sin(t)); }, kTwoPi);
    f.period = kTwoPi;
    f.delay = 1.0;
    return CoupledProblem(std::move(f));
}

}  // namespace

TEST_SUITE("translation") {

TEST_CASE("lambda = 0 with g = 0 holds the terminal value") {
    ProblemFields f;
    f.dim_x = 0;
    f.dim_y = 1;
    f.g = [](VecIn, VecIn, VecOut out) { out[0] = 0.0; };
    f.a = PeriodicFn1D::constant(1.0, 2.0);
    f.period = 2.0;
    f.delay = 0.5;
    const CoupledProblem p(std::move(f));
    const TranslationConfig cfg = small_cfg();
    const History c = History::constant(0.5, cfg.m, s(0.8));
    CHECK(translate(p, 0.0, 1.0, c, cfg).sup_distance(c) == 0.0);
    const History wave = History::from_function(0.5, cfg.m, [](double th) { return s(std::cos(5.0 * th)); });
    const History out = translate(p, 0.0, 1.0, wave, cfg);
    CHECK(out.sup_distance_to_constant(s(1.0)) <= 1e-15);
}

TEST_CASE("equilibria are fixed points at lambda = 0") {
    const CoupledProblem cubic = cubic_index_problem();
    const TranslationConfig cfg = small_cfg();
    for (double eq : {-1.0, 0.0, 1.0}) {
        const History c = History::constant(1.0, cfg.m, s(eq));
        CHECK(translate(cubic, 0.0, 1.0, c, cfg).sup_distance(c) == 0.0);
    }
    std::vector<History> seeds;
    for (double eq : {-1.0, 0.0, 1.0}) seeds.push_back(History::constant(1.0, cfg.m, s(eq)));
    const FixedPointSearch found = find_fixed_points(cubic, 0.0, seeds, cfg);
    REQUIRE(found.records.size() == 3);
    for (const auto& r : found.records) {
        CHECK(r.residual <= 1e-10);
    }
    // sorted lexicographically
    CHECK(found.records[0].history.values()(0, 0) == -1.0);
    CHECK(found.records[2].history.values()(0, 0) == 1.0);
}

TEST_CASE("mu end points coincide for autonomous f and constant a") {
    ProblemFields f;
    f.dim_x = 1;
    f.dim_y = 1;
    f.f = [](double, VecIn x, VecIn y, VecIn, VecIn, VecOut out) { out[0] = std::sin(y[0]) - 0.5 * x[0]; };
    f.g = [](VecIn x, VecIn y, VecOut out) { out[0] = x[0] - y[0]; };
    f.a = PeriodicFn1D::constant(1.5, kTwoPi);
    f.period = kTwoPi;
    f.delay = 1.0;
    const CoupledProblem p(std::move(f));
    const TranslationConfig cfg = small_cfg();
    const History init = History::from_function(1.0, cfg.m, [](double th) { return v2(0.3 + 0.1 * th, std::sin(th)); });
    const History h0 = translate(p, 0.4, 0.0, init, cfg);
    const History h1 = translate(p, 0.4, 1.0, init, cfg);
    CHECK(h0.sup_distance(h1) <= 1e-10);
}

TEST_CASE("empty seeds give no records") {
    const FixedPointSearch found = find_fixed_points(cubic_index_problem(), 0.1, {}, small_cfg());
    CHECK(found.records.empty());
    CHECK(found.failures.empty());
}

TEST_CASE("sunflower fixed point near the origin at small lambda") {
    const SunflowerSetup setup = sunflower_setup();
    const CoupledProblem forced = forced_sunflower(setup.sigma);
    const TranslationConfig cfg = small_cfg();
    const FixedPointSearch found =
        find_fixed_points(setup.problem, 1e-3, {History::constant(1.0, cfg.m, Vec::Zero(2))}, cfg);
    REQUIRE(found.records.size() == 1);
    CHECK(found.records[0].residual <= cfg.newton_tol);
    CHECK(found.records[0].history.sup_norm() <= 1e-2);
    CHECK(found.records[0].index.has_value());

    // forcing moves the zero of nu to q with sin q <1/sigma> = -0.5 <cos t / sigma>
    const FixedPointSearch shifted =
        find_fixed_points(forced, 1e-3, {History::constant(1.0, cfg.m, Vec::Zero(2))}, cfg);
    REQUIRE(shifted.records.size() == 1);
    const PeriodicFn1D cos_over([&](double t) { return std::cos(t) / setup.sigma.sigma(t); }, kTwoPi);
    const double q_star = std::asin(-0.5 * average_scalar(cos_over) / setup.sigma.avg_inv_sigma);
    CHECK(std::abs(q_star) > 0.05);
    CHECK(shifted.records[0].history.sup_distance_to_constant(v2(q_star, q_star)) <= 1e-2);
}

TEST_CASE("cubic index identity") {
    const CoupledProblem cubic = cubic_index_problem();
    const Box box(s(-2.0), s(2.0));
    // deg(-g, (-2, 2)) = (sign(-g(2)) - sign(-g(-2))) / 2 = (1 - (-1)) / 2 = 1, sign(<a>) = -1
    const double g2 = 2.0 - 8.0;
    const double gm2 = -2.0 + 8.0;
    const int hand = ((-g2 > 0 ? 1 : -1) - (-gm2 > 0 ? 1 : -1)) / 2;
    CHECK(hand == 1);
    for (double lambda : {0.0, 1e-3, 0.05}) {
        const IndexReport rep = verify_index_identity(cubic, lambda, box, small_cfg());
        CAPTURE(lambda);
        CHECK(rep.rhs == -hand);
        CHECK(rep.lhs_sum == rep.rhs);
        CHECK(rep.pass);
        CHECK(rep.records.size() == 3);
    }
}

TEST_CASE("index is stable under m doubling") {
    // a > 0: outer equilibria attract
    const CoupledProblem p = forced_cubic(1.0);
    std::vector<int> idx16;
    std::vector<int> idx32;
    for (int m : {16, 32}) {
        TranslationConfig cfg = small_cfg(m);
        std::vector<History> seeds;
        for (double eq : {-1.0, 0.0, 1.0}) seeds.push_back(History::constant(1.0, m, s(eq)));
        const FixedPointSearch found = find_fixed_points(p, 1e-3, seeds, cfg);
        REQUIRE(found.records.size() == 3);
        for (const auto& r : found.records) {
            REQUIRE(r.index.has_value());
            CHECK(r.eigen_margin > kEigenMarginFloor);
            (m == 16 ? idx16 : idx32).push_back(*r.index);
        }
    }
    CHECK(idx16 == idx32);
    // index sign det(I - DQ): attracting orbits give +1, the repelling one -1
    CHECK(idx32 == std::vector<int>{1, -1, 1});
}

TEST_CASE("fixed points approach zeros of nu as lambda shrinks") {
    const CoupledProblem p = forced_cubic();
    const TranslationConfig cfg = small_cfg();
    double previous = 1.0;
    for (double lambda : {1e-2, 1e-3, 1e-4}) {
        const FixedPointSearch found = find_fixed_points(p, lambda, {History::constant(1.0, cfg.m, s(0.0))}, cfg);
        REQUIRE(found.records.size() == 1);
        const History& h = found.records[0].history;
        const double mid = 0.5 * (h.values().maxCoeff() + h.values().minCoeff());
        const double g_res = std::abs(mid - mid * mid * mid);
        CAPTURE(lambda);
        CHECK(g_res < 0.2 * previous);
        previous = g_res;
    }
    CHECK(previous <= 1e-3);
    const FixedPointSearch exact = find_fixed_points(p, 0.0, {History::constant(1.0, cfg.m, s(0.0))}, cfg);
    REQUIRE(exact.records.size() == 1);
    CHECK(exact.records[0].history.sup_norm() <= 1e-8);
}

TEST_CASE("mu homotopy keeps fixed points in the window") {
    const SunflowerSetup setup = sunflower_setup();
    const CoupledProblem forced = forced_sunflower(setup.sigma);
    const TranslationConfig cfg = small_cfg();
    const Box window(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5));
    for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const FixedPointSearch found =
            find_fixed_points(forced, 1e-3, {History::constant(1.0, cfg.m, Vec::Zero(2))}, cfg, mu);
        CAPTURE(mu);
        REQUIRE(found.records.size() == 1);
        const Mat& vals = found.records[0].history.values();
        for (Eigen::Index i = 0; i < vals.rows(); ++i) {
            CHECK(window.contains_strictly(vals.row(i).transpose()));
        }
    }
}

TEST_CASE("sunflower box identity") {
    const SunflowerSetup setup = sunflower_setup();
    const Box box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
    const IndexReport rep = verify_index_identity(setup.problem, 1e-3, box, small_cfg(), 2);
    const int deg_w = degree_1d([](double q) { return std::sin(q); }, -1.0, 1.0).degree;
    const int sign_a = average_scalar(sunflower_coefficient()) > 0.0 ? 1 : -1;
    CHECK(rep.rhs == sign_a * deg_w);
    CHECK(rep.lhs_sum == rep.rhs);
    const nlohmann::json j = rep;
    CHECK(j.at("pass") == true);
    CHECK(j.at("fixed_points").is_array());
}

TEST_CASE("config validation") {
    TranslationConfig cfg;
    cfg.m = 4;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TranslationConfig{};
    cfg.fd_step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = TranslationConfig{};
    cfg.n_quad = 9;
    CHECK_THROWS_AS(cfg.validate(), Error);
    const CoupledProblem cubic = cubic_index_problem();
    CHECK_THROWS_AS((void)find_fixed_points(cubic, 0.1, {History::constant(1.0, 8, s(0.0))}, small_cfg()), Error);
}

}
