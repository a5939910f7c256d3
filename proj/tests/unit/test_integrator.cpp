#include "doctest.h"

#include "support/problems.hpp"
#include "tperiodic/error.hpp"
#include "tperiodic/integrator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace tperiodic;
using tperiodic::testing::kTwoPi;

namespace {

CoupledProblem growth_problem() {
    ProblemFields f;
    f.dim_x = 0;
    f.dim_y = 1;
    f.g = [](VecIn, VecIn y, VecOut out) { out[0] = y[0]; };
    f.a = PeriodicFn1D::constant(1.0, 2.0);
    f.period = 2.0;
    f.delay = 1.0;
    return CoupledProblem(std::move(f));
}

// y' = -y(t - 1) written as a = 1, g = 0, h = -yd.
CoupledProblem pure_delay_problem() {
    ProblemFields f;
    f.dim_x = 0;
    f.dim_y = 1;
    f.g = [](VecIn, VecIn, VecOut out) { out[0] = 0.0; };
    f.h = [](double, VecIn, VecIn, VecIn, VecIn yd, VecOut out) { out[0] = -yd[0]; };
    f.a = PeriodicFn1D::constant(1.0, 2.0);
    f.period = 2.0;
    f.delay = 1.0;
    return CoupledProblem(std::move(f));
}

CoupledProblem scalar_flow_problem(PeriodicFn1D a, std::function<double(double)> g) {
    ProblemFields f;
    f.dim_x = 0;
    f.dim_y = 1;
    f.g = [g = std::move(g)](VecIn, VecIn y, VecOut out) { out[0] = g(y[0]); };
    f.period = a.period();
    f.a = std::move(a);
    f.delay = 1.0;
    return CoupledProblem(std::move(f));
}

Vec scalar(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("linear ODE reaches e") {
    const CoupledProblem p = growth_problem();
    const Trajectory traj = integrate(p, 0.0, 1.0, History::constant(1.0, 16, scalar(1.0)), 1.0, 64);
    CHECK(std::abs(traj.eval(1.0)[0] - std::exp(1.0)) <= 1e-8);
    CHECK(traj.t_end() == 1.0);
}

TEST_CASE("x stays constant when f and h vanish") {
    ProblemFields f;
    f.dim_x = 1;
    f.dim_y = 1;
    f.g = [](VecIn x, VecIn y, VecOut out) { out[0] = x[0] - y[0]; };
    f.a = PeriodicFn1D([](double t) { return -1.0 + 0.5 * std::sin(t); }, kTwoPi);
    f.period = kTwoPi;
    f.delay = 1.0;
    const CoupledProblem p(std::move(f));
    const History init = History::from_function(1.0, 16, [](double th) {
        Vec v(2);
        v << 0.3, std::cos(th);
        return v;
    });
    const Trajectory traj = integrate(p, 0.7, 1.0, init, 5.0);
    for (std::size_t i = 0; i < traj.node_count(); ++i) {
        CHECK(traj.node_state(i)[0] == 0.3);
    }
}

TEST_CASE("method of steps on y' = -y(t - 1)") {
    const CoupledProblem p = pure_delay_problem();
    const Trajectory traj = integrate(p, 1.0, 1.0, History::constant(1.0, 16, scalar(1.0)), 2.0);
    CHECK(std::abs(traj.eval(1.0)[0]) <= 1e-10);
    // second step: y = 1 - t + (t - 1)^2 / 2 on [1, 2]
    CHECK(std::abs(traj.eval(2.0)[0] - (-0.5)) <= 1e-10);
    CHECK(std::abs(traj.eval(1.5)[0] - (1.0 - 1.5 + 0.125)) <= 1e-10);
}

TEST_CASE("linear delay equation against the closed form") {
    const CoupledProblem p = tperiodic::testing::linear_delay_problem();
    for (double lambda : {0.0, 0.4, 1.3}) {
        const Trajectory traj = integrate(p, lambda, 1.0, History::constant(1.0, 16, scalar(1.0)), 2.0, 128);
        for (double t : {0.25, 0.9, 1.0, 1.4, 2.0}) {
            CHECK(std::abs(traj.eval(t)[0] - tperiodic::testing::linear_delay_exact(lambda, t)) <= 1e-9);
        }
    }
}

TEST_CASE("fourth-order convergence") {
    const CoupledProblem p = growth_problem();
    const History init = History::constant(1.0, 16, scalar(1.0));
    const double e1 = std::abs(integrate(p, 0.0, 1.0, init, 2.0, 8).eval(2.0)[0] - std::exp(2.0));
    const double e2 = std::abs(integrate(p, 0.0, 1.0, init, 2.0, 16).eval(2.0)[0] - std::exp(2.0));
    const double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("dense output reproduces nodes exactly") {
    const CoupledProblem p = tperiodic::testing::forced_linear_problem(1.0);
    const Trajectory traj = integrate(p, 0.8, 1.0, History::constant(1.0, 16, scalar(0.2)), 3.3);
    for (std::size_t i = 0; i < traj.node_count(); ++i) {
        CHECK(traj.eval(traj.node_time(i))[0] == traj.node_state(i)[0]);
    }
    // partial last step ends exactly at t_end
    CHECK(traj.node_time(traj.node_count() - 1) == 3.3);
    CHECK(traj.node_time(0) == 0.0);
}

TEST_CASE("delay beyond the period") {
    const CoupledProblem p = tperiodic::testing::linear_delay_problem();
    IntegratorOptions opts;
    opts.steps_per_delay = 256;
    const double lambda = 0.6;
    const Trajectory traj =
        integrate_with_delay(p, 7.5, lambda, 1.0, History::constant(7.5, 16, scalar(1.0)), 7.5, opts);
    for (double t : {1.0, 4.0, 7.5}) {
        CHECK(std::abs(traj.eval(t)[0] - (lambda + (1.0 - lambda) * std::exp(-t))) <= 1e-9);
    }
    CHECK_THROWS_AS((void)integrate_with_delay(p, 7.5, lambda, 1.0, History::constant(1.0, 16, scalar(1.0)), 1.0, opts),
                    Error);
}

TEST_CASE("blowup is reported") {
    const CoupledProblem p = scalar_flow_problem(PeriodicFn1D::constant(1.0, 1.0), [](double y) { return y * y; });
    try {
        (void)integrate(p, 0.0, 1.0, History::constant(1.0, 16, scalar(1.0)), 5.0);
        FAIL("no blowup");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Blowup);
    }
}

TEST_CASE("csv layout") {
    ProblemFields f;
    f.dim_x = 1;
    f.dim_y = 1;
    f.g = [](VecIn x, VecIn y, VecOut out) { out[0] = x[0] - y[0]; };
    f.a = PeriodicFn1D::constant(-1.0, 1.0);
    f.period = 1.0;
    f.delay = 0.5;
    const CoupledProblem p(std::move(f));
    const Trajectory traj = integrate(p, 0.0, 1.0, History::constant(0.5, 16, Vec::Zero(2)), 1.0);
    std::ostringstream out;
    traj.write_csv(out, 1, 4, true);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x1,y1");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("flows") {
    const CoupledProblem zero_g = scalar_flow_problem(PeriodicFn1D::constant(2.0, kTwoPi), [](double) { return 0.0; });
    CHECK(flow_unperturbed(zero_g, scalar(0.7), kTwoPi)[0] == 0.7);
    CHECK(flow_averaged(zero_g, scalar(0.7), kTwoPi)[0] == 0.7);

    const PeriodicFn1D a([](double t) { return std::sin(t) + 2.0; }, kTwoPi);
    const CoupledProblem unit_g = scalar_flow_problem(a, [](double) { return 1.0; });
    CHECK(std::abs(flow_unperturbed(unit_g, scalar(0.0), kTwoPi)[0] - 4.0 * std::numbers::pi) <= 1e-8);
    CHECK(std::abs(flow_averaged(unit_g, scalar(0.0), kTwoPi)[0] - 4.0 * std::numbers::pi) <= 1e-8);

    const CoupledProblem cubic = tperiodic::testing::cubic_index_problem();
    for (double eq : {-1.0, 0.0, 1.0}) {
        CHECK(flow_unperturbed(cubic, scalar(eq), 2.0)[0] == eq);
    }
    for (double p0 : {-0.8, 0.3, 0.9}) {
        const double u = flow_unperturbed(cubic, scalar(p0), kTwoPi)[0];
        const double v = flow_averaged(cubic, scalar(p0), kTwoPi)[0];
        CHECK(std::abs(u - v) <= 1e-6);
    }
}

}
