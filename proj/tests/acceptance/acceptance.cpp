// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "tperiodic/averaging.hpp"
#include "tperiodic/continuation.hpp"
#include "tperiodic/degree.hpp"
#include "tperiodic/error.hpp"
#include "tperiodic/integrator.hpp"
#include "tperiodic/problem.hpp"
#include "tperiodic/sigma_lienard.hpp"
#include "tperiodic/translation.hpp"

#include "../support/problems.hpp"
#include "../support/suite_fields.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace tperiodic;
using namespace tperiodic::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome quadrature_fidelity() {
    const PeriodicFn1D fn([](double t) { return 1.0 / (2.0 + std::sin(t)); }, kTwoPi);
    const double avg = average_scalar(fn);
    const double err = std::abs(avg - 0.5773502691896258);
    return {err <= 1e-10, "error " + fmt("%.3e", err)};
}

Outcome sigma_transformation() {
    std::ostringstream msg;
    bool ok = true;
    {
        const auto res = sigma_transform(PeriodicFn1D::constant(-2.0, kTwoPi));
        double err = 0.0;
        for (int i = 0; i <= 1000; ++i) err = std::max(err, std::abs(res.sigma(kTwoPi * i / 1000.0) - 2.0));
        ok = ok && err <= 1e-9;
        msg << "(a) " << fmt("%.2e", err);
    }
    {
        const auto res = sigma_transform(sine_shift_coefficient());
        double err = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double t = kTwoPi * i / 1000.0;
            err = std::max(err, std::abs(res.sigma(t) - (std::sin(t) + 2.0)));
        }
        ok = ok && err <= 1e-6;
        msg << " (b) " << fmt("%.2e", err);
    }
    {
        const PeriodicFn1D a = sunflower_coefficient();
        const auto res = sigma_transform(a);
        bool positive = true;
        for (int i = 0; i <= 4096; ++i) positive = positive && res.sigma(kTwoPi * i / 4096.0) > 0.0;
        const double avg_err = std::abs(res.avg_sigma + average_scalar(a));
        ok = ok && res.periodicity_gap <= 1e-8 && positive && avg_err <= 1e-8;
        msg << " (c) gap " << fmt("%.2e", res.periodicity_gap) << " avg " << fmt("%.2e", avg_err)
            << (positive ? " positive" : " sign change");
    }
    return {ok, msg.str()};
}

Outcome degree_suite() {
    std::ostringstream msg;
    bool ok = true;
    const auto d1 = degree_1d([](double p) { return std::sin(p); }, -1.0, 1.0);
    ok = ok && d1.degree == 1;
    for (int n = 1; n <= 3; ++n) {
        const Box box(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0));
        const FieldHandle id{n, [](const Vec& z) { return z; }};
        const int d = degree_auto(id, box).degree;
        ok = ok && d == 1;
        msg << "id" << n << "=" << d << " ";
    }
    const Box square(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
    const auto sunflower = sunflower_setup();
    const auto suite = planar_suite(sunflower.sigma.avg_inv_sigma);
    int agree = 0;
    for (const auto& s : suite) {
        const int w = degree_2d_winding(s.field, square).degree;
        const int j = degree_nd_jacobian(s.field, square).degree;
        if (w == j) ++agree;
        if (s.name == "linear_nu") {
            ok = ok && w == -1 && j == -1;
            msg << "linear_nu=" << w << "/" << j << " ";
        }
    }
    ok = ok && agree == static_cast<int>(suite.size());
    msg << "agree " << agree << "/" << suite.size();

    // Scaling law on the reduced form of the first Lienard example.
    ScalarDelayProblem sdp;
    sdp.f = [](double, double y, double) { return y; };
    sdp.G = [](double y) { return y; };
    sdp.g = [](double) { return 1.0; };
    sdp.period = kTwoPi;
    sdp.delay = 1.0;
    const CoupledProblem inv_shift =
        lienard_reduce(sdp, PeriodicFn1D([](double t) { return std::sin(t) + 2.0; }, kTwoPi));
    const int base = degree_2d_winding(negate(v_lambda_field(inv_shift, 1.0)), square).degree;
    bool scaling = true;
    for (double lambda : {0.1, 1.0, 10.0}) {
        scaling = scaling && degree_2d_winding(negate(v_lambda_field(inv_shift, lambda)), square).degree == base;
    }
    ok = ok && scaling;
    msg << (scaling ? " scaling ok" : " scaling broken");
    return {ok, msg.str()};
}

CoupledProblem flow_problem(int k, int s, CouplingField g, PeriodicFn1D a) {
    ProblemFields f;
    f.dim_x = k;
    f.dim_y = s;
    f.g = std::move(g);
    f.a = std::move(a);
    f.period = kTwoPi;
    f.delay = 1.0;
    return CoupledProblem(std::move(f));
}

Outcome flow_coincidence() {
    std::vector<CoupledProblem> problems;
    problems.push_back(flow_problem(0, 1, [](VecIn, VecIn y, VecOut o) { o[0] = -y[0]; },
                                    PeriodicFn1D([](double t) { return 1.0 + 0.5 * std::sin(t); }, kTwoPi)));
    problems.push_back(flow_problem(0, 1, [](VecIn, VecIn y, VecOut o) { o[0] = y[0] - y[0] * y[0] * y[0]; },
                                    PeriodicFn1D([](double t) { return 0.5 + std::cos(t); }, kTwoPi)));
    problems.push_back(flow_problem(0, 2,
                                    [](VecIn, VecIn y, VecOut o) {
                                        o[0] = -y[1];
                                        o[1] = y[0];
                                    },
                                    PeriodicFn1D([](double t) { return -1.0 + std::cos(t); }, kTwoPi)));
    problems.push_back(flow_problem(0, 2,
                                    [](VecIn, VecIn y, VecOut o) {
                                        const double r2 = y.squaredNorm();
                                        o[0] = y[0] * (1.0 - r2) - y[1];
                                        o[1] = y[1] * (1.0 - r2) + y[0];
                                    },
                                    PeriodicFn1D([](double t) { return 1.0 + 0.9 * std::cos(2.0 * t); }, kTwoPi)));
    problems.push_back(flow_problem(1, 1, [](VecIn x, VecIn y, VecOut o) { o[0] = x[0] - y[0]; },
                                    PeriodicFn1D([](double t) { return 0.3 + std::sin(t); }, kTwoPi)));
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst = 0.0;
    for (const auto& p : problems) {
        for (int i = 0; i < 10; ++i) {
            Vec z(p.dim());
            for (int c = 0; c < p.dim(); ++c) z[c] = uni(rng);
            const Vec a = flow_unperturbed(p, z, p.period());
            const Vec b = flow_averaged(p, z, p.period());
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= 1e-6, "max difference " + fmt("%.3e", worst)};
}

Outcome index_identity() {
    const CoupledProblem problem = cubic_index_problem();
    const Box box(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0));
    TranslationConfig cfg;
    std::ostringstream msg;
    bool ok = true;
    int previous = 0;
    for (int m : {16, 32}) {
        cfg.m = m;
        const IndexReport rep = verify_index_identity(problem, 1e-3, box, cfg);
        ok = ok && rep.pass;
        if (m == 32) ok = ok && rep.lhs_sum == previous;
        previous = rep.lhs_sum;
        msg << "m=" << m << " lhs " << rep.lhs_sum << " rhs " << rep.rhs << " (" << rep.records.size()
            << " fixed points) ";
    }
    return {ok, msg.str()};
}

Outcome lienard_round_trip() {
    const auto setup = sunflower_setup();
    const PeriodicFn1D a = sunflower_coefficient();
    const History init = History::from_function(1.0, 64, [](double th) {
        Vec v(2);
        v << 0.2 + 0.1 * std::cos(3.0 * th), 0.5 + 0.3 * std::sin(2.0 * th);
        return v;
    });
    double worst = 0.0;
    for (double lambda : {0.0, 0.1, 0.5}) {
        const Trajectory traj = integrate(setup.problem, lambda, 1.0, init, 8.0, 128);
        const double res = second_order_residual(traj, 1, kTwoPi, [&](double t, double, double ydot, double yd) {
            return a(t) * ydot + lambda * std::sin(yd);
        });
        worst = std::max(worst, res);
    }
    return {worst <= 1e-5, "sup residual " + fmt("%.3e", worst)};
}

Outcome branch_existence() {
    const auto setup = sunflower_setup();
    ContinuationConfig cfg;
    cfg.h0 = 0.01;
    cfg.h_max = 0.05;
    cfg.translation.newton_tol = 1e-10;
    Vec origin = Vec::Zero(2);
    const Branch branch = continue_branch(setup.problem, origin, 1.0, cfg);
    const bool reached = branch.termination == Termination::ReachedLambdaMax && branch.points.back().lambda == 1.0;
    double drift = 0.0;
    for (const auto& pt : branch.points) {
        if (pt.lambda == 0.0) continue;
        const Translator tr(setup.problem, pt.lambda, 1.0, cfg.translation);
        drift = std::max(drift, tr.translate(pt.history).sup_distance(pt.history));
    }
    const History limit = extrapolate_to_zero(branch);
    // Zeros of nu are (k pi, k pi); take the one nearest the limit's midrange.
    const double mid = 0.5 * (limit.values().maxCoeff() + limit.values().minCoeff());
    const double k = std::round(mid / std::numbers::pi) * std::numbers::pi;
    const double dist = limit.sup_distance_to_constant(Vec::Constant(2, k));
    const bool ok = reached && branch.points.size() >= 20 && drift <= 1e-7 && dist <= 1e-4;
    std::ostringstream msg;
    msg << to_string(branch.termination) << ", " << branch.points.size() << " points, drift " << fmt("%.2e", drift)
        << ", limit distance " << fmt("%.2e", dist);
    return {ok, msg.str()};
}

Outcome delay_normalization() {
    const bool exact = normalize_delay(7.5, 2.0) == 1.5;
    const CoupledProblem long_delay = forced_linear_problem(7.5);
    const CoupledProblem short_delay = forced_linear_problem(1.5);
    TranslationConfig cfg;
    cfg.m = 32;
    const auto a = find_fixed_points(long_delay, 1.0, {History::constant(1.5, cfg.m, Vec::Constant(1, 0.0))}, cfg);
    const auto b = find_fixed_points(short_delay, 1.0, {History::constant(1.5, cfg.m, Vec::Constant(1, 0.5))}, cfg);
    if (a.records.size() != 1 || b.records.size() != 1) {
        return {false, "fixed point search failed"};
    }
    const double dist = a.records[0].history.sup_distance(b.records[0].history);

    // Independent check with the raw delay: extend the periodic solution to
    // [-7.5, 0] and integrate y' = -y + sin(pi t) + 0.3 y(t - 7.5) for one period.
    const double T = short_delay.period();
    const Trajectory periodic = integrate(short_delay, 1.0, 1.0, b.records[0].history, 4.0 * T, cfg.steps_per_delay);
    const History long_hist = History::from_function(7.5, 480, [&](double th) { return periodic.eval(th + 4.0 * T); });
    IntegratorOptions opts;
    opts.steps_per_delay = 5 * cfg.steps_per_delay;
    const Trajectory raw = integrate_with_delay(long_delay, 7.5, 1.0, 1.0, long_hist, T, opts);
    double raw_gap = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = T * i / 200.0;
        raw_gap = std::max(raw_gap, std::abs(raw.eval(t)[0] - periodic.eval(t)[0]));
    }
    return {exact && dist <= 1e-7 && raw_gap <= 1e-7 && long_delay.delay() == 1.5,
            std::string(exact ? "normalize exact" : "normalize inexact") + ", distance " + fmt("%.3e", dist) +
                ", raw-delay gap " + fmt("%.3e", raw_gap)};
}

Outcome integrator_order() {
    const CoupledProblem problem = linear_delay_problem();
    const double lambda = 0.5;
    const History init = History::constant(1.0, 16, Vec::Constant(1, 1.0));
    auto error = [&](int steps) {
        const Trajectory traj = integrate(problem, lambda, 1.0, init, 2.0, steps);
        double e = 0.0;
        for (std::size_t i = 0; i < traj.node_count(); ++i) {
            e = std::max(e, std::abs(traj.node_state(i)[0] - linear_delay_exact(lambda, traj.node_time(i))));
        }
        return e;
    };
    const double e1 = error(16);
    const double e2 = error(32);
    const double ratio = e1 / e2;
    return {ratio >= 12.0 && ratio <= 20.0, "ratio " + fmt("%.3f", ratio) + " (errors " + fmt("%.2e", e1) + ", " +
                                                fmt("%.2e", e2) + ")"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "quadrature fidelity", 1.0, quadrature_fidelity},
        {2, "sigma transformation", 2.0, sigma_transformation},
        {3, "degree suite", 5.0, degree_suite},
        {4, "flow coincidence", 5.0, flow_coincidence},
        {5, "index identity", 60.0, index_identity},
        {6, "Lienard round trip", 10.0, lienard_round_trip},
        {7, "branch existence", 300.0, branch_existence},
        {8, "delay normalization", 60.0, delay_normalization},
        {9, "integrator order", 1.0, integrator_order},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = out.pass && in_time;
        if (!pass) ++failures;
        std::printf("%s criterion %d (%s): %s; %.3f s of %.0f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), secs, c.budget_s, in_time ? "" : " (over budget)");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
