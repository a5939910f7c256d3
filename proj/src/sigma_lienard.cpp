#include "tperiodic/sigma_lienard.hpp"

#include "tperiodic/error.hpp"
#include "hermite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace tperiodic {

namespace {

struct Primitives {
    int n = 0;
    double h = 0.0;
    std::vector<double> a;   // a(t_i)
    std::vector<double> A;   // integral_0^{t_i} a
    std::vector<double> eA;  // exp(A(t_i))
    std::vector<double> B;   // integral_0^{t_i} exp(A)
};

// Cumulative Simpson on each interval with midpoint values; A at the
// midpoint comes from the cubic Hermite through (A, a) at the ends.
Primitives build_primitives(const PeriodicFn1D& a, int n) {
    if (n < 8 || n % 2 != 0) {
        throw Error(ErrorKind::InvalidParameter, "sigma grid needs an even number of intervals >= 8");
    }
    const double T = a.period();
    Primitives p;
    p.n = n;
    p.h = T / n;
    p.a.resize(static_cast<std::size_t>(n) + 1);
    std::vector<double> a_mid(static_cast<std::size_t>(n));
    for (int i = 0; i <= n; ++i) {
        p.a[static_cast<std::size_t>(i)] = a(T * i / n);
    }
    for (int i = 0; i < n; ++i) {
        a_mid[static_cast<std::size_t>(i)] = a(T * (i + 0.5) / n);
    }
    p.A.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        p.A[k + 1] = p.A[k] + p.h / 6.0 * (p.a[k] + 4.0 * a_mid[k] + p.a[k + 1]);
    }
    p.eA.resize(p.A.size());
    std::transform(p.A.begin(), p.A.end(), p.eA.begin(), [](double v) { return std::exp(v); });
    p.B.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double A_mid = 0.5 * (p.A[k] + p.A[k + 1]) + p.h / 8.0 * (p.a[k] - p.a[k + 1]);
        p.B[k + 1] = p.B[k] + p.h / 6.0 * (p.eA[k] + 4.0 * std::exp(A_mid) + p.eA[k + 1]);
    }
    for (double v : p.B) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Consistency, "exponential primitive overflows; coefficient too large");
        }
    }
    return p;
}

double wrap(double t, double period) {
    double u = std::fmod(t, period);
    if (u < 0.0) {
        u += period;
    }
    return u;
}

PeriodicFn1D grid_function(std::shared_ptr<const SigmaGrid> grid, bool derivative) {
    const double T = grid->period;
    return PeriodicFn1D(
        [grid, derivative](double t) {
            const double T = grid->period;
            const int n = static_cast<int>(grid->values.size()) - 1;
            const double h = T / n;
            const double u = wrap(t, T) / h;
            int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
            const double s = std::clamp(u - i, 0.0, 1.0);
            const auto k = static_cast<std::size_t>(i);
            double out = 0.0;
            if (derivative) {
                detail::hermite_deriv(s, h, grid->values[k], grid->derivs[k], grid->values[k + 1],
                                      grid->derivs[k + 1], out);
            } else {
                detail::hermite_value(s, h, grid->values[k], grid->derivs[k], grid->values[k + 1],
                                      grid->derivs[k + 1], out);
            }
            return out;
        },
        T);
}

double simpson_average(const std::vector<double>& v, double h, double period) {
    const std::size_t n = v.size() - 1;
    double s = v.front() + v.back();
    for (std::size_t i = 1; i < n; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * v[i];
    }
    return s * h / 3.0 / period;
}

}  // namespace

SigmaResult sigma_transform(const PeriodicFn1D& a, int n_quad) {
    const Primitives p = build_primitives(a, n_quad);
    const double T = a.period();
    const double AT = p.A.back();
    const double avg_a = AT / T;
    const double max_a = std::abs(*std::max_element(p.a.begin(), p.a.end(),
                                                    [](double l, double r) { return std::abs(l) < std::abs(r); }));
    if (std::abs(avg_a) <= 1e-12 * std::max(1.0, max_a)) {
        throw Error(ErrorKind::ZeroAverage, "sigma-transformation requires a nonzero average of a");
    }
    const double e_mT = std::exp(-AT);
    const double denom = e_mT - 1.0;
    const double BT = p.B.back();
    const double c0 = BT * e_mT / denom;

    // zeta(t) = e^{-A(t)} (c0 - B(t)) rearranged without cancellation.
    auto grid = std::make_shared<SigmaGrid>();
    grid->period = T;
    const std::size_t n = static_cast<std::size_t>(n_quad);
    grid->values.resize(n + 1);
    grid->derivs.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double zeta = ((BT - p.B[i]) * e_mT + p.B[i]) / denom / p.eA[i];
        grid->values[i] = 1.0 / zeta;
    }

    SigmaResult result{PeriodicFn1D::constant(0.0, T), PeriodicFn1D::constant(0.0, T), 0.0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, nullptr};
    result.c0 = c0;
    result.avg_a = avg_a;
    result.sign = avg_a > 0.0 ? -1 : 1;
    result.max_abs_sigma = 0.0;
    for (double v : grid->values) {
        result.max_abs_sigma = std::max(result.max_abs_sigma, std::abs(v));
    }
    result.periodicity_gap = std::abs(grid->values.front() - grid->values.back());

    for (std::size_t i = 0; i <= n; ++i) {
        const double v = grid->values[i];
        if (!std::isfinite(v) || v * result.sign <= 0.0) {
            throw Error(ErrorKind::Consistency, "sigma is not sign-definite on the grid; increase n_quad");
        }
    }
    if (result.periodicity_gap > 1e-8 * result.max_abs_sigma) {
        throw Error(ErrorKind::Consistency, "sigma periodicity gap above tolerance; increase n_quad");
    }
    // Close the grid periodically, then derive sigma' from the equation.
    grid->values.back() = grid->values.front();
    for (std::size_t i = 0; i <= n; ++i) {
        const double v = grid->values[i];
        grid->derivs[i] = v * (p.a[i] + v);
    }

    std::vector<double> inv(n + 1);
    std::transform(grid->values.begin(), grid->values.end(), inv.begin(), [](double v) { return 1.0 / v; });
    result.avg_sigma = simpson_average(grid->values, p.h, T);
    result.avg_inv_sigma = simpson_average(inv, p.h, T);
    if (std::abs(result.avg_sigma + avg_a) > 1e-8 * (1.0 + std::abs(avg_a))) {
        throw Error(ErrorKind::Consistency, "average of sigma does not match -<a>; increase n_quad");
    }
    result.grid = grid;
    result.sigma = grid_function(grid, false);
    result.sigma_dot = grid_function(grid, true);
    return result;
}

double sigma_periodicity_gap(const PeriodicFn1D& a, double c, int n_quad) {
    const Primitives p = build_primitives(a, n_quad);
    const auto n = static_cast<std::size_t>(n_quad);
    double max_abs = 0.0;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double zeta = (c - p.B[i]) / p.eA[i];
        if (zeta == 0.0 || !std::isfinite(zeta)) {
            return std::numeric_limits<double>::infinity();
        }
        const double s = 1.0 / zeta;
        if (i > 0 && (s > 0.0) != (first > 0.0)) {
            return std::numeric_limits<double>::infinity();  // zeta crossed zero
        }
        if (i == 0) first = s;
        last = s;
        max_abs = std::max(max_abs, std::abs(s));
    }
    return std::abs(first - last) / max_abs;
}

double verify_sigma(const PeriodicFn1D& a, const PeriodicFn1D& sigma, int n_check) {
    if (n_check < 1) {
        throw Error(ErrorKind::InvalidParameter, "verify_sigma: n_check must be positive");
    }
    const double T = a.period();
    const double dt = T / 65536.0;
    double worst = 0.0;
    for (int j = 0; j < n_check; ++j) {
        const double t = T * j / n_check;
        const double s = sigma(t);
        const double sdot = (sigma(t + dt) - sigma(t - dt)) / (2.0 * dt);
        worst = std::max(worst, std::abs(a(t) - sdot / s + s));
    }
    return worst;
}

void write_sigma_csv(std::ostream& out, const SigmaResult& result) {
    const auto& g = *result.grid;
    const std::size_t n = g.values.size() - 1;
    out << "t,sigma\n";
    char buf[64];
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = i == n ? g.period : g.period * static_cast<double>(i) / static_cast<double>(n);
        std::snprintf(buf, sizeof buf, "%.17g,", t);
        out << buf;
        std::snprintf(buf, sizeof buf, "%.17g\n", g.values[i]);
        out << buf;
    }
}

ScalarFn primitive_of(ScalarFn g, int intervals) {
    if (intervals < 2 || intervals % 2 != 0) {
        throw Error(ErrorKind::InvalidParameter, "primitive_of: intervals must be even and >= 2");
    }
    return [g = std::move(g), intervals](double y) {
        if (y == 0.0) {
            return 0.0;
        }
        const double h = y / intervals;
        double s = g(0.0) + g(y);
        for (int i = 1; i < intervals; ++i) {
            s += (i % 2 == 1 ? 4.0 : 2.0) * g(h * i);
        }
        return s * h / 3.0;
    };
}

CoupledProblem lienard_reduce(const ScalarDelayProblem& sdp, const PeriodicFn1D& gamma, std::optional<Box> domain,
                              int n_quad) {
    if (!sdp.G) {
        throw Error(ErrorKind::InvalidParameter, "Lienard reduction needs the primitive G");
    }
    const double T = sdp.period;
    for (int i = 0; i < 257; ++i) {
        const double v = gamma(T * i / 256.0);
        if (!(std::abs(v) > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::InvalidParameter, "gamma vanishes or is not finite");
        }
    }
    ProblemFields fields;
    fields.dim_x = 1;
    fields.dim_y = 1;
    if (sdp.f) {
        fields.f = [f = sdp.f, gamma](double t, VecIn, VecIn y, VecIn, VecIn yd, VecOut out) {
            out[0] = f(t, y[0], yd[0]) / gamma(t);
        };
    }
    fields.g = [G = sdp.G](VecIn x, VecIn y, VecOut out) { out[0] = x[0] - G(y[0]); };
    fields.a = gamma;
    fields.period = T;
    fields.delay = sdp.delay;
    fields.domain = std::move(domain);
    return CoupledProblem(std::move(fields), n_quad);
}

ScalarFn wbar(ScalarForcing f, const PeriodicFn1D& gamma, int n_quad) {
    check_quadrature_nodes(n_quad);
    const double T = gamma.period();
    auto w = simpson_weights(n_quad, T);
    std::vector<double> inv(static_cast<std::size_t>(n_quad) + 1);
    for (int i = 0; i <= n_quad; ++i) {
        const double g = gamma(T * i / n_quad);
        if (g == 0.0) {
            throw Error(ErrorKind::InvalidParameter, "gamma vanishes on a quadrature node");
        }
        inv[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / g / T;
    }
    return [f = std::move(f), inv = std::move(inv), T, n_quad](double q) {
        double s = 0.0;
        for (int i = 0; i <= n_quad; ++i) {
            s += inv[static_cast<std::size_t>(i)] * f(T * i / n_quad, q, q);
        }
        return s;
    };
}

SunflowerSetup make_sunflower(const PeriodicFn1D& a, std::function<double(double, double)> phi, double delay,
                              std::optional<Box> domain, int n_quad) {
    SigmaResult sigma = sigma_transform(a);
    ScalarDelayProblem sdp;
    sdp.f = [phi = std::move(phi)](double, double y, double yd) { return phi(y, yd); };
    sdp.G = [](double y) { return y; };
    sdp.g = [](double) { return 1.0; };
    sdp.period = a.period();
    sdp.delay = delay;
    CoupledProblem problem = lienard_reduce(sdp, sigma.sigma, std::move(domain), n_quad);
    return {std::move(sigma), std::move(sdp), std::move(problem)};
}

double second_order_residual(const Trajectory& traj, int component, double t_max, const SecondOrderRhs& rhs) {
    if (component < 0 || component >= traj.dim()) {
        throw Error(ErrorKind::InvalidParameter, "second_order_residual: component out of range");
    }
    const double h = traj.step();
    const double r = traj.delay();
    const double per_delay = r / h;
    const long steps = std::lround(per_delay);
    if (std::abs(per_delay - static_cast<double>(steps)) > 1e-9 * per_delay || steps < 6) {
        throw Error(ErrorKind::InvalidParameter, "second_order_residual: step must divide the delay");
    }
    const std::size_t count = traj.node_count();
    if (count < 7 || t_max > traj.node_time(count - 1) + 1e-12) {
        throw Error(ErrorKind::InvalidParameter, "second_order_residual: trajectory too short");
    }
    // Uniformly spaced nodes only; a partial last step is skipped.
    std::size_t uniform = count;
    if (std::abs(traj.node_time(count - 1) - static_cast<double>(count - 1) * h) > 1e-9 * h) {
        uniform = count - 1;
    }
    auto y_at = [&](std::size_t i) { return traj.node_state(i)[component]; };
    const double inv_h2 = 1.0 / (12.0 * h * h);
    double worst = 0.0;
    for (std::size_t i = 0; i < uniform; ++i) {
        const double t = traj.node_time(i);
        if (t > t_max + 1e-9 * h) {
            break;
        }
        // Stencils never straddle a multiple of the delay.
        const long pos = static_cast<long>(i) % steps;
        const bool backward_ok = i >= 5 && (pos == 0 || pos >= 5);
        double ydd;
        if (pos >= 2 && pos <= steps - 2 && i + 2 < uniform) {
            ydd = (-y_at(i - 2) + 16.0 * y_at(i - 1) - 30.0 * y_at(i) + 16.0 * y_at(i + 1) - y_at(i + 2)) * inv_h2;
        } else if (pos < 2 && i + 5 < uniform) {
            ydd = (45.0 * y_at(i) - 154.0 * y_at(i + 1) + 214.0 * y_at(i + 2) - 156.0 * y_at(i + 3) +
                   61.0 * y_at(i + 4) - 10.0 * y_at(i + 5)) *
                  inv_h2;
        } else if (backward_ok) {
            ydd = (45.0 * y_at(i) - 154.0 * y_at(i - 1) + 214.0 * y_at(i - 2) - 156.0 * y_at(i - 3) +
                   61.0 * y_at(i - 4) - 10.0 * y_at(i - 5)) *
                  inv_h2;
        } else {
            continue;
        }
        const double y = y_at(i);
        const double ydot = traj.node_slope(i)[component];
        const double yd = traj.eval(t - r)[component];
        worst = std::max(worst, std::abs(ydd - rhs(t, y, ydot, yd)));
    }
    return worst;
}

}  // namespace tperiodic
