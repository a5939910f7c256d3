#pragma once

// sigma-transformation a = sigma'/sigma - sigma and the Lienard-plane
// reduction of scalar second-order delay equations
//
//   y'' = (gamma'/gamma - gamma g(y)) y' + lambda f(t, y, y(t-r))
//
// to the coupled system x' = lambda f / gamma, y' = gamma (x - G(y)).

#include "tperiodic/integrator.hpp"
#include "tperiodic/problem.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace tperiodic {

inline constexpr int kSigmaGridIntervals = 2048;

struct SigmaGrid {
    double period = 0.0;
    std::vector<double> values;  // sigma at t_i = i T / n, i = 0..n
    std::vector<double> derivs;  // sigma' = sigma (a + sigma)
};

struct SigmaResult {
    PeriodicFn1D sigma;
    PeriodicFn1D sigma_dot;
    double c0 = 0.0;
    int sign = 0;
    double avg_sigma = 0.0;
    double avg_inv_sigma = 0.0;
    double avg_a = 0.0;
    /// |sigma(0) - sigma(T)| before the grid is closed periodically.
    double periodicity_gap = 0.0;
    double max_abs_sigma = 0.0;
    std::shared_ptr<const SigmaGrid> grid;
};

[[nodiscard]] SigmaResult sigma_transform(const PeriodicFn1D& a, int n_quad = kSigmaGridIntervals);

/// Relative periodicity gap |sigma(0) - sigma(T)| / max|sigma| of 1/zeta
/// started from zeta(0) = c. Infinite when zeta vanishes on the grid.
[[nodiscard]] double sigma_periodicity_gap(const PeriodicFn1D& a, double c, int n_quad = kSigmaGridIntervals);

/// max_j |a(t_j) - sigma'(t_j)/sigma(t_j) + sigma(t_j)| over n_check points,
/// sigma' by centered differences with step T / 2^16.
[[nodiscard]] double verify_sigma(const PeriodicFn1D& a, const PeriodicFn1D& sigma, int n_check = 512);

/// (t, sigma) rows on the grid.
void write_sigma_csv(std::ostream& out, const SigmaResult& result);

using ScalarForcing = std::function<double(double t, double y, double yd)>;
using ScalarFn = std::function<double(double)>;

struct ScalarDelayProblem {
    ScalarForcing f;
    ScalarFn G;  // primitive of g
    ScalarFn g;
    double period = 0.0;
    double delay = 0.0;
};

/// G(y) = integral_0^y g by composite Simpson.
[[nodiscard]] ScalarFn primitive_of(ScalarFn g, int intervals = 256);

/// Coupled problem (k = 1, s = 1) with f_c = f(t, y, yd)/gamma(t),
/// g_c = x - G(y), h_c = 0, a_c = gamma.
[[nodiscard]] CoupledProblem lienard_reduce(const ScalarDelayProblem& sdp, const PeriodicFn1D& gamma,
                                            std::optional<Box> domain = std::nullopt,
                                            int n_quad = kDefaultQuadrature);

/// q -> (1/T) integral_0^T f(t, q, q) / gamma(t) dt.
[[nodiscard]] ScalarFn wbar(ScalarForcing f, const PeriodicFn1D& gamma, int n_quad = kDefaultQuadrature);

/// Sunflower-like equation y'' = a(t) y' + lambda phi(y, y(t-r)), reduced
/// with gamma = sigma and G(y) = y.
struct SunflowerSetup {
    SigmaResult sigma;
    ScalarDelayProblem scalar;
    CoupledProblem problem;
};

[[nodiscard]] SunflowerSetup make_sunflower(const PeriodicFn1D& a, std::function<double(double, double)> phi,
                                            double delay, std::optional<Box> domain = std::nullopt,
                                            int n_quad = kDefaultQuadrature);

using SecondOrderRhs = std::function<double(double t, double y, double ydot, double yd)>;

/// Sup over trajectory nodes in [0, t_max] of |y'' - rhs(t, y, y', y(t-r))|
/// for state component `component`. y'' is a fourth-order difference of the
/// node values that never straddles a multiple of the delay; y' is the
/// node slope. The step must divide the delay.
[[nodiscard]] double second_order_residual(const Trajectory& traj, int component, double t_max,
                                           const SecondOrderRhs& rhs);

}  // namespace tperiodic
