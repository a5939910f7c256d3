#pragma once

#include <Eigen/Core>

namespace tperiodic::detail {

// Cubic Hermite on one interval of length `dt`, u in [0, 1]. u == 0 returns
// y0 bit-exactly.
template <typename A, typename B, typename C, typename D, typename Out>
inline void hermite_value(double u, double dt, const A& y0, const B& d0, const C& y1, const D& d1, Out&& out) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    out = h00 * y0 + (dt * h10) * d0 + h01 * y1 + (dt * h11) * d1;
}

template <typename A, typename B, typename C, typename D, typename Out>
inline void hermite_deriv(double u, double dt, const A& y0, const B& d0, const C& y1, const D& d1, Out&& out) {
    const double u2 = u * u;
    const double dh00 = (6.0 * u2 - 6.0 * u) / dt;
    const double dh10 = 3.0 * u2 - 4.0 * u + 1.0;
    const double dh01 = (-6.0 * u2 + 6.0 * u) / dt;
    const double dh11 = 3.0 * u2 - 2.0 * u;
    out = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
}

}  // namespace tperiodic::detail
