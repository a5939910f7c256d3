#pragma once

// Planar test fields on [-1, 1]^2 with an independent degree oracle that
// counts signed crossings of the positive real axis by the boundary image.

#include "tperiodic/averaging.hpp"
#include "tperiodic/problem.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace tperiodic::testing {

struct SuiteField {
    std::string name;
    FieldHandle field;
    /// False when a zero is not hyperbolic (winding only).
    bool hyperbolic = true;
};

inline FieldHandle planar(std::function<Vec(double, double)> fn) {
    return {2, [fn = std::move(fn)](const Vec& z) { return fn(z[0], z[1]); }};
}

inline Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline FieldHandle complex_power(int n, double shift) {
    return planar([n, shift](double p, double q) {
        const std::complex<double> w = std::pow(std::complex<double>(p, q), n) - shift;
        return v2(w.real(), w.imag());
    });
}

/// sunflower_inv_avg is <1/sigma> for the sunflower coefficient.
inline std::vector<SuiteField> planar_suite(double sunflower_inv_avg) {
    const double c = 1.0 / std::sqrt(3.0);
    return {
        {"identity", planar([](double p, double q) { return v2(p, q); })},
        {"minus_identity", planar([](double p, double q) { return v2(-p, -q); })},
        {"linear_nu", planar([c](double p, double q) { return v2(c * q, p - q); })},
        {"sin_nu", planar([c](double p, double q) { return v2(c * std::sin(q), p - q); })},
        {"z2_shifted", complex_power(2, 0.25)},
        {"saddle", planar([](double p, double q) { return v2(p, -q); })},
        {"rotation", planar([](double p, double q) { return v2(-q, p); })},
        {"fold_pair", planar([](double p, double q) { return v2(p * p - 0.25, q); })},
        {"sin3", planar([](double p, double q) { return v2(std::sin(3.0 * p), q); })},
        {"z3_shifted", complex_power(3, 0.125)},
        {"perturbed", planar([](double p, double q) { return v2(p + 0.3 * q * q, q - 0.2 * p); })},
        {"sunflower_nu",
         planar([sunflower_inv_avg](double p, double q) { return v2(sunflower_inv_avg * std::sin(q), p - q); })},
    };
}

/// Degree on [-1,1]^2 by counting where the image of the boundary crosses
/// the positive real axis, with signs from the crossing direction.
inline int crossing_degree(const FieldHandle& field, int samples_per_edge = 4096) {
    std::vector<Vec> pts;
    const int n = samples_per_edge;
    for (int i = 0; i < n; ++i) pts.push_back(v2(-1.0 + 2.0 * i / n, -1.0));
    for (int i = 0; i < n; ++i) pts.push_back(v2(1.0, -1.0 + 2.0 * i / n));
    for (int i = 0; i < n; ++i) pts.push_back(v2(1.0 - 2.0 * i / n, 1.0));
    for (int i = 0; i < n; ++i) pts.push_back(v2(-1.0, 1.0 - 2.0 * i / n));
    int count = 0;
    Vec prev = field(pts.back());
    for (const auto& p : pts) {
        const Vec cur = field(p);
        const bool down = prev[1] < 0.0;
        const bool up = cur[1] < 0.0;
        if (down != up) {
            // Imaginary part changes sign; interpolate the real part.
            const double s = prev[1] / (prev[1] - cur[1]);
            const double re = prev[0] + s * (cur[0] - prev[0]);
            if (re > 0.0) {
                count += down ? 1 : -1;
            }
        }
        prev = cur;
    }
    return count;
}

}  // namespace tperiodic::testing
