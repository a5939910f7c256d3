#pragma once

// Brouwer degree of a vector field on a box: endpoint signs in 1D, boundary
// winding in 2D, and a Jacobian-sign sum over refined zeros in any dimension.
// Admissibility is certified on samples only; the reported margin is the
// smallest sampled boundary norm.

#include "tperiodic/averaging.hpp"
#include "tperiodic/problem.hpp"

#include "json.hpp"

#include <functional>
#include <vector>

namespace tperiodic {

enum class DegreeMethod { Sign1D, Winding2D, JacobianND };

[[nodiscard]] const char* to_string(DegreeMethod method) noexcept;

struct DegreeZero {
    Vec point;
    int sign = 0;
    double det = 0.0;
    double residual = 0.0;
};

struct DegreeReport {
    int degree = 0;
    double admissibility_margin = 0.0;
    std::vector<DegreeZero> zeros;
    DegreeMethod method = DegreeMethod::Sign1D;
    /// Boundary samples used by the winding method, lattice size otherwise.
    long samples = 0;
    /// Jacobian method: sign-change cells whose Newton run did not converge.
    int unresolved_cells = 0;
};

void to_json(nlohmann::json& j, const DegreeReport& report);

inline constexpr double kAdmissibilityEndpoint = 1e-14;
inline constexpr double kAdmissibilityMargin = 1e-10;
inline constexpr int kMinBoundarySamples = 256;
inline constexpr long kMaxBoundarySamples = 1L << 20;

[[nodiscard]] DegreeReport degree_1d(const std::function<double(double)>& field, double lower, double upper,
                                     int n_check = 64);

[[nodiscard]] DegreeReport degree_2d_winding(const FieldHandle& field, const Box& box, int n_boundary = 1024);

[[nodiscard]] DegreeReport degree_nd_jacobian(const FieldHandle& field, const Box& box, int grid_per_axis = 16,
                                              double tol = 1e-10);

/// Picks the method by dimension: sign-1d, winding-2d, jacobian-nd.
[[nodiscard]] DegreeReport degree_auto(const FieldHandle& field, const Box& box, int grid_per_axis = 16);

/// Central-difference Jacobian with step `step`.
[[nodiscard]] Mat finite_difference_jacobian(const FieldHandle& field, const Vec& at, double step);

}  // namespace tperiodic
