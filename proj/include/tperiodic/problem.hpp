#pragma once

// Problem data model for periodically perturbed coupled delay systems
//
//   x'(t) = lambda * f(t, x, y, x(t-r), y(t-r))
//   y'(t) = a(t) g(x, y) + lambda * h(t, x, y, x(t-r), y(t-r))
//
// with x in R^k (k may be 0), y in R^s, f, h and a T-periodic in t.

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tperiodic {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecIn = Eigen::Ref<const Eigen::VectorXd>;
using VecOut = Eigen::Ref<Eigen::VectorXd>;

/// (t, x, y, x(t-r), y(t-r)) -> out
using DelayField = std::function<void(double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out)>;
/// (x, y) -> out
using CouplingField = std::function<void(VecIn x, VecIn y, VecOut out)>;

inline constexpr int kDefaultQuadrature = 1024;
inline constexpr int kPeriodicitySamples = 17;
inline constexpr double kPeriodicityTolerance = 1e-9;

/// A scalar T-periodic function of time.
class PeriodicFn1D {
public:
    PeriodicFn1D(std::function<double(double)> eval, double period);

    static PeriodicFn1D constant(double value, double period);

    double operator()(double t) const { return eval_(t); }
    [[nodiscard]] double period() const noexcept { return period_; }

private:
    std::function<double(double)> eval_;
    double period_;
};

/// Axis-aligned box, the computational stand-in for the open sets the
/// degree and index are taken over.
class Box {
public:
    Box(Vec lower, Vec upper);

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(lower_.size()); }
    [[nodiscard]] const Vec& lower() const noexcept { return lower_; }
    [[nodiscard]] const Vec& upper() const noexcept { return upper_; }
    [[nodiscard]] Vec center() const { return 0.5 * (lower_ + upper_); }
    [[nodiscard]] Vec width() const { return upper_ - lower_; }
    /// Largest side length.
    [[nodiscard]] double scale() const { return width().maxCoeff(); }
    [[nodiscard]] bool contains(VecIn p) const;
    /// Strict interior test.
    [[nodiscard]] bool contains_strictly(VecIn p) const;

private:
    Vec lower_;
    Vec upper_;
};

/// Sampled function on [-r, 0] with cubic Hermite interpolation between
/// m + 1 equally spaced nodes. Rows of `values()` are nodes, columns are
/// state components.
class History {
public:
    static constexpr int kMinNodes = 8;

    History(double span, Mat values, Mat derivs);

    static History constant(double span, int m, VecIn point);
    /// Derivatives estimated from the node values by fourth-order finite
    /// differences.
    static History from_values(double span, Mat values);
    static History from_function(double span, int m, const std::function<Vec(double)>& fn);
    /// Inverse of `flatten`.
    static History unflatten(double span, int m, int dim, VecIn flat);

    [[nodiscard]] int m() const noexcept { return static_cast<int>(values_.rows()) - 1; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.cols()); }
    [[nodiscard]] double span() const noexcept { return span_; }
    [[nodiscard]] double spacing() const noexcept { return span_ / m(); }
    [[nodiscard]] double node(int i) const noexcept { return -span_ + i * spacing(); }
    [[nodiscard]] const Mat& values() const noexcept { return values_; }
    [[nodiscard]] const Mat& derivs() const noexcept { return derivs_; }

    [[nodiscard]] Vec eval(double theta) const;
    [[nodiscard]] Vec deriv(double theta) const;
    void eval_into(double theta, VecOut out) const;

    /// Node-major flattening: [node0 comps..., node1 comps..., ...].
    [[nodiscard]] Vec flatten() const;
    [[nodiscard]] double sup_norm() const;
    [[nodiscard]] double sup_distance(const History& other) const;
    /// Sup distance to the constant history at `point`.
    [[nodiscard]] double sup_distance_to_constant(VecIn point) const;

private:
    double span_;
    Mat values_;
    Mat derivs_;
};

/// Fourth-order finite-difference derivatives of equally spaced rows.
[[nodiscard]] Mat finite_difference_derivs(const Mat& values, double spacing);

struct ProblemFields {
    int dim_x = 0;
    int dim_y = 1;
    DelayField f;  // may be empty when dim_x == 0 (or to mean f == 0)
    CouplingField g;
    DelayField h;  // empty means h == 0
    std::optional<PeriodicFn1D> a;
    double period = 0.0;
    double delay = 0.0;
    std::optional<Box> domain;
};

/// The full parametrized delay system. Immutable after construction; the
/// delay is normalized into (0, T].
class CoupledProblem {
public:
    explicit CoupledProblem(ProblemFields fields, int n_quad = kDefaultQuadrature);

    [[nodiscard]] int dim_x() const noexcept { return dim_x_; }
    [[nodiscard]] int dim_y() const noexcept { return dim_y_; }
    [[nodiscard]] int dim() const noexcept { return dim_x_ + dim_y_; }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] double delay() const noexcept { return delay_; }
    [[nodiscard]] double raw_delay() const noexcept { return raw_delay_; }
    [[nodiscard]] double average_a() const noexcept { return average_a_; }
    [[nodiscard]] const PeriodicFn1D& a() const noexcept { return a_; }
    [[nodiscard]] const std::optional<Box>& domain() const noexcept { return domain_; }
    [[nodiscard]] bool has_f() const noexcept { return static_cast<bool>(f_); }
    [[nodiscard]] bool has_h() const noexcept { return static_cast<bool>(h_); }

    void eval_f(double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out) const;
    void eval_g(VecIn x, VecIn y, VecOut out) const;
    void eval_h(double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out) const;

private:
    int dim_x_;
    int dim_y_;
    DelayField f_;
    CouplingField g_;
    DelayField h_;
    PeriodicFn1D a_;
    double period_;
    double delay_;
    double raw_delay_;
    double average_a_;
    std::optional<Box> domain_;
};

/// Reduces r to r - nT with the unique n >= 0 giving 0 < r - nT <= T.
[[nodiscard]] double normalize_delay(double r, double period);

/// (1/T) * integral over one period by composite Simpson; n_quad even, >= 8.
[[nodiscard]] double average_scalar(const PeriodicFn1D& fn, int n_quad = kDefaultQuadrature);

/// Composite Simpson weights for n_quad intervals on [0, length].
[[nodiscard]] std::vector<double> simpson_weights(int n_quad, double length);

void check_quadrature_nodes(int n_quad);

}  // namespace tperiodic
