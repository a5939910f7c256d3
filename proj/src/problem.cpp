#include "tperiodic/problem.hpp"

#include "hermite.hpp"
#include "tperiodic/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tperiodic {

namespace {

bool is_finite(double v) { return std::isfinite(v); }

// Deterministic pseudo-states for the construction-time periodicity check.
double sample_component(int sample, int component) {
    return 0.9 * std::sin(1.3 * sample + 0.7 * component + 0.1);
}

bool close_enough(double lhs, double rhs) {
    return std::abs(lhs - rhs) <= kPeriodicityTolerance * std::max(1.0, std::abs(lhs));
}

}  // namespace

PeriodicFn1D::PeriodicFn1D(std::function<double(double)> eval, double period)
    : eval_(std::move(eval)), period_(period) {
    if (!eval_) {
        throw Error(ErrorKind::InvalidParameter, "periodic function has no evaluator");
    }
    if (!(period > 0.0) || !is_finite(period)) {
        throw Error(ErrorKind::InvalidParameter, "period must be positive");
    }
}

PeriodicFn1D PeriodicFn1D::constant(double value, double period) {
    return PeriodicFn1D([value](double) { return value; }, period);
}

Box::Box(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0) {
        throw Error(ErrorKind::InvalidParameter, "box bounds must be nonempty and of equal dimension");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] < upper_[i])) {
            throw Error(ErrorKind::InvalidParameter,
                        "box lower bound must be below upper bound in component " + std::to_string(i));
        }
    }
}

bool Box::contains(VecIn p) const {
    return p.size() == lower_.size() && (p.array() >= lower_.array()).all() &&
           (p.array() <= upper_.array()).all();
}

bool Box::contains_strictly(VecIn p) const {
    return p.size() == lower_.size() && (p.array() > lower_.array()).all() &&
           (p.array() < upper_.array()).all();
}

// ---------------------------------------------------------------------------
// History

History::History(double span, Mat values, Mat derivs)
    : span_(span), values_(std::move(values)), derivs_(std::move(derivs)) {
    if (!(span > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "history span must be positive");
    }
    if (values_.rows() < kMinNodes + 1) {
        throw Error(ErrorKind::InvalidParameter, "history needs m >= 8 (at least 9 nodes)");
    }
    if (values_.cols() < 1 || derivs_.rows() != values_.rows() || derivs_.cols() != values_.cols()) {
        throw Error(ErrorKind::InvalidParameter, "history value and derivative arrays disagree in shape");
    }
}

History History::constant(double span, int m, VecIn point) {
    Mat values = point.transpose().replicate(m + 1, 1);
    Mat derivs = Mat::Zero(m + 1, point.size());
    return History(span, std::move(values), std::move(derivs));
}

History History::from_values(double span, Mat values) {
    const int m = static_cast<int>(values.rows()) - 1;
    if (m < kMinNodes) {
        throw Error(ErrorKind::InvalidParameter, "history needs m >= 8 (at least 9 nodes)");
    }
    Mat derivs = finite_difference_derivs(values, span / m);
    return History(span, std::move(values), std::move(derivs));
}

History History::from_function(double span, int m, const std::function<Vec(double)>& fn) {
    if (m < kMinNodes) {
        throw Error(ErrorKind::InvalidParameter, "history needs m >= 8");
    }
    const Vec first = fn(-span);
    Mat values(m + 1, first.size());
    for (int i = 0; i <= m; ++i) {
        values.row(i) = fn(-span + i * span / m).transpose();
    }
    return from_values(span, std::move(values));
}

History History::unflatten(double span, int m, int dim, VecIn flat) {
    if (flat.size() != static_cast<Eigen::Index>(m + 1) * dim) {
        throw Error(ErrorKind::InvalidParameter, "flattened history has the wrong length");
    }
    Mat values(m + 1, dim);
    for (int i = 0; i <= m; ++i) {
        values.row(i) = flat.segment(static_cast<Eigen::Index>(i) * dim, dim).transpose();
    }
    return from_values(span, std::move(values));
}

namespace {

struct Locator {
    int index;
    double u;
    bool on_node;
};

// Locates theta in the node grid; exact nodes (up to rounding) snap.
Locator locate(double theta, double span, int m) {
    const double h = span / m;
    const double s = (theta + span) / h;
    const double nearest = std::round(s);
    if (std::abs(s - nearest) <= 1e-12 * std::max(1.0, std::abs(s))) {
        const int j = std::clamp(static_cast<int>(nearest), 0, m);
        return {j, 0.0, true};
    }
    int j = static_cast<int>(std::floor(s));
    j = std::clamp(j, 0, m - 1);
    return {j, s - j, false};
}

void check_theta(double theta, double span) {
    const double eps = 1e-9 * span;
    if (!(theta >= -span - eps && theta <= eps)) {
        throw Error(ErrorKind::InvalidParameter,
                    "history evaluated outside [-r, 0] at theta = " + std::to_string(theta));
    }
}

}  // namespace

void History::eval_into(double theta, VecOut out) const {
    check_theta(theta, span_);
    const Locator loc = locate(theta, span_, m());
    if (loc.on_node) {
        out = values_.row(loc.index).transpose();
        return;
    }
    detail::hermite_value(loc.u, spacing(), values_.row(loc.index).transpose(),
                          derivs_.row(loc.index).transpose(), values_.row(loc.index + 1).transpose(),
                          derivs_.row(loc.index + 1).transpose(), out);
}

Vec History::eval(double theta) const {
    Vec out(dim());
    eval_into(theta, out);
    return out;
}

Vec History::deriv(double theta) const {
    check_theta(theta, span_);
    const Locator loc = locate(theta, span_, m());
    if (loc.on_node) {
        return derivs_.row(loc.index).transpose();
    }
    Vec out(dim());
    detail::hermite_deriv(loc.u, spacing(), values_.row(loc.index).transpose(),
                          derivs_.row(loc.index).transpose(), values_.row(loc.index + 1).transpose(),
                          derivs_.row(loc.index + 1).transpose(), out);
    return out;
}

Vec History::flatten() const {
    Vec flat(values_.size());
    for (int i = 0; i <= m(); ++i) {
        flat.segment(static_cast<Eigen::Index>(i) * dim(), dim()) = values_.row(i).transpose();
    }
    return flat;
}

double History::sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

double History::sup_distance(const History& other) const {
    if (other.values_.rows() != values_.rows() || other.values_.cols() != values_.cols()) {
        throw Error(ErrorKind::InvalidParameter, "histories have different shapes");
    }
    return (values_ - other.values_).cwiseAbs().maxCoeff();
}

double History::sup_distance_to_constant(VecIn point) const {
    if (point.size() != dim()) {
        throw Error(ErrorKind::InvalidParameter, "constant point has the wrong dimension");
    }
    return (values_.rowwise() - point.transpose()).cwiseAbs().maxCoeff();
}

Mat finite_difference_derivs(const Mat& values, double spacing) {
    const Eigen::Index n = values.rows();
    if (n < 5) {
        throw Error(ErrorKind::InvalidParameter, "finite differences need at least 5 nodes");
    }
    Mat d(n, values.cols());
    const double inv = 1.0 / (12.0 * spacing);
    auto v = [&](Eigen::Index i) { return values.row(i); };
    d.row(0) = (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)) * inv;
    d.row(1) = (-3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4)) * inv;
    for (Eigen::Index i = 2; i + 2 < n; ++i) {
        d.row(i) = (v(i - 2) - 8.0 * v(i - 1) + 8.0 * v(i + 1) - v(i + 2)) * inv;
    }
    const Eigen::Index e = n - 1;
    d.row(e - 1) = (3.0 * v(e) + 10.0 * v(e - 1) - 18.0 * v(e - 2) + 6.0 * v(e - 3) - v(e - 4)) * inv;
    d.row(e) = (25.0 * v(e) - 48.0 * v(e - 1) + 36.0 * v(e - 2) - 16.0 * v(e - 3) + 3.0 * v(e - 4)) * inv;
    return d;
}

// ---------------------------------------------------------------------------
// Quadrature and delay normalization

void check_quadrature_nodes(int n_quad) {
    if (n_quad < 8 || n_quad % 2 != 0) {
        throw Error(ErrorKind::InvalidParameter, "n_quad must be even and >= 8");
    }
}

std::vector<double> simpson_weights(int n_quad, double length) {
    check_quadrature_nodes(n_quad);
    const double h = length / n_quad;
    std::vector<double> w(static_cast<std::size_t>(n_quad) + 1);
    for (int i = 0; i <= n_quad; ++i) {
        const double c = (i == 0 || i == n_quad) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[static_cast<std::size_t>(i)] = c * h / 3.0;
    }
    return w;
}

double average_scalar(const PeriodicFn1D& fn, int n_quad) {
    const double T = fn.period();
    const auto w = simpson_weights(n_quad, T);
    double sum = 0.0;
    for (int i = 0; i <= n_quad; ++i) {
        sum += w[static_cast<std::size_t>(i)] * fn(T * i / n_quad);
    }
    return sum / T;
}

double normalize_delay(double r, double period) {
    if (!(r > 0.0) || !is_finite(r)) {
        throw Error(ErrorKind::InvalidParameter, "delay must be positive");
    }
    if (!(period > 0.0) || !is_finite(period)) {
        throw Error(ErrorKind::InvalidParameter, "period must be positive");
    }
    if (r <= period) {
        return r;
    }
    const double n = std::ceil(r / period) - 1.0;
    double reduced = r - n * period;
    if (reduced <= 0.0) {
        reduced += period;
    } else if (reduced > period) {
        reduced -= period;
    }
    return reduced;
}

// ---------------------------------------------------------------------------
// CoupledProblem

CoupledProblem::CoupledProblem(ProblemFields fields, int n_quad)
    : dim_x_(fields.dim_x),
      dim_y_(fields.dim_y),
      f_(std::move(fields.f)),
      g_(std::move(fields.g)),
      h_(std::move(fields.h)),
      a_(fields.a ? *fields.a : PeriodicFn1D::constant(1.0, fields.period > 0 ? fields.period : 1.0)),
      period_(fields.period),
      delay_(0.0),
      raw_delay_(fields.delay),
      average_a_(0.0),
      domain_(std::move(fields.domain)) {
    if (dim_x_ < 0 || dim_y_ < 1) {
        throw Error(ErrorKind::InvalidParameter, "need dim_x >= 0 and dim_y >= 1");
    }
    if (!fields.a) {
        throw Error(ErrorKind::InvalidParameter, "coefficient a is required");
    }
    if (!g_) {
        throw Error(ErrorKind::InvalidParameter, "field g is required");
    }
    if (!(period_ > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "period must be positive");
    }
    if (std::abs(a_.period() - period_) > 1e-12 * period_) {
        throw Error(ErrorKind::InvalidParameter, "coefficient a must have the problem's period");
    }
    if (domain_ && domain_->dim() != dim()) {
        throw Error(ErrorKind::InvalidParameter, "domain box dimension must equal dim_x + dim_y");
    }
    delay_ = normalize_delay(raw_delay_, period_);

    average_a_ = average_scalar(a_, n_quad);
    double a_scale = 0.0;
    for (int i = 0; i < kPeriodicitySamples; ++i) {
        a_scale = std::max(a_scale, std::abs(a_(period_ * i / kPeriodicitySamples)));
    }
    if (std::abs(average_a_) <= 1e-12 * std::max(1.0, a_scale)) {
        throw Error(ErrorKind::ZeroAverage, "the average of a over one period vanishes");
    }

    // Spot check of T-periodicity of a, f and h.
    Vec x(dim_x_), y(dim_y_), xd(dim_x_), yd(dim_y_);
    Vec out0, out1;
    for (int i = 0; i < kPeriodicitySamples; ++i) {
        const double t = period_ * (i + 0.37) / kPeriodicitySamples;
        if (!close_enough(a_(t), a_(t + period_))) {
            throw Error(ErrorKind::InvalidParameter, "coefficient a is not T-periodic");
        }
        for (int j = 0; j < dim_x_; ++j) {
            x[j] = sample_component(i, j);
            xd[j] = sample_component(i + 5, j);
        }
        for (int j = 0; j < dim_y_; ++j) {
            y[j] = sample_component(i, j + dim_x_);
            yd[j] = sample_component(i + 5, j + dim_x_);
        }
        auto check = [&](const DelayField& field, int n, const char* name) {
            if (!field || n == 0) {
                return;
            }
            out0.resize(n);
            out1.resize(n);
            try {
                field(t, x, y, xd, yd, out0);
                field(t + period_, x, y, xd, yd, out1);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Evaluation) {
                    return;  // sample outside the field's domain
                }
                throw;
            }
            for (int j = 0; j < n; ++j) {
                if (!close_enough(out0[j], out1[j])) {
                    throw Error(ErrorKind::InvalidParameter, std::string("field ") + name + " is not T-periodic");
                }
            }
        };
        check(f_, dim_x_, "f");
        check(h_, dim_y_, "h");
    }
}

void CoupledProblem::eval_f(double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out) const {
    if (f_ && dim_x_ > 0) {
        f_(t, x, y, xd, yd, out);
    } else {
        out.setZero();
    }
}

void CoupledProblem::eval_g(VecIn x, VecIn y, VecOut out) const { g_(x, y, out); }

void CoupledProblem::eval_h(double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out) const {
    if (h_) {
        h_(t, x, y, xd, yd, out);
    } else {
        out.setZero();
    }
}

}  // namespace tperiodic
