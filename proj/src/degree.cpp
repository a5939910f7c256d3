#include "tperiodic/degree.hpp"

#include "tperiodic/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace tperiodic {

const char* to_string(DegreeMethod method) noexcept {
    switch (method) {
        case DegreeMethod::Sign1D: return "sign-1d";
        case DegreeMethod::Winding2D: return "winding-2d";
        case DegreeMethod::JacobianND: return "jacobian-nd";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const DegreeReport& report) {
    nlohmann::json zeros = nlohmann::json::array();
    for (const auto& z : report.zeros) {
        zeros.push_back({{"point", std::vector<double>(z.point.data(), z.point.data() + z.point.size())},
                         {"sign", z.sign},
                         {"det", z.det},
                         {"residual", z.residual}});
    }
    j = nlohmann::json{{"degree", report.degree},
                       {"admissibility_margin", report.admissibility_margin},
                       {"method", to_string(report.method)},
                       {"samples", report.samples},
                       {"unresolved_cells", report.unresolved_cells},
                       {"zeros", std::move(zeros)}};
}

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

DegreeReport degree_1d(const std::function<double(double)>& field, double lower, double upper, int n_check) {
    if (!(lower < upper)) {
        throw Error(ErrorKind::InvalidParameter, "degree_1d: interval must satisfy lower < upper");
    }
    if (n_check < 2) {
        throw Error(ErrorKind::InvalidParameter, "degree_1d: n_check must be >= 2");
    }
    const double fa = field(lower);
    const double fb = field(upper);
    if (!std::isfinite(fa) || !std::isfinite(fb) || std::abs(fa) <= kAdmissibilityEndpoint ||
        std::abs(fb) <= kAdmissibilityEndpoint) {
        throw Error(ErrorKind::Admissibility, "field vanishes at an endpoint of the interval");
    }
    DegreeReport report;
    report.method = DegreeMethod::Sign1D;
    report.degree = (sign_of(fb) - sign_of(fa)) / 2;
    report.admissibility_margin = std::min(std::abs(fa), std::abs(fb));
    report.samples = n_check + 1;

    // Diagnostic: bracket interior sign changes and bisect them.
    double x0 = lower;
    double f0 = fa;
    for (int i = 1; i <= n_check; ++i) {
        const double x1 = i == n_check ? upper : lower + (upper - lower) * i / n_check;
        const double f1 = i == n_check ? fb : field(x1);
        if (f1 == 0.0 && i < n_check) {
            Vec p(1);
            p[0] = x1;
            report.zeros.push_back({p, 0, 0.0, 0.0});
        } else if (sign_of(f0) * sign_of(f1) < 0) {
            double lo = x0, hi = x1, flo = f0;
            for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::abs(hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = field(mid);
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (sign_of(fm) == sign_of(flo)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            Vec p(1);
            p[0] = 0.5 * (lo + hi);
            report.zeros.push_back({p, sign_of(f1 - f0), 0.0, std::abs(field(p[0]))});
        }
        x0 = x1;
        f0 = f1;
    }
    return report;
}

namespace {

// Counterclockwise boundary point at arclength fraction s in [0, 1).
Vec perimeter_point(const Box& box, double s) {
    const double w = box.width()[0];
    const double hgt = box.width()[1];
    const double per = 2.0 * (w + hgt);
    double d = s * per;
    Vec p(2);
    const double x0 = box.lower()[0], y0 = box.lower()[1], x1 = box.upper()[0], y1 = box.upper()[1];
    if (d < w) {
        p << x0 + d, y0;
    } else if ((d -= w) < hgt) {
        p << x1, y0 + d;
    } else if ((d -= hgt) < w) {
        p << x1 - d, y1;
    } else {
        d -= w;
        p << x0, y1 - d;
    }
    return p;
}

// Smallest |field| on the boundary arc [s0, s1], by ternary search; the
// norm of a nearly affine field along a short arc is convex.
double arc_min_norm(const FieldHandle& field, const Box& box, double s0, double s1) {
    auto norm_at = [&](double s) { return field(perimeter_point(box, s)).norm(); };
    double lo = s0;
    double hi = s1;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (norm_at(m1) < norm_at(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return std::min({norm_at(lo), norm_at(s0), norm_at(std::min(s1, std::nextafter(1.0, 0.0)))});
}

}  // namespace

DegreeReport degree_2d_winding(const FieldHandle& field, const Box& box, int n_boundary) {
    if (box.dim() != 2 || field.dim != 2) {
        throw Error(ErrorKind::InvalidParameter, "winding degree needs a planar field and box");
    }
    if (n_boundary < kMinBoundarySamples) {
        throw Error(ErrorKind::InvalidParameter, "winding degree needs n_boundary >= 256");
    }
    double worst_s0 = 0.0;
    double worst_s1 = 0.0;
    for (long samples = n_boundary; samples <= kMaxBoundarySamples; samples *= 2) {
        double total = 0.0;
        double max_step = 0.0;
        double margin = std::numeric_limits<double>::infinity();
        Vec first, prev;
        for (long i = 0; i <= samples; ++i) {
            const double s = i == samples ? 0.0 : static_cast<double>(i) / static_cast<double>(samples);
            Vec v = i == samples ? first : field(perimeter_point(box, s));
            if (i < samples) {
                if (!v.allFinite()) {
                    throw Error(ErrorKind::Admissibility, "field is not finite on the boundary");
                }
                margin = std::min(margin, v.norm());
            }
            if (i == 0) {
                first = v;
            } else {
                const double cross = prev[0] * v[1] - prev[1] * v[0];
                const double dot = prev.dot(v);
                const double step = std::atan2(cross, dot);
                total += step;
                if (std::abs(step) > max_step) {
                    max_step = std::abs(step);
                    worst_s0 = static_cast<double>(i - 1) / static_cast<double>(samples);
                    worst_s1 = static_cast<double>(i) / static_cast<double>(samples);
                }
            }
            prev = std::move(v);
        }
        if (margin < kAdmissibilityMargin) {
            throw Error(ErrorKind::Admissibility,
                        "field (nearly) vanishes on the boundary; margin " + std::to_string(margin));
        }
        if (max_step < std::numbers::pi / 2.0) {
            DegreeReport report;
            report.method = DegreeMethod::Winding2D;
            report.degree = static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
            report.admissibility_margin = margin;
            report.samples = samples;
            return report;
        }
    }
    const double arc_margin = arc_min_norm(field, box, worst_s0, worst_s1);
    if (arc_margin < kAdmissibilityMargin) {
        throw Error(ErrorKind::Admissibility,
                    "field vanishes on the boundary between samples; margin " + std::to_string(arc_margin));
    }
    throw Error(ErrorKind::Resolution, "winding increments stay >= pi/2 at the maximum boundary resolution");
}

Mat finite_difference_jacobian(const FieldHandle& field, const Vec& at, double step) {
    const auto n = at.size();
    Mat jac(n, n);
    Vec probe = at;
    for (Eigen::Index j = 0; j < n; ++j) {
        probe[j] = at[j] + step;
        const Vec plus = field(probe);
        probe[j] = at[j] - step;
        const Vec minus = field(probe);
        probe[j] = at[j];
        jac.col(j) = (plus - minus) / (2.0 * step);
    }
    return jac;
}

namespace {

struct Lattice {
    int n;
    int g;
    long count() const {
        long c = 1;
        for (int i = 0; i < n; ++i) c *= (g + 1);
        return c;
    }
    std::vector<int> unravel(long idx) const {
        std::vector<int> c(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            c[static_cast<std::size_t>(i)] = static_cast<int>(idx % (g + 1));
            idx /= (g + 1);
        }
        return c;
    }
    long ravel(const std::vector<int>& c) const {
        long idx = 0;
        for (int i = n - 1; i >= 0; --i) idx = idx * (g + 1) + c[static_cast<std::size_t>(i)];
        return idx;
    }
};

struct NewtonOutcome {
    bool converged = false;
    Vec point;
    double residual = 0.0;
};

NewtonOutcome refine_zero(const FieldHandle& field, const Box& box, Vec x, double tol, double fd_step) {
    Vec fx = field(x);
    double res = fx.cwiseAbs().maxCoeff();
    for (int it = 0; it < 60 && res > tol; ++it) {
        const Mat jac = finite_difference_jacobian(field, x, fd_step);
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) {
            return {false, x, res};
        }
        const Vec dx = lu.solve(fx);
        double alpha = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Vec trial = x - alpha * dx;
            Vec ft = field(trial);
            const double rt = ft.cwiseAbs().maxCoeff();
            if (std::isfinite(rt) && rt < res) {
                x = std::move(trial);
                fx = std::move(ft);
                res = rt;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) {
            break;
        }
        // Allow a little slack outside the box while iterating.
        const Vec slack = 0.5 * box.width();
        if (((x - box.lower()).array() < -slack.array()).any() || ((x - box.upper()).array() > slack.array()).any()) {
            return {false, x, res};
        }
    }
    return {res <= tol, x, res};
}

}  // namespace

DegreeReport degree_nd_jacobian(const FieldHandle& field, const Box& box, int grid_per_axis, double tol) {
    const int n = box.dim();
    if (field.dim != n) {
        throw Error(ErrorKind::InvalidParameter, "field and box dimensions differ");
    }
    if (grid_per_axis < 8) {
        throw Error(ErrorKind::InvalidParameter, "grid_per_axis must be >= 8");
    }
    if (!(tol > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "tol must be positive");
    }
    const double scale = box.scale();
    const Lattice lat{n, grid_per_axis};
    const long total = lat.count();
    if (total > 20'000'000) {
        throw Error(ErrorKind::InvalidParameter, "lattice too large; reduce grid_per_axis");
    }

    auto lattice_point = [&](const std::vector<int>& c) {
        Vec p(n);
        for (int i = 0; i < n; ++i) {
            const int ci = c[static_cast<std::size_t>(i)];
            p[i] = ci == grid_per_axis ? box.upper()[i]
                                       : box.lower()[i] + box.width()[i] * ci / grid_per_axis;
        }
        return p;
    };

    Mat values(n, total);
    double margin = std::numeric_limits<double>::infinity();
    for (long idx = 0; idx < total; ++idx) {
        const auto c = lat.unravel(idx);
        const Vec v = field(lattice_point(c));
        if (!v.allFinite()) {
            throw Error(ErrorKind::Admissibility, "field is not finite on the sample lattice");
        }
        values.col(idx) = v;
        const bool on_boundary =
            std::any_of(c.begin(), c.end(), [&](int ci) { return ci == 0 || ci == grid_per_axis; });
        if (on_boundary) {
            margin = std::min(margin, v.norm());
        }
    }
    if (margin < kAdmissibilityMargin) {
        throw Error(ErrorKind::Admissibility,
                    "field (nearly) vanishes on the boundary; margin " + std::to_string(margin));
    }

    DegreeReport report;
    report.method = DegreeMethod::JacobianND;
    report.admissibility_margin = margin;
    report.samples = total;

    const double fd_step = 1e-6 * scale;
    const double dedupe = 1e-6 * scale;
    const long corners = 1L << n;
    std::vector<int> cell(static_cast<std::size_t>(n), 0);
    const Lattice cells{n, grid_per_axis - 1};
    for (long cidx = 0; cidx < cells.count(); ++cidx) {
        cell = cells.unravel(cidx);
        Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
        Vec hi = -lo;
        for (long corner = 0; corner < corners; ++corner) {
            std::vector<int> c = cell;
            for (int i = 0; i < n; ++i) {
                c[static_cast<std::size_t>(i)] += static_cast<int>((corner >> i) & 1);
            }
            const auto col = values.col(lat.ravel(c));
            lo = lo.cwiseMin(col);
            hi = hi.cwiseMax(col);
        }
        if (!((lo.array() <= 0.0).all() && (hi.array() >= 0.0).all())) {
            continue;
        }
        std::vector<int> mid_lo = cell;
        Vec start = lattice_point(mid_lo) + 0.5 * box.width() / grid_per_axis;
        NewtonOutcome out = refine_zero(field, box, start, tol, fd_step);
        if (!out.converged) {
            ++report.unresolved_cells;
            continue;
        }
        if (!box.contains(out.point)) {
            continue;  // a zero outside the box
        }
        const bool seen = std::any_of(report.zeros.begin(), report.zeros.end(), [&](const DegreeZero& z) {
            return (z.point - out.point).cwiseAbs().maxCoeff() <= dedupe;
        });
        if (seen) {
            continue;
        }
        const Mat jac = finite_difference_jacobian(field, out.point, fd_step);
        const double det = jac.determinant();
        if (std::abs(det) < 1e-8 * scale) {
            throw Error(ErrorKind::Degeneracy,
                        std::string("non-hyperbolic zero (|det J| below threshold)") +
                            (n == 2 ? "; use the winding-2d method instead" : ""));
        }
        report.zeros.push_back({out.point, sign_of(det), det, out.residual});
    }
    // Deterministic order.
    std::sort(report.zeros.begin(), report.zeros.end(), [](const DegreeZero& a, const DegreeZero& b) {
        return std::lexicographical_compare(a.point.data(), a.point.data() + a.point.size(), b.point.data(),
                                            b.point.data() + b.point.size());
    });
    for (const auto& z : report.zeros) {
        report.degree += z.sign;
    }
    return report;
}

DegreeReport degree_auto(const FieldHandle& field, const Box& box, int grid_per_axis) {
    switch (box.dim()) {
        case 1: {
            auto scalar = [&](double p) {
                Vec v(1);
                v[0] = p;
                return field(v)[0];
            };
            return degree_1d(scalar, box.lower()[0], box.upper()[0], std::max(64, grid_per_axis));
        }
        case 2: return degree_2d_winding(field, box, std::max(1024, kMinBoundarySamples));
        default: return degree_nd_jacobian(field, box, grid_per_axis);
    }
}

}  // namespace tperiodic
