#include "tperiodic/integrator.hpp"

#include "hermite.hpp"
#include "tperiodic/error.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

namespace tperiodic {

Trajectory::Trajectory(History history, double step, int dim)
    : history_(std::move(history)), step_(step), dim_(dim) {
    if (!(step > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "trajectory step must be positive");
    }
    if (history_.dim() != dim) {
        throw Error(ErrorKind::InvalidParameter, "history dimension does not match the system");
    }
}

Eigen::Map<const Vec> Trajectory::node_state(std::size_t i) const {
    return Eigen::Map<const Vec>(states_.data() + i * static_cast<std::size_t>(dim_), dim_);
}

Eigen::Map<const Vec> Trajectory::node_slope(std::size_t i) const {
    return Eigen::Map<const Vec>(slopes_.data() + i * static_cast<std::size_t>(dim_), dim_);
}

void Trajectory::push_node(double t, VecIn state) {
    times_.push_back(t);
    states_.insert(states_.end(), state.data(), state.data() + dim_);
    slopes_.resize(states_.size(), 0.0);
}

void Trajectory::set_slope(std::size_t i, VecIn slope) {
    std::copy(slope.data(), slope.data() + dim_, slopes_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
}

Trajectory::Segment Trajectory::locate(double t) const {
    const std::size_t n = times_.size();
    const double tol = 1e-10 * step_;
    if (n == 0 || t > times_.back() + tol) {
        throw Error(ErrorKind::InvalidParameter,
                    "trajectory evaluated beyond its end at t = " + std::to_string(t));
    }
    const double s = t / step_;
    const double nearest = std::round(s);
    if (nearest >= 0.0 && nearest < static_cast<double>(n)) {
        const auto j = static_cast<std::size_t>(nearest);
        if (std::abs(t - times_[j]) <= tol) {
            return {j, 0.0, 0.0, true};
        }
    }
    if (std::abs(t - times_.back()) <= tol) {
        return {n - 1, 0.0, 0.0, true};
    }
    if (n < 2) {
        throw Error(ErrorKind::InvalidParameter, "trajectory has a single node");
    }
    auto j = static_cast<std::size_t>(std::max(0.0, std::floor(s)));
    j = std::min(j, n - 2);
    const double width = times_[j + 1] - times_[j];
    return {j, (t - times_[j]) / width, width, false};
}

void Trajectory::eval_into(double t, VecOut out) const {
    if (t < 0.0) {
        history_.eval_into(t, out);
        return;
    }
    const Segment seg = locate(t);
    if (seg.on_node) {
        out = node_state(seg.index);
        return;
    }
    detail::hermite_value(seg.u, seg.width, node_state(seg.index), node_slope(seg.index),
                          node_state(seg.index + 1), node_slope(seg.index + 1), out);
}

Vec Trajectory::eval(double t) const {
    Vec out(dim_);
    eval_into(t, out);
    return out;
}

Vec Trajectory::deriv(double t) const {
    if (t < 0.0) {
        return history_.deriv(t);
    }
    const Segment seg = locate(t);
    if (seg.on_node) {
        return node_slope(seg.index);
    }
    Vec out(dim_);
    detail::hermite_deriv(seg.u, seg.width, node_state(seg.index), node_slope(seg.index),
                          node_state(seg.index + 1), node_slope(seg.index + 1), out);
    return out;
}

void Trajectory::write_csv(std::ostream& out, int dim_x, int samples, bool include_history) const {
    if (samples < 2) {
        throw Error(ErrorKind::InvalidParameter, "CSV export needs at least 2 samples");
    }
    if (dim_x < 0 || dim_x > dim_) {
        throw Error(ErrorKind::InvalidParameter, "CSV export: dim_x out of range");
    }
    out << "t";
    for (int i = 1; i <= dim_x; ++i) out << ",x" << i;
    for (int i = 1; i <= dim_ - dim_x; ++i) out << ",y" << i;
    out << '\n';
    const double t0 = include_history ? -delay() : 0.0;
    const double t1 = t_end();
    char buf[32];
    Vec z(dim_);
    for (int i = 0; i < samples; ++i) {
        const double t = i + 1 == samples ? t1 : t0 + (t1 - t0) * i / (samples - 1);
        eval_into(t, z);
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << buf;
        for (int c = 0; c < dim_; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", z[c]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

namespace {

void check_state(const CoupledProblem& problem, const Vec& z, double t, double threshold) {
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > threshold) {
        throw Error(ErrorKind::Blowup, "solution norm exceeded " + std::to_string(threshold) + " at t = " +
                                           std::to_string(t));
    }
    if (problem.domain() && !problem.domain()->contains(z)) {
        throw Error(ErrorKind::DomainEscape, "solution left the declared domain at t = " + std::to_string(t));
    }
}

}  // namespace

Trajectory integrate_with_delay(const CoupledProblem& problem, double delay, double lambda, double mu,
                                const History& init, double t_end, const IntegratorOptions& options) {
    if (!(lambda >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "lambda must be nonnegative");
    }
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "mu must lie in [0, 1]");
    }
    if (!(t_end > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "t_end must be positive");
    }
    if (options.steps_per_delay < 8) {
        throw Error(ErrorKind::InvalidParameter, "steps_per_delay must be >= 8");
    }
    if (!(delay > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "delay must be positive");
    }
    const int n = problem.dim();
    const int k = problem.dim_x();
    const int s = problem.dim_y();
    if (init.dim() != n) {
        throw Error(ErrorKind::InvalidParameter, "initial history has the wrong dimension");
    }
    if (std::abs(init.span() - delay) > 1e-12 * delay) {
        throw Error(ErrorKind::InvalidParameter, "initial history must cover exactly [-r, 0]");
    }

    const double h = delay / options.steps_per_delay;
    Trajectory traj(init, h, n);

    std::optional<AveragedFieldCache> local_cache;
    AveragedFieldCache* cache = options.cache;
    const bool homotopy = lambda > 0.0 && mu < 1.0 && k > 0;
    if (homotopy && cache == nullptr) {
        local_cache.emplace(problem, options.n_quad);
        cache = &*local_cache;
    }
    const double avg = problem.average_a();

    Vec zd(n), fx(k), wx(k), acc(k), gy(s), hy(s);
    auto rhs = [&](double t, const Vec& z, Vec& out) {
        traj.eval_into(t - delay, zd);
        const auto x = z.head(k);
        const auto y = z.tail(s);
        const auto xd = zd.head(k);
        const auto yd = zd.tail(s);
        const double at = problem.a()(t);
        if (k > 0) {
            if (lambda == 0.0) {
                out.head(k).setZero();
            } else {
                acc.setZero();
                if (mu > 0.0) {
                    problem.eval_f(t, x, y, xd, yd, fx);
                    acc += mu * fx;
                }
                if (mu < 1.0) {
                    cache->lookup(x, y, wx);
                    acc += (1.0 - mu) * (at / avg) * wx;
                }
                out.head(k) = lambda * acc;
            }
        }
        problem.eval_g(x, y, gy);
        out.tail(s) = at * gy;
        if (lambda != 0.0 && mu != 0.0 && problem.has_h()) {
            problem.eval_h(t, x, y, xd, yd, hy);
            out.tail(s) += (lambda * mu) * hy;
        }
    };

    // Full steps of width h, then at most one shorter step to land on t_end.
    const auto n_full = static_cast<std::size_t>(std::floor(t_end / h + 1e-9));
    const double remainder = t_end - static_cast<double>(n_full) * h;
    const bool partial = remainder > 1e-9 * h;
    const std::size_t n_steps = n_full + (partial ? 1 : 0);

    Vec z = init.eval(0.0);
    check_state(problem, z, 0.0, options.blowup_threshold);
    traj.push_node(0.0, z);
    Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = traj.node_time(i);
        const bool last = i + 1 == n_steps;
        const double t_next = last ? t_end : static_cast<double>(i + 1) * h;
        const double width = t_next - t;
        rhs(t, z, k1);
        traj.set_slope(i, k1);
        tmp = z + (0.5 * width) * k1;
        rhs(t + 0.5 * width, tmp, k2);
        tmp = z + (0.5 * width) * k2;
        rhs(t + 0.5 * width, tmp, k3);
        tmp = z + width * k3;
        rhs(t_next, tmp, k4);
        z += (width / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_state(problem, z, t_next, options.blowup_threshold);
        traj.push_node(t_next, z);
    }
    rhs(traj.t_end(), z, k1);
    traj.set_slope(traj.node_count() - 1, k1);
    return traj;
}

Trajectory integrate(const CoupledProblem& problem, double lambda, double mu, const History& init, double t_end,
                     const IntegratorOptions& options) {
    return integrate_with_delay(problem, problem.delay(), lambda, mu, init, t_end, options);
}

Trajectory integrate(const CoupledProblem& problem, double lambda, double mu, const History& init, double t_end,
                     int steps_per_delay) {
    IntegratorOptions options;
    options.steps_per_delay = steps_per_delay;
    return integrate(problem, lambda, mu, init, t_end, options);
}

namespace {

template <typename Coefficient>
Vec flow(const CoupledProblem& problem, VecIn point, double t, int steps, Coefficient coeff) {
    if (point.size() != problem.dim()) {
        throw Error(ErrorKind::InvalidParameter, "flow: point has the wrong dimension");
    }
    if (!(t >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "flow: time must be nonnegative");
    }
    if (steps < 1) {
        throw Error(ErrorKind::InvalidParameter, "flow: need at least one step");
    }
    const int k = problem.dim_x();
    const int s = problem.dim_y();
    Vec z = point;
    if (t == 0.0) {
        return z;
    }
    Vec gy(s);
    auto rhs = [&](double tau, const Vec& state, Vec& out) {
        out.head(k).setZero();
        problem.eval_g(state.head(k), state.tail(s), gy);
        out.tail(s) = coeff(tau) * gy;
    };
    const double h = t / steps;
    Vec k1(z.size()), k2(z.size()), k3(z.size()), k4(z.size()), tmp(z.size());
    for (int i = 0; i < steps; ++i) {
        const double tau = i * h;
        rhs(tau, z, k1);
        tmp = z + 0.5 * h * k1;
        rhs(tau + 0.5 * h, tmp, k2);
        tmp = z + 0.5 * h * k2;
        rhs(tau + 0.5 * h, tmp, k3);
        tmp = z + h * k3;
        rhs(tau + h, tmp, k4);
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowupThreshold) {
            throw Error(ErrorKind::Blowup, "flow escaped to infinity before t = " + std::to_string(t));
        }
    }
    return z;
}

}  // namespace

Vec flow_unperturbed(const CoupledProblem& problem, VecIn point, double t, int steps) {
    return flow(problem, point, t, steps, [&](double tau) { return problem.a()(tau); });
}

Vec flow_averaged(const CoupledProblem& problem, VecIn point, double t, int steps) {
    const double avg = problem.average_a();
    return flow(problem, point, t, steps, [avg](double) { return avg; });
}

}  // namespace tperiodic
