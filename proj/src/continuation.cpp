#include "tperiodic/continuation.hpp"

#include "tperiodic/degree.hpp"
#include "tperiodic/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace tperiodic {

const char* to_string(Termination termination) noexcept {
    switch (termination) {
        case Termination::ReachedLambdaMax: return "reached_lambda_max";
        case Termination::NormBlowup: return "norm_blowup";
        case Termination::NewtonFailure: return "newton_failure";
        case Termination::LeftDomain: return "left_domain";
        case Termination::ClosedLoop: return "closed_loop";
        case Termination::MaxPoints: return "max_points";
    }
    return "unknown";
}

void ContinuationConfig::validate() const {
    if (!(h0 > 0.0 && h_min > 0.0 && h_max > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "continuation steps must be positive");
    }
    if (!(h_min <= h0 && h0 <= h_max)) {
        throw Error(ErrorKind::InvalidParameter, "continuation steps must satisfy h_min <= h0 <= h_max");
    }
    if (max_points < 1) {
        throw Error(ErrorKind::InvalidParameter, "max_points must be positive");
    }
    if (!(norm_threshold > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "norm_threshold must be positive");
    }
    translation.validate();
}

void to_json(nlohmann::json& j, const ContinuationConfig& cfg) {
    j = nlohmann::json{{"h0", cfg.h0},
                       {"h_min", cfg.h_min},
                       {"h_max", cfg.h_max},
                       {"max_points", cfg.max_points},
                       {"norm_threshold", cfg.norm_threshold},
                       {"fast_iterations", cfg.fast_iterations},
                       {"translation", cfg.translation}};
    if (cfg.domain) {
        const auto& b = *cfg.domain;
        j["domain"] = {{"lower", std::vector<double>(b.lower().data(), b.lower().data() + b.dim())},
                       {"upper", std::vector<double>(b.upper().data(), b.upper().data() + b.dim())}};
    }
}

double distance_to_trivial(const FieldHandle& nu, const History& history, const Vec& origin) {
    double best = history.sup_distance_to_constant(origin);
    const Mat& v = history.values();
    Vec z = 0.5 * (v.colwise().maxCoeff() + v.colwise().minCoeff()).transpose();
    const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
    bool converged = false;
    try {
        for (int it = 0; it < 50; ++it) {
            const Vec fz = nu(z);
            if (fz.cwiseAbs().maxCoeff() <= 1e-12) {
                converged = true;
                break;
            }
            const Mat jac = finite_difference_jacobian(nu, z, 1e-6 * scale);
            const Vec dz = jac.completeOrthogonalDecomposition().solve(fz);
            if (!dz.allFinite()) {
                break;
            }
            z -= dz;
            if (dz.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
                converged = nu(z).cwiseAbs().maxCoeff() <= 1e-8;
                break;
            }
        }
    } catch (const Error&) {
        converged = false;
    }
    if (converged && z.allFinite()) {
        best = std::min(best, history.sup_distance_to_constant(z));
    }
    return best;
}

namespace {

bool inside_domain(const std::optional<Box>& domain, const History& h) {
    if (!domain) {
        return true;
    }
    const Mat& v = h.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        if (!domain->contains(v.row(i).transpose())) {
            return false;
        }
    }
    return true;
}

Termination classify(const std::optional<ErrorKind>& kind) {
    if (kind == ErrorKind::DomainEscape) {
        return Termination::LeftDomain;
    }
    if (kind == ErrorKind::Blowup) {
        return Termination::NormBlowup;
    }
    return Termination::NewtonFailure;
}

}  // namespace

Branch continue_branch(const CoupledProblem& problem, const Vec& origin, double lambda_max,
                       const ContinuationConfig& cfg) {
    cfg.validate();
    const int n = problem.dim();
    if (origin.size() != n) {
        throw Error(ErrorKind::InvalidParameter, "origin has the wrong dimension");
    }
    if (!(lambda_max >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "lambda_max must be nonnegative");
    }
    const FieldHandle nu = nu_field(problem, cfg.translation.n_quad);
    const double nu_origin = nu(origin).cwiseAbs().maxCoeff();
    if (nu_origin > kOriginTolerance) {
        throw Error(ErrorKind::InvalidParameter, "origin is not a zero of nu (|nu| = " + std::to_string(nu_origin) + ")");
    }

    Branch branch;
    branch.origin = origin;
    try {
        const Box small((origin.array() - 0.1).matrix(), (origin.array() + 0.1).matrix());
        branch.origin_degree = degree_auto(negate(nu), small).degree;
        if (branch.origin_degree == 0) {
            branch.warnings.emplace_back("deg(-nu) vanishes on a small box around the origin");
        }
    } catch (const Error& e) {
        branch.warnings.emplace_back(std::string("local degree unavailable: ") + e.what());
    }

    const TranslationConfig& tcfg = cfg.translation;
    const double r = problem.delay();
    Translator translator(problem, 0.0, 1.0, tcfg);

    BranchPoint first{.lambda = 0.0, .history = History::constant(r, tcfg.m, origin)};
    first.residual = translator.residual(first.history.flatten()).cwiseAbs().maxCoeff();
    first.sup_norm = first.history.sup_norm();
    first.min_dist_to_trivial = 0.0;
    branch.points.push_back(first);

    if (lambda_max == 0.0) {
        branch.termination = Termination::ReachedLambdaMax;
        return branch;
    }

    double h = cfg.h0;
    Vec u = first.history.flatten();
    Vec u_prev;
    double lambda = 0.0;
    double lambda_prev = 0.0;
    while (true) {
        if (static_cast<int>(branch.points.size()) >= cfg.max_points) {
            branch.termination = Termination::MaxPoints;
            return branch;
        }
        const double target = std::min(lambda + h, lambda_max);
        const double dl = target - lambda;
        Vec guess = u;
        if (u_prev.size() == u.size() && lambda > lambda_prev) {
            guess += (u - u_prev) * (dl / (lambda - lambda_prev));
        }
        translator.set_lambda(target);
        NewtonOutcome out = solve_fixed_point(translator, std::move(guess), false);
        bool ok = out.converged;
        std::string reason = out.failure;
        History hist = ok ? translator.to_history(out.u) : History::constant(r, tcfg.m, origin);
        if (ok) {
            const double jump = std::max(dl, (out.u - u).cwiseAbs().maxCoeff());
            if (jump > 2.0 * h) {
                ok = false;
                reason = "corrector jumped farther than twice the step";
            }
        }
        if (!ok) {
            if (branch.points.size() == 1) {
                branch.termination = Termination::NewtonFailure;
                branch.message = "first corrector step failed: " + reason;
                return branch;
            }
            h *= 0.5;
            if (h < cfg.h_min) {
                branch.termination = classify(out.failure_kind);
                branch.message = reason;
                return branch;
            }
            continue;
        }
        if (hist.sup_norm() > cfg.norm_threshold) {
            branch.termination = Termination::NormBlowup;
            branch.message = "history sup norm exceeded the threshold";
            return branch;
        }
        if (!inside_domain(cfg.domain, hist)) {
            branch.termination = Termination::LeftDomain;
            branch.message = "history left the declared domain";
            return branch;
        }
        const double dist = distance_to_trivial(nu, hist, origin);
        const double norm = hist.sup_norm();
        BranchPoint pt{.lambda = target,
                       .history = std::move(hist),
                       .residual = out.residual,
                       .sup_norm = norm,
                       .min_dist_to_trivial = dist,
                       .iterations = out.iterations,
                       .step = dl};
        branch.points.push_back(std::move(pt));

        u_prev = std::move(u);
        u = std::move(out.u);
        lambda_prev = lambda;
        lambda = target;
        if (lambda >= lambda_max) {
            branch.termination = Termination::ReachedLambdaMax;
            return branch;
        }
        if (out.iterations <= cfg.fast_iterations) {
            h = std::min(2.0 * h, cfg.h_max);
        }
    }
}

std::vector<TPair> branch_to_pairs(const CoupledProblem& problem, const Branch& branch, int component,
                                   const TranslationConfig& cfg, int samples) {
    if (branch.points.empty()) {
        throw Error(ErrorKind::InvalidParameter, "branch is empty");
    }
    if (component < 0 || component >= problem.dim()) {
        throw Error(ErrorKind::InvalidParameter, "component index out of range");
    }
    if (samples < 2) {
        throw Error(ErrorKind::InvalidParameter, "samples must be >= 2");
    }
    const double T = problem.period();
    std::vector<TPair> pairs;
    pairs.reserve(branch.points.size());
    for (const auto& pt : branch.points) {
        const Translator translator(problem, pt.lambda, 1.0, cfg);
        const Trajectory traj = translator.trajectory(pt.history, T);
        TPair pair;
        pair.lambda = pt.lambda;
        for (int i = 0; i <= samples; ++i) {
            const double t = i == samples ? T : T * i / samples;
            pair.times.push_back(t);
            pair.values.push_back(traj.eval(t)[component]);
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

History extrapolate_to_zero(const Branch& branch) {
    std::vector<const BranchPoint*> pts;
    for (const auto& p : branch.points) {
        if (p.lambda > 0.0) {
            pts.push_back(&p);
            if (pts.size() == 3) break;
        }
    }
    if (pts.size() < 3) {
        throw Error(ErrorKind::InvalidParameter, "extrapolation needs three points with lambda > 0");
    }
    const double l0 = pts[0]->lambda, l1 = pts[1]->lambda, l2 = pts[2]->lambda;
    // Lagrange weights at lambda = 0.
    const double w0 = (l1 * l2) / ((l0 - l1) * (l0 - l2));
    const double w1 = (l0 * l2) / ((l1 - l0) * (l1 - l2));
    const double w2 = (l0 * l1) / ((l2 - l0) * (l2 - l1));
    Mat values = w0 * pts[0]->history.values() + w1 * pts[1]->history.values() + w2 * pts[2]->history.values();
    return History::from_values(pts[0]->history.span(), std::move(values));
}

void write_branch_csv(std::ostream& out, const Branch& branch) {
    const std::size_t width = branch.points.empty() ? 0 : static_cast<std::size_t>(branch.points.front().history.values().size());
    out << "lambda,residual,sup_norm,min_dist_to_trivial";
    for (std::size_t i = 0; i < width; ++i) {
        out << ",u" << i;
    }
    out << '\n';
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (const auto& p : branch.points) {
        put(p.lambda);
        for (double v : {p.residual, p.sup_norm, p.min_dist_to_trivial}) {
            out << ',';
            put(v);
        }
        const Vec flat = p.history.flatten();
        for (Eigen::Index i = 0; i < flat.size(); ++i) {
            out << ',';
            put(flat[i]);
        }
        out << '\n';
    }
}

void to_json(nlohmann::json& j, const Branch& branch) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : branch.points) {
        points.push_back({{"lambda", p.lambda},
                          {"residual", p.residual},
                          {"sup_norm", p.sup_norm},
                          {"min_dist_to_trivial", p.min_dist_to_trivial},
                          {"iterations", p.iterations},
                          {"step", p.step}});
    }
    j = nlohmann::json{{"origin", std::vector<double>(branch.origin.data(), branch.origin.data() + branch.origin.size())},
                       {"termination", to_string(branch.termination)},
                       {"message", branch.message},
                       {"warnings", branch.warnings},
                       {"origin_degree", branch.origin_degree},
                       {"point_count", branch.points.size()},
                       {"lambda_reached", branch.points.empty() ? 0.0 : branch.points.back().lambda},
                       {"points", std::move(points)}};
}

}  // namespace tperiodic
