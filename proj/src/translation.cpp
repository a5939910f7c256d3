#include "tperiodic/translation.hpp"

#include "tperiodic/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tperiodic {

void TranslationConfig::validate() const {
    if (m < History::kMinNodes) {
        throw Error(ErrorKind::InvalidParameter, "translation needs m >= 8");
    }
    if (steps_per_delay < 8) {
        throw Error(ErrorKind::InvalidParameter, "steps_per_delay must be >= 8");
    }
    if (!(newton_tol > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "newton_tol must be positive");
    }
    if (newton_max_iter < 1) {
        throw Error(ErrorKind::InvalidParameter, "newton_max_iter must be positive");
    }
    if (!(fd_step > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "fd_step must be positive");
    }
    check_quadrature_nodes(n_quad);
}

void to_json(nlohmann::json& j, const TranslationConfig& cfg) {
    j = nlohmann::json{{"m", cfg.m},
                       {"steps_per_delay", cfg.steps_per_delay},
                       {"newton_tol", cfg.newton_tol},
                       {"newton_max_iter", cfg.newton_max_iter},
                       {"fd_step", cfg.fd_step},
                       {"n_quad", cfg.n_quad}};
}

Translator::Translator(const CoupledProblem& problem, double lambda, double mu, TranslationConfig cfg)
    : problem_(problem), lambda_(lambda), mu_(mu), cfg_(cfg) {
    cfg_.validate();
    if (!(lambda >= 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "lambda must be nonnegative");
    }
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "mu must lie in [0, 1]");
    }
    if (mu < 1.0 && problem.dim_x() > 0) {
        cache_ = std::make_unique<AveragedFieldCache>(problem, cfg_.n_quad);
    }
}

Trajectory Translator::trajectory(const History& init, double t_end) const {
    IntegratorOptions options;
    options.steps_per_delay = cfg_.steps_per_delay;
    options.n_quad = cfg_.n_quad;
    options.cache = cache_.get();
    return integrate(problem_, lambda_, mu_, init, t_end, options);
}

History Translator::translate(const History& init) const {
    if (init.m() != cfg_.m) {
        throw Error(ErrorKind::InvalidParameter, "history node count differs from the configured m");
    }
    const double T = problem_.period();
    const double r = problem_.delay();
    const Trajectory traj = trajectory(init, T);
    Mat values(cfg_.m + 1, problem_.dim());
    Vec row(problem_.dim());
    for (int i = 0; i <= cfg_.m; ++i) {
        const double t = i == cfg_.m ? T : T - r + r * i / cfg_.m;
        traj.eval_into(t, row);
        values.row(i) = row.transpose();
    }
    return History::from_values(r, std::move(values));
}

History Translator::to_history(const Vec& u) const {
    return History::unflatten(problem_.delay(), cfg_.m, problem_.dim(), u);
}

Vec Translator::apply(const Vec& u) const { return translate(to_history(u)).flatten(); }

Vec Translator::residual(const Vec& u) const { return apply(u) - u; }

Mat Translator::derivative(const Vec& u, const Vec& qu) const {
    const auto n = u.size();
    Mat dq(n, n);
    Vec probe = u;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double step = cfg_.fd_step * std::max(1.0, std::abs(u[j]));
        probe[j] = u[j] + step;
        dq.col(j) = (apply(probe) - qu) / step;
        probe[j] = u[j];
    }
    return dq;
}

History translate(const CoupledProblem& problem, double lambda, double mu, const History& init,
                  const TranslationConfig& cfg) {
    return Translator(problem, lambda, mu, cfg).translate(init);
}

NewtonOutcome solve_fixed_point(const Translator& translator, Vec u0, bool want_derivative) {
    const auto& cfg = translator.config();
    NewtonOutcome out;
    out.u = std::move(u0);
    Vec qu;
    try {
        qu = translator.apply(out.u);
    } catch (const Error& e) {
        out.failure = e.what();
        out.failure_kind = e.kind();
        return out;
    }
    Vec res = qu - out.u;
    out.residual = res.cwiseAbs().maxCoeff();
    const auto n = out.u.size();
    const Mat eye = Mat::Identity(n, n);
    try {
        while (out.residual > cfg.newton_tol) {
            if (out.iterations >= cfg.newton_max_iter) {
                out.failure = "Newton iteration limit reached";
                return out;
            }
            ++out.iterations;
            const Mat jac = translator.derivative(out.u, qu) - eye;
            Eigen::PartialPivLU<Mat> lu(jac);
            const Vec du = lu.solve(-res);
            if (!du.allFinite()) {
                out.failure = "singular Newton system";
                return out;
            }
            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 20 && !accepted; ++ls, alpha *= 0.5) {
                Vec trial = out.u + alpha * du;
                Vec q_trial;
                try {
                    q_trial = translator.apply(trial);
                } catch (const Error& e) {
                    out.failure_kind = e.kind();
                    continue;  // trial step left the admissible set
                }
                Vec r_trial = q_trial - trial;
                const double norm = r_trial.cwiseAbs().maxCoeff();
                if (std::isfinite(norm) && norm < (1.0 - 1e-4 * alpha) * out.residual) {
                    out.u = std::move(trial);
                    qu = std::move(q_trial);
                    res = std::move(r_trial);
                    out.residual = norm;
                    accepted = true;
                }
            }
            if (!accepted) {
                out.failure = "line search failed to reduce the residual";
                return out;
            }
        }
        out.converged = true;
        if (want_derivative) {
            out.dq = translator.derivative(out.u, qu);
        }
    } catch (const Error& e) {
        out.failure = e.what();
        out.failure_kind = e.kind();
        out.converged = false;
    }
    return out;
}

void to_json(nlohmann::json& j, const FixedPointRecord& record) {
    const Mat& v = record.history.values();
    nlohmann::json values = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            row.push_back(v(i, c));
        }
        values.push_back(std::move(row));
    }
    j = nlohmann::json{{"residual", record.residual},
                       {"eigen_margin", record.eigen_margin},
                       {"iterations", record.iterations},
                       {"sup_norm", record.history.sup_norm()},
                       {"history", std::move(values)}};
    if (record.index) {
        j["index"] = *record.index;
    } else {
        j["index"] = nullptr;
        j["degenerate"] = true;
    }
}

namespace {

FixedPointRecord make_record(const Translator& translator, const NewtonOutcome& outcome) {
    FixedPointRecord rec{translator.to_history(outcome.u), outcome.residual, std::nullopt, 0.0, outcome.iterations};
    const Mat& dq = *outcome.dq;
    const auto n = dq.rows();
    const Mat i_minus = Mat::Identity(n, n) - dq;
    Eigen::EigenSolver<Mat> es(dq, false);
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        margin = std::min(margin, std::abs(1.0 - es.eigenvalues()[i]));
    }
    rec.eigen_margin = margin;
    if (margin >= kEigenMarginFloor) {
        const double det = Eigen::PartialPivLU<Mat>(i_minus).determinant();
        if (det != 0.0 && std::isfinite(det)) {
            rec.index = det > 0.0 ? 1 : -1;
        }
    }
    return rec;
}

bool history_less(const History& a, const History& b) {
    const Vec fa = a.flatten();
    const Vec fb = b.flatten();
    return std::lexicographical_compare(fa.data(), fa.data() + fa.size(), fb.data(), fb.data() + fb.size());
}

}  // namespace

FixedPointSearch find_fixed_points(const CoupledProblem& problem, double lambda, const std::vector<History>& seeds,
                                   const TranslationConfig& cfg, double mu) {
    const Translator translator(problem, lambda, mu, cfg);
    FixedPointSearch search;
    std::vector<FixedPointRecord> found;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const History& seed = seeds[s];
        if (seed.dim() != problem.dim() || seed.m() != cfg.m) {
            throw Error(ErrorKind::InvalidParameter, "seed history has the wrong shape");
        }
        NewtonOutcome outcome = solve_fixed_point(translator, seed.flatten(), true);
        if (!outcome.converged) {
            search.failures.push_back({s, outcome.failure});
            continue;
        }
        found.push_back(make_record(translator, outcome));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const FixedPointRecord& a, const FixedPointRecord& b) { return history_less(a.history, b.history); });
    for (auto& rec : found) {
        const bool seen = std::any_of(search.records.begin(), search.records.end(), [&](const FixedPointRecord& r) {
            return r.history.sup_distance(rec.history) <= kDuplicateDistance;
        });
        if (!seen) {
            search.records.push_back(std::move(rec));
        }
    }
    return search;
}

void to_json(nlohmann::json& j, const IndexReport& report) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"seed", f.seed}, {"message", f.message}});
    }
    j = nlohmann::json{{"lhs_sum", report.lhs_sum},
                       {"rhs", report.rhs},
                       {"pass", report.pass},
                       {"lambda", report.lambda},
                       {"m", report.m},
                       {"degree", report.degree},
                       {"fixed_points", report.records},
                       {"seed_count", report.seed_count},
                       {"outside_box", report.outside},
                       {"seed_failures", std::move(failures)}};
}

IndexReport verify_index_identity(const CoupledProblem& problem, double lambda, const Box& box,
                                  const TranslationConfig& cfg, int seeds_per_axis) {
    cfg.validate();
    const int n = problem.dim();
    if (box.dim() != n) {
        throw Error(ErrorKind::InvalidParameter, "box dimension differs from the state dimension");
    }
    if (seeds_per_axis < 1) {
        throw Error(ErrorKind::InvalidParameter, "seeds_per_axis must be positive");
    }
    IndexReport report;
    report.lambda = lambda;
    report.m = cfg.m;

    const FieldHandle nu = nu_field(problem, cfg.n_quad);
    report.degree = degree_auto(negate(nu), box);
    const int sign_avg = problem.average_a() > 0.0 ? 1 : -1;
    const int power = problem.dim_y() % 2 == 0 ? 1 : sign_avg;
    report.rhs = power * report.degree.degree;

    const double r = problem.delay();
    std::vector<History> seeds;
    std::vector<Vec> zero_points;
    for (const auto& z : report.degree.zeros) {
        zero_points.push_back(z.point);
    }
    if (zero_points.empty()) {
        try {
            for (const auto& z : degree_nd_jacobian(nu, box).zeros) {
                zero_points.push_back(z.point);
            }
        } catch (const Error&) {
            // Lattice seeds still cover the box.
        }
    }
    for (const auto& p : zero_points) {
        seeds.push_back(History::constant(r, cfg.m, p));
    }
    long lattice = 1;
    for (int i = 0; i < n; ++i) lattice *= seeds_per_axis;
    for (long idx = 0; idx < lattice; ++idx) {
        Vec p(n);
        long rest = idx;
        for (int i = 0; i < n; ++i) {
            const long c = rest % seeds_per_axis;
            rest /= seeds_per_axis;
            p[i] = box.lower()[i] + box.width()[i] * (static_cast<double>(c) + 0.5) / seeds_per_axis;
        }
        seeds.push_back(History::constant(r, cfg.m, p));
    }
    report.seed_count = seeds.size();

    FixedPointSearch search = find_fixed_points(problem, lambda, seeds, cfg);
    report.failures = std::move(search.failures);
    for (auto& rec : search.records) {
        const Mat& v = rec.history.values();
        bool inside = true;
        for (Eigen::Index i = 0; i < v.rows() && inside; ++i) {
            inside = box.contains_strictly(v.row(i).transpose());
        }
        if (!inside) {
            ++report.outside;
            continue;
        }
        if (!rec.index) {
            throw Error(ErrorKind::Degeneracy, "a fixed point in the box is degenerate; its index is undefined");
        }
        report.lhs_sum += *rec.index;
        report.records.push_back(std::move(rec));
    }
    report.pass = report.lhs_sum == report.rhs;
    return report;
}

}  // namespace tperiodic
