#include "commands.hpp"

#include "config.hpp"
#include "tperiodic/continuation.hpp"
#include "tperiodic/degree.hpp"
#include "tperiodic/error.hpp"
#include "tperiodic/integrator.hpp"
#include "tperiodic/sigma_lienard.hpp"
#include "tperiodic/translation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

namespace tperiodic::cli {

namespace {

namespace fs = std::filesystem;

const std::set<std::string> kTopLevel{"description", "problem",      "numerics", "integrate",
                                      "degree",      "sigma",        "verify_index", "branch"};

void check_top_level(const json& config) {
    for (const auto& item : config.items()) {
        if (!kTopLevel.contains(item.key())) {
            throw Error(ErrorKind::Config, item.key() + ": unknown key");
        }
    }
}

const json& block(const json& config, const std::string& name) {
    static const json empty = json::object();
    return config.contains(name) ? config.at(name) : empty;
}

void ensure_finite(const json& j, const std::string& path) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) {
        throw Error(ErrorKind::Consistency, "non-finite value in report at " + path);
    }
    if (j.is_object()) {
        for (const auto& item : j.items()) ensure_finite(item.value(), path + "." + item.key());
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) ensure_finite(j[i], path + "[" + std::to_string(i) + "]");
    }
}

fs::path output_path(const CommandOptions& options, const std::string& name) {
    fs::path dir(options.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Config, "cannot create output directory " + options.out_dir);
    }
    return dir / name;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
    return out;
}

std::string write_json(const CommandOptions& options, const std::string& name, const json& report) {
    ensure_finite(report, "report");
    const fs::path path = output_path(options, name);
    auto out = open_output(path);
    out << report.dump(2) << '\n';
    return path.string();
}

LoadedProblem require_problem(const json& config, const Numerics& numerics) {
    if (!config.contains("problem")) {
        throw Error(ErrorKind::Config, "problem: required block is missing");
    }
    return load_problem(config.at("problem"), numerics.n_quad);
}

double lambda_from(ObjectReader& r, const std::string& key, const LoadedProblem& lp) {
    double lambda = 0.0;
    if (r.has(key)) {
        lambda = r.number(key);
    } else if (lp.preset_lambda) {
        lambda = *lp.preset_lambda;
    } else {
        lambda = r.number(key);  // raises the missing-key error
    }
    if (!(lambda >= 0.0)) {
        throw Error(ErrorKind::Config, r.child_path(key) + ": must be nonnegative");
    }
    return lambda;
}

History read_history(ObjectReader& r, const CoupledProblem& problem, int m, json& resolved) {
    const int n = problem.dim();
    const double span = problem.delay();
    if (!r.has("history")) {
        resolved["history"] = {{"constant", std::vector<double>(static_cast<std::size_t>(n), 0.0)}};
        return History::constant(span, m, Vec::Zero(n));
    }
    ObjectReader h(r.get("history"), r.child_path("history"));
    if (h.has("constant")) {
        const auto c = h.numbers("constant");
        h.finish();
        if (static_cast<int>(c.size()) != n) {
            throw Error(ErrorKind::Config, h.child_path("constant") + ": needs one value per state component");
        }
        resolved["history"] = {{"constant", c}};
        return History::constant(span, m, Eigen::Map<const Vec>(c.data(), n));
    }
    const auto sources = h.strings("functions");
    h.finish();
    if (static_cast<int>(sources.size()) != n) {
        throw Error(ErrorKind::Config, h.child_path("functions") + ": needs one expression per state component");
    }
    std::vector<Expr> exprs;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        exprs.push_back(compile(sources[i], VariableSet{"theta"},
                                h.child_path("functions") + "[" + std::to_string(i) + "]"));
    }
    resolved["history"] = {{"functions", sources}};
    return History::from_function(span, m, [&](double theta) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = exprs[static_cast<std::size_t>(i)].evaluate(std::span<const double>(&theta, 1));
        return v;
    });
}

json cmd_integrate(const json& config, const CommandOptions& options) {
    const Numerics numerics = read_numerics(config);
    ObjectReader r(block(config, "integrate"), "integrate");
    LoadedProblem lp = require_problem(config, numerics);
    const CoupledProblem& problem = *lp.problem;
    json resolved;
    const double lambda = lambda_from(r, "lambda", lp);
    const double mu = r.number("mu", 1.0);
    const double t_end = r.number("t_end");
    const int samples = r.integer("samples", 1001);
    const bool include_history = r.boolean("include_history", true);
    History init = read_history(r, problem, std::max(numerics.m, History::kMinNodes), resolved);
    r.finish();
    if (samples < 2) {
        throw Error(ErrorKind::Config, "integrate.samples: must be >= 2");
    }
    resolved.update({{"lambda", lambda}, {"mu", mu}, {"t_end", t_end}, {"samples", samples},
                     {"include_history", include_history}});
    IntegratorOptions io;
    io.steps_per_delay = numerics.steps_per_delay;
    io.n_quad = numerics.n_quad;
    const Trajectory traj = integrate(problem, lambda, mu, init, t_end, io);
    const fs::path path = output_path(options, "trajectory.csv");
    auto out = open_output(path);
    traj.write_csv(out, problem.dim_x(), samples, include_history);
    return {{"command", "integrate"}, {"outputs", {path.string()}}, {"t_end", traj.t_end()},
            {"config", {{"problem", lp.resolved}, {"numerics", numerics}, {"integrate", resolved}}}};
}

json cmd_degree(const json& config, const CommandOptions& options) {
    const Numerics numerics = read_numerics(config);
    ObjectReader r(block(config, "degree"), "degree");
    const Box box = read_box(r.get("box"), r.child_path("box"));
    const int n = box.dim();
    const bool negate_field = r.boolean("negate", false);
    std::string method = r.has("method") ? r.string("method") : "auto";
    const int n_boundary = r.integer("n_boundary", 1024);
    const int grid = options.seed_grid.value_or(r.integer("grid_per_axis", 16));
    const double tol = r.number("tol", 1e-10);
    const int n_check = r.integer("n_check", 64);
    const json& field_spec = r.get("field");
    r.finish();

    json resolved{{"box", box_json(box)},     {"negate", negate_field}, {"method", method},
                  {"n_boundary", n_boundary}, {"grid_per_axis", grid},  {"tol", tol},
                  {"n_check", n_check}};
    std::optional<LoadedProblem> lp;
    FieldHandle field;
    if (field_spec.is_string() && field_spec.get<std::string>() == "nu") {
        lp = require_problem(config, numerics);
        if (lp->problem->dim() != n) {
            throw Error(ErrorKind::Config, "degree.box: dimension differs from the problem's state dimension");
        }
        field = nu_field(*lp->problem, numerics.n_quad);
        resolved["field"] = "nu";
    } else {
        if (!field_spec.is_array()) {
            throw Error(ErrorKind::Config, "degree.field: expected \"nu\" or an array of expressions");
        }
        const json holder{{"field", field_spec}};
        ObjectReader wrap(holder, "degree");
        const auto sources = wrap.strings("field");
        if (static_cast<int>(sources.size()) != n) {
            throw Error(ErrorKind::Config, "degree.field: needs one expression per box dimension");
        }
        const VariableSet vars = degree_variables(n);
        std::vector<Expr> exprs;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            exprs.push_back(compile(sources[i], vars, "degree.field[" + std::to_string(i) + "]"));
        }
        field = {n, [exprs = std::move(exprs)](const Vec& z) {
                     Vec out(static_cast<Eigen::Index>(exprs.size()));
                     const std::span<const double> slots(z.data(), static_cast<std::size_t>(z.size()));
                     for (std::size_t i = 0; i < exprs.size(); ++i) out[static_cast<Eigen::Index>(i)] = exprs[i].evaluate(slots);
                     return out;
                 }};
        resolved["field"] = sources;
    }
    if (negate_field) {
        field = negate(std::move(field));
    }
    if (method == "auto") {
        method = n == 1 ? "sign-1d" : n == 2 ? "winding-2d" : "jacobian-nd";
    }
    DegreeReport report;
    if (method == "sign-1d") {
        if (n != 1) throw Error(ErrorKind::Config, "degree.method: sign-1d needs a one-dimensional box");
        auto scalar = [&field](double p) { return field(Vec::Constant(1, p))[0]; };
        report = degree_1d(scalar, box.lower()[0], box.upper()[0], n_check);
    } else if (method == "winding-2d") {
        if (n != 2) throw Error(ErrorKind::Config, "degree.method: winding-2d needs a two-dimensional box");
        report = degree_2d_winding(field, box, n_boundary);
    } else if (method == "jacobian-nd") {
        report = degree_nd_jacobian(field, box, grid, tol);
    } else {
        throw Error(ErrorKind::Config, "degree.method: unknown method '" + method + "'");
    }
    json doc = report;
    json cfg{{"degree", resolved}, {"numerics", numerics}};
    if (lp) cfg["problem"] = lp->resolved;
    doc["config"] = cfg;
    const std::string path = write_json(options, "degree.json", doc);
    return {{"command", "degree"}, {"outputs", {path}}, {"degree", report.degree}};
}

json cmd_sigma(const json& config, const CommandOptions& options) {
    const Numerics numerics = read_numerics(config);
    ObjectReader r(block(config, "sigma"), "sigma");
    const int n_quad = r.integer("n_quad", kSigmaGridIntervals);
    const int n_check = r.integer("n_check", 512);
    json resolved{{"n_quad", n_quad}, {"n_check", n_check}};
    std::optional<PeriodicFn1D> a;
    if (r.has("a")) {
        const std::string src = r.string("a");
        const double period = r.number("period", 2.0 * std::numbers::pi);
        auto e = std::make_shared<const Expr>(compile(src, VariableSet{"t"}, "sigma.a"));
        a = PeriodicFn1D([e](double t) { return e->evaluate(std::span<const double>(&t, 1)); }, period);
        resolved["a"] = src;
        resolved["period"] = period;
    }
    r.finish();
    json problem_json;
    if (!a) {
        LoadedProblem lp = require_problem(config, numerics);
        if (!lp.sunflower_a) {
            throw Error(ErrorKind::Config, "sigma.a: required unless the problem uses a sunflower preset");
        }
        a = lp.sunflower_a;
        problem_json = lp.resolved;
    }
    const SigmaResult res = sigma_transform(*a, n_quad);
    const double residual = verify_sigma(*a, res.sigma, n_check);
    const fs::path csv = output_path(options, "sigma.csv");
    {
        auto out = open_output(csv);
        write_sigma_csv(out, res);
    }
    json doc{{"c0", res.c0},
             {"sign", res.sign},
             {"avg_sigma", res.avg_sigma},
             {"avg_inv_sigma", res.avg_inv_sigma},
             {"avg_a", res.avg_a},
             {"periodicity_gap", res.periodicity_gap},
             {"max_abs_sigma", res.max_abs_sigma},
             {"verify_residual", res.grid ? residual : 0.0}};
    json cfg{{"sigma", resolved}};
    if (!problem_json.is_null()) cfg["problem"] = problem_json;
    doc["config"] = cfg;
    const std::string path = write_json(options, "sigma.json", doc);
    return {{"command", "sigma"}, {"outputs", {csv.string(), path}}, {"avg_sigma", res.avg_sigma}};
}

json cmd_verify_index(const json& config, const CommandOptions& options) {
    const Numerics numerics = read_numerics(config);
    ObjectReader r(block(config, "verify_index"), "verify_index");
    LoadedProblem lp = require_problem(config, numerics);
    const double lambda = lambda_from(r, "lambda", lp);
    const Box box = read_box(r.get("box"), r.child_path("box"));
    const int seeds = options.seed_grid.value_or(r.integer("seeds_per_axis", 3));
    r.finish();
    if (box.dim() != lp.problem->dim()) {
        throw Error(ErrorKind::Config, "verify_index.box: dimension differs from the problem's state dimension");
    }
    const IndexReport report = verify_index_identity(*lp.problem, lambda, box, numerics.translation(), seeds);
    json doc = report;
    doc["config"] = {{"problem", lp.resolved},
                     {"numerics", numerics},
                     {"verify_index", {{"lambda", lambda}, {"box", box_json(box)}, {"seeds_per_axis", seeds}}}};
    const std::string path = write_json(options, "index.json", doc);
    return {{"command", "verify-index"}, {"outputs", {path}}, {"pass", report.pass}, {"lhs_sum", report.lhs_sum},
            {"rhs", report.rhs}};
}

json cmd_branch(const json& config, const CommandOptions& options) {
    const Numerics numerics = read_numerics(config);
    ObjectReader r(block(config, "branch"), "branch");
    LoadedProblem lp = require_problem(config, numerics);
    const auto origin_values = r.numbers("origin");
    const double lambda_max = lambda_from(r, "lambda_max", lp);
    ContinuationConfig cfg;
    cfg.h0 = r.number("h0", cfg.h0);
    cfg.h_min = r.number("h_min", cfg.h_min);
    cfg.h_max = r.number("h_max", cfg.h_max);
    cfg.max_points = r.integer("max_points", cfg.max_points);
    if (r.has("domain")) {
        cfg.domain = read_box(r.get("domain"), r.child_path("domain"));
    } else {
        cfg.domain = lp.problem->domain();
    }
    r.finish();
    cfg.translation = numerics.translation();
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string("branch: ") + e.what());
    }
    if (static_cast<int>(origin_values.size()) != lp.problem->dim()) {
        throw Error(ErrorKind::Config, "branch.origin: needs one value per state component");
    }
    const Vec origin = Eigen::Map<const Vec>(origin_values.data(), lp.problem->dim());
    const Branch branch = continue_branch(*lp.problem, origin, lambda_max, cfg);
    const fs::path csv = output_path(options, "branch.csv");
    {
        auto out = open_output(csv);
        write_branch_csv(out, branch);
    }
    json doc = branch;
    json resolved = cfg;
    resolved["origin"] = origin_values;
    resolved["lambda_max"] = lambda_max;
    doc["config"] = {{"problem", lp.resolved}, {"numerics", numerics}, {"branch", resolved}};
    const std::string path = write_json(options, "branch.json", doc);
    return {{"command", "branch"}, {"outputs", {csv.string(), path}}, {"termination", to_string(branch.termination)},
            {"points", branch.points.size()}};
}

}  // namespace

json run_command(const std::string& command, const json& config, const CommandOptions& options) {
    check_top_level(config);
    if (command == "integrate") return cmd_integrate(config, options);
    if (command == "degree") return cmd_degree(config, options);
    if (command == "sigma") return cmd_sigma(config, options);
    if (command == "verify-index") return cmd_verify_index(config, options);
    if (command == "branch") return cmd_branch(config, options);
    throw Error(ErrorKind::Config, "unknown command " + command);
}

int exit_code_for(const std::exception& error) noexcept {
    const auto* e = dynamic_cast<const Error*>(&error);
    if (e == nullptr) {
        return 3;
    }
    switch (e->kind()) {
        case ErrorKind::Config:
        case ErrorKind::InvalidParameter:
        case ErrorKind::ZeroAverage:
        case ErrorKind::Syntax:
        case ErrorKind::UnknownIdentifier:
        case ErrorKind::Arity:
            return 2;
        default:
            return 3;
    }
}

json error_json(const std::exception& error) {
    json inner{{"message", error.what()}};
    if (const auto* e = dynamic_cast<const Error*>(&error)) {
        inner["kind"] = to_string(e->kind());
        inner["offset"] = e->offset() ? json(*e->offset()) : json(nullptr);
    } else {
        inner["kind"] = "internal";
        inner["offset"] = nullptr;
    }
    return {{"error", inner}};
}

}  // namespace tperiodic::cli
