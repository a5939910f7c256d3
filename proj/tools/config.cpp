#include "config.hpp"

#include "tperiodic/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace tperiodic::cli {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
    throw Error(ErrorKind::Config, path + ": " + message);
}

}  // namespace

ObjectReader::ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
        config_error(path_, "expected an object");
    }
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

const json& ObjectReader::get(const std::string& key) {
    seen_.insert(key);
    if (!object_.contains(key)) {
        config_error(child_path(key), "required key is missing");
    }
    return object_.at(key);
}

double ObjectReader::number(const std::string& key) { return constant_value(get(key), child_path(key)); }

double ObjectReader::number(const std::string& key, double fallback) {
    seen_.insert(key);
    return has(key) ? constant_value(object_.at(key), child_path(key)) : fallback;
}

int ObjectReader::integer(const std::string& key, int fallback) {
    seen_.insert(key);
    if (!has(key)) {
        return fallback;
    }
    const json& v = object_.at(key);
    if (!v.is_number_integer()) {
        config_error(child_path(key), "expected an integer");
    }
    const auto value = v.get<long long>();
    if (value < -2147483647LL || value > 2147483647LL) {
        config_error(child_path(key), "integer out of range");
    }
    return static_cast<int>(value);
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) {
        return fallback;
    }
    if (!object_.at(key).is_boolean()) {
        config_error(child_path(key), "expected true or false");
    }
    return object_.at(key).get<bool>();
}

std::string ObjectReader::string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) {
        config_error(child_path(key), "expected a string");
    }
    return v.get<std::string>();
}

std::vector<double> ObjectReader::numbers(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) {
        config_error(child_path(key), "expected an array");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(constant_value(v[i], child_path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::string> ObjectReader::strings(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) {
        config_error(child_path(key), "expected an array of expressions");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) {
            config_error(child_path(key) + "[" + std::to_string(i) + "]", "expected an expression string");
        }
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

void ObjectReader::finish() const {
    for (const auto& item : object_.items()) {
        if (!seen_.contains(item.key())) {
            config_error(child_path(item.key()), "unknown key");
        }
    }
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
        json parsed = json::parse(text);
        if (!parsed.is_object()) {
            throw Error(ErrorKind::Config, "config root must be a JSON object");
        }
        return parsed;
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, std::string("invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
}

double constant_value(const json& value, const std::string& path) {
    if (value.is_number()) {
        const double v = value.get<double>();
        if (!std::isfinite(v)) {
            config_error(path, "number is not finite");
        }
        return v;
    }
    if (value.is_string()) {
        const Expr e = compile(value.get<std::string>(), VariableSet{}, path);
        return e.evaluate(std::span<const double>{});
    }
    config_error(path, "expected a number or a constant expression");
}

Expr compile(const std::string& source, const VariableSet& vars, const std::string& path) {
    try {
        return Expr::parse(source, vars);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what(), e.offset());
    }
}

TranslationConfig Numerics::translation() const {
    TranslationConfig cfg;
    cfg.m = m;
    cfg.steps_per_delay = steps_per_delay;
    cfg.newton_tol = newton_tol;
    cfg.newton_max_iter = newton_max_iter;
    cfg.fd_step = fd_step;
    cfg.n_quad = n_quad;
    return cfg;
}

Numerics read_numerics(const json& root) {
    Numerics n;
    if (!root.contains("numerics")) {
        return n;
    }
    ObjectReader r(root.at("numerics"), "numerics");
    n.n_quad = r.integer("n_quad", n.n_quad);
    n.steps_per_delay = r.integer("steps_per_delay", n.steps_per_delay);
    n.m = r.integer("m", n.m);
    n.newton_tol = r.number("newton_tol", n.newton_tol);
    n.newton_max_iter = r.integer("newton_max_iter", n.newton_max_iter);
    n.fd_step = r.number("fd_step", n.fd_step);
    r.finish();
    try {
        n.translation().validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string("numerics: ") + e.what());
    }
    return n;
}

void to_json(json& j, const Numerics& n) {
    j = json{{"n_quad", n.n_quad},         {"steps_per_delay", n.steps_per_delay}, {"m", n.m},
             {"newton_tol", n.newton_tol}, {"newton_max_iter", n.newton_max_iter}, {"fd_step", n.fd_step}};
}

Box read_box(const json& value, const std::string& path) {
    ObjectReader r(value, path);
    const auto lower = r.numbers("lower");
    const auto upper = r.numbers("upper");
    r.finish();
    if (lower.empty() || lower.size() != upper.size()) {
        config_error(path, "lower and upper must be nonempty and of equal length");
    }
    Vec lo = Eigen::Map<const Vec>(lower.data(), static_cast<Eigen::Index>(lower.size()));
    Vec hi = Eigen::Map<const Vec>(upper.data(), static_cast<Eigen::Index>(upper.size()));
    try {
        return Box(lo, hi);
    } catch (const Error& e) {
        config_error(path, e.what());
    }
}

json box_json(const Box& box) {
    return json{{"lower", std::vector<double>(box.lower().data(), box.lower().data() + box.dim())},
                {"upper", std::vector<double>(box.upper().data(), box.upper().data() + box.dim())}};
}

VariableSet degree_variables(int n) {
    VariableSet vars;
    for (int i = 0; i < n; ++i) {
        vars.add("x" + std::to_string(i + 1), i);
    }
    if (n == 1 || n == 2) {
        vars.add("p", 0);
    }
    if (n == 2) {
        vars.add("q", 1);
    }
    return vars;
}

namespace {

// Slot layout for delayed fields: t, x1..xk, y1..ys, xd1..xdk, yd1..yds.
VariableSet delay_variables(int k, int s, bool with_time, bool with_delayed) {
    VariableSet vars;
    int slot = 0;
    if (with_time) {
        vars.add("t", slot++);
    }
    auto block = [&](const std::string& base, int count) {
        for (int i = 0; i < count; ++i) {
            vars.add(base + std::to_string(i + 1), slot + i);
        }
        if (count == 1) {
            vars.add(base, slot);
        }
        slot += count;
    };
    block("x", k);
    block("y", s);
    if (with_delayed) {
        block("xd", k);
        block("yd", s);
    }
    return vars;
}

std::vector<Expr> compile_all(const std::vector<std::string>& sources, const VariableSet& vars,
                              const std::string& path) {
    std::vector<Expr> out;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        out.push_back(compile(sources[i], vars, path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

DelayField delay_field(std::vector<Expr> exprs, int k, int s) {
    return [exprs = std::move(exprs), k, s](double t, VecIn x, VecIn y, VecIn xd, VecIn yd, VecOut out) {
        std::vector<double> slots(static_cast<std::size_t>(1 + 2 * (k + s)));
        std::size_t i = 0;
        slots[i++] = t;
        for (int c = 0; c < k; ++c) slots[i++] = x[c];
        for (int c = 0; c < s; ++c) slots[i++] = y[c];
        for (int c = 0; c < k; ++c) slots[i++] = xd[c];
        for (int c = 0; c < s; ++c) slots[i++] = yd[c];
        for (std::size_t e = 0; e < exprs.size(); ++e) {
            out[static_cast<Eigen::Index>(e)] = exprs[e].evaluate(slots);
        }
    };
}

PeriodicFn1D time_function(const std::string& source, double period, const std::string& path) {
    auto e = std::make_shared<const Expr>(compile(source, VariableSet{"t"}, path));
    return PeriodicFn1D([e](double t) { return e->evaluate(std::span<const double>(&t, 1)); }, period);
}

std::optional<Box> read_domain(ObjectReader& r, int dim) {
    if (!r.has("domain")) {
        return std::nullopt;
    }
    Box box = read_box(r.get("domain"), r.child_path("domain"));
    if (box.dim() != dim) {
        config_error(r.child_path("domain"), "dimension differs from the state dimension");
    }
    return box;
}

LoadedProblem load_generic(ObjectReader& r, int n_quad) {
    LoadedProblem out;
    ProblemFields fields;
    fields.dim_x = r.integer("dim_x", 0);
    fields.dim_y = r.integer("dim_y", 1);
    const int k = fields.dim_x;
    const int s = fields.dim_y;
    if (k < 0 || s < 1) {
        config_error("problem", "dim_x must be >= 0 and dim_y >= 1");
    }
    const VariableSet dvars = delay_variables(k, s, true, true);
    const VariableSet gvars = delay_variables(k, s, false, false);
    std::vector<std::string> f_src, g_src, h_src;
    if (k > 0) {
        f_src = r.strings("f");
        if (static_cast<int>(f_src.size()) != k) {
            config_error(r.child_path("f"), "needs dim_x expressions");
        }
        fields.f = delay_field(compile_all(f_src, dvars, r.child_path("f")), k, s);
    } else if (r.has("f")) {
        if (!r.strings("f").empty()) {
            config_error(r.child_path("f"), "must be empty when dim_x = 0");
        }
    }
    g_src = r.strings("g");
    if (static_cast<int>(g_src.size()) != s) {
        config_error(r.child_path("g"), "needs dim_y expressions");
    }
    {
        auto exprs = compile_all(g_src, gvars, r.child_path("g"));
        fields.g = [exprs = std::move(exprs), k, s](VecIn x, VecIn y, VecOut o) {
            std::vector<double> slots(static_cast<std::size_t>(k + s));
            for (int c = 0; c < k; ++c) slots[static_cast<std::size_t>(c)] = x[c];
            for (int c = 0; c < s; ++c) slots[static_cast<std::size_t>(k + c)] = y[c];
            for (std::size_t e = 0; e < exprs.size(); ++e) o[static_cast<Eigen::Index>(e)] = exprs[e].evaluate(slots);
        };
    }
    if (r.has("h")) {
        h_src = r.strings("h");
        if (static_cast<int>(h_src.size()) != s) {
            config_error(r.child_path("h"), "needs dim_y expressions");
        }
        fields.h = delay_field(compile_all(h_src, dvars, r.child_path("h")), k, s);
    }
    fields.period = r.number("period");
    fields.delay = r.number("delay");
    const std::string a_src = r.string("a");
    fields.a = time_function(a_src, fields.period, r.child_path("a"));
    fields.domain = read_domain(r, k + s);
    out.resolved = json{{"dim_x", k}, {"dim_y", s}, {"f", f_src}, {"g", g_src}, {"h", h_src}, {"a", a_src},
                        {"period", fields.period}, {"delay", fields.delay}};
    if (fields.domain) {
        out.resolved["domain"] = box_json(*fields.domain);
    }
    out.problem = std::make_unique<CoupledProblem>(std::move(fields), n_quad);
    return out;
}

LoadedProblem build_sunflower(const PeriodicFn1D& a, ScalarForcing f, double delay, std::optional<Box> domain,
                              int n_quad) {
    LoadedProblem out;
    SigmaResult sigma = sigma_transform(a);
    ScalarDelayProblem sdp;
    sdp.f = std::move(f);
    sdp.G = [](double y) { return y; };
    sdp.g = [](double) { return 1.0; };
    sdp.period = a.period();
    sdp.delay = delay;
    out.problem = std::make_unique<CoupledProblem>(lienard_reduce(sdp, sigma.sigma, std::move(domain), n_quad));
    out.sunflower_a = a;
    out.sigma = std::move(sigma);
    return out;
}

LoadedProblem load_sunflower(ObjectReader& r, int n_quad) {
    const double period = r.number("period", 2.0 * std::numbers::pi);
    const double delay = r.number("delay");
    const std::string a_src = r.string("a");
    const std::string phi_src = r.string("phi");
    const PeriodicFn1D a = time_function(a_src, period, r.child_path("a"));
    VariableSet vars{"t", "y", "yd"};
    vars.add("y1", 1);
    vars.add("yd1", 2);
    auto phi = std::make_shared<const Expr>(compile(phi_src, vars, r.child_path("phi")));
    std::optional<Box> domain = read_domain(r, 2);
    LoadedProblem out = build_sunflower(
        a,
        [phi](double t, double y, double yd) {
            const double slots[3] = {t, y, yd};
            return phi->evaluate(slots);
        },
        delay, domain, n_quad);
    out.preset = "sunflower";
    out.resolved = json{{"preset", "sunflower"}, {"a", a_src}, {"phi", phi_src}, {"period", period}, {"delay", delay}};
    if (domain) {
        out.resolved["domain"] = box_json(*domain);
    }
    return out;
}

// y'' = -(alpha/r) y' - (beta/r) sin(y(t - r)).
LoadedProblem load_classic(ObjectReader& r, int n_quad) {
    const double alpha = r.number("alpha");
    const double beta = r.number("beta");
    const double delay = r.number("r");
    const double period = r.number("period", 2.0 * std::numbers::pi);
    if (!(delay > 0.0)) {
        config_error(r.child_path("r"), "delay must be positive");
    }
    if (alpha == 0.0) {
        config_error(r.child_path("alpha"), "alpha = 0 gives a zero-average coefficient");
    }
    std::optional<Box> domain = read_domain(r, 2);
    // lambda = -beta/r with phi = sin(yd); for beta > 0 the sign moves into phi.
    const double phi_sign = beta > 0.0 ? -1.0 : 1.0;
    const double lambda = std::abs(beta) / delay;
    const PeriodicFn1D a = PeriodicFn1D::constant(-alpha / delay, period);
    LoadedProblem out = build_sunflower(
        a, [phi_sign](double, double, double yd) { return phi_sign * std::sin(yd); }, delay, domain, n_quad);
    out.preset = "classic-sunflower";
    out.preset_lambda = lambda;
    out.resolved = json{{"preset", "classic-sunflower"},
                        {"alpha", alpha},
                        {"beta", beta},
                        {"r", delay},
                        {"period", period},
                        {"a", -alpha / delay},
                        {"phi", phi_sign > 0.0 ? "sin(yd)" : "-sin(yd)"},
                        {"lambda", lambda}};
    if (domain) {
        out.resolved["domain"] = box_json(*domain);
    }
    return out;
}

}  // namespace

LoadedProblem load_problem(const json& problem, int n_quad) {
    ObjectReader r(problem, "problem");
    // Key check before any computation.
    {
        std::set<std::string> allowed{"dim_x", "dim_y", "f", "g", "h", "a", "period", "delay", "domain"};
        if (problem.contains("preset") && problem.at("preset") == "sunflower") {
            allowed = {"preset", "a", "phi", "period", "delay", "domain"};
        } else if (problem.contains("preset") && problem.at("preset") == "classic-sunflower") {
            allowed = {"preset", "alpha", "beta", "r", "period", "domain"};
        } else if (problem.contains("preset")) {
            const json& name = problem.at("preset");
            config_error("problem.preset", "unknown preset " + name.dump());
        }
        for (const auto& item : problem.items()) {
            if (!allowed.contains(item.key())) {
                config_error("problem." + item.key(), "unknown key");
            }
        }
    }
    LoadedProblem out;
    if (r.has("preset")) {
        const std::string preset = r.string("preset");
        if (preset == "sunflower") {
            out = load_sunflower(r, n_quad);
        } else if (preset == "classic-sunflower") {
            out = load_classic(r, n_quad);
        } else {
            config_error(r.child_path("preset"), "unknown preset '" + preset + "'");
        }
    } else {
        out = load_generic(r, n_quad);
    }
    r.finish();
    return out;
}

}  // namespace tperiodic::cli
