#pragma once

// JSON run configuration for the command-line front end.

#include "tperiodic/expr.hpp"
#include "tperiodic/problem.hpp"
#include "tperiodic/sigma_lienard.hpp"
#include "tperiodic/translation.hpp"

#include "json.hpp"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tperiodic::cli {

using nlohmann::json;

/// Reads one JSON object and rejects keys that were never asked for.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string path);
    ObjectReader(json&&, std::string) = delete;

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] const json& get(const std::string& key);
    [[nodiscard]] double number(const std::string& key);
    [[nodiscard]] double number(const std::string& key, double fallback);
    [[nodiscard]] int integer(const std::string& key, int fallback);
    [[nodiscard]] bool boolean(const std::string& key, bool fallback);
    [[nodiscard]] std::string string(const std::string& key);
    [[nodiscard]] std::vector<double> numbers(const std::string& key);
    [[nodiscard]] std::vector<std::string> strings(const std::string& key);
    [[nodiscard]] std::string child_path(const std::string& key) const { return path_ + "." + key; }

    /// Throws a config error naming the first unknown key.
    void finish() const;

private:
    const json& object_;
    std::string path_;
    std::set<std::string> seen_;
};

[[nodiscard]] json load_config_file(const std::string& path);

/// Number or constant DSL expression such as "2*pi".
[[nodiscard]] double constant_value(const json& value, const std::string& path);

/// Parse an expression and tag syntax errors with the config path.
[[nodiscard]] Expr compile(const std::string& source, const VariableSet& vars, const std::string& path);

struct Numerics {
    int n_quad = kDefaultQuadrature;
    int steps_per_delay = kDefaultStepsPerDelay;
    int m = 32;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;
    double fd_step = 1e-6;

    [[nodiscard]] TranslationConfig translation() const;
};

[[nodiscard]] Numerics read_numerics(const json& root);
void to_json(json& j, const Numerics& n);

struct LoadedProblem {
    std::unique_ptr<CoupledProblem> problem;
    std::string preset;  // empty for the generic form
    /// Original coefficient a and its sigma-transform for the sunflower presets.
    std::optional<PeriodicFn1D> sunflower_a;
    std::optional<SigmaResult> sigma;
    /// Parameter fixed by the classic preset.
    std::optional<double> preset_lambda;
    json resolved;
};

[[nodiscard]] LoadedProblem load_problem(const json& problem, int n_quad);

[[nodiscard]] Box read_box(const json& value, const std::string& path);
[[nodiscard]] json box_json(const Box& box);

/// Variables for an n-dimensional degree field: p (q) aliases in 1 and 2 dims.
[[nodiscard]] VariableSet degree_variables(int n);

}  // namespace tperiodic::cli
