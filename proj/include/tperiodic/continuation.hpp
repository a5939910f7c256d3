#pragma once

// Natural-parameter continuation in lambda of T-periodic solutions
// emanating from a constant history at a zero of nu.

#include "tperiodic/averaging.hpp"
#include "tperiodic/problem.hpp"
#include "tperiodic/translation.hpp"

#include "json.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tperiodic {

enum class Termination { ReachedLambdaMax, NormBlowup, NewtonFailure, LeftDomain, ClosedLoop, MaxPoints };

[[nodiscard]] const char* to_string(Termination termination) noexcept;

inline constexpr double kBranchNormThreshold = 1e6;
inline constexpr double kOriginTolerance = 1e-8;

struct ContinuationConfig {
    double h0 = 0.01;
    double h_min = 1e-4;
    double h_max = 0.05;
    int max_points = 1000;
    std::optional<Box> domain;
    double norm_threshold = kBranchNormThreshold;
    /// Newton iterations at or below which the step doubles.
    int fast_iterations = 4;
    TranslationConfig translation;

    void validate() const;
};

void to_json(nlohmann::json& j, const ContinuationConfig& cfg);

struct BranchPoint {
    double lambda = 0.0;
    History history;
    double residual = 0.0;
    double sup_norm = 0.0;
    double min_dist_to_trivial = 0.0;
    int iterations = 0;
    double step = 0.0;
};

struct Branch {
    std::vector<BranchPoint> points;
    Vec origin;
    Termination termination = Termination::ReachedLambdaMax;
    std::string message;
    std::vector<std::string> warnings;
    int origin_degree = 0;
};

[[nodiscard]] Branch continue_branch(const CoupledProblem& problem, const Vec& origin, double lambda_max,
                                     const ContinuationConfig& cfg);

/// Sup distance from `history` to the nearest constant history at a zero
/// of nu, searched by Gauss-Newton from the history's midrange constant and
/// compared with `origin`.
[[nodiscard]] double distance_to_trivial(const FieldHandle& nu, const History& history, const Vec& origin);

struct TPair {
    double lambda = 0.0;
    std::vector<double> times;
    std::vector<double> values;
};

/// Re-integrates each point over [0, T] and samples `component` at
/// samples + 1 equally spaced times, both ends included.
[[nodiscard]] std::vector<TPair> branch_to_pairs(const CoupledProblem& problem, const Branch& branch, int component,
                                                 const TranslationConfig& cfg, int samples = 256);

/// Quadratic extrapolation to lambda = 0 through the first three points
/// with lambda > 0.
[[nodiscard]] History extrapolate_to_zero(const Branch& branch);

/// lambda,residual,sup_norm,min_dist_to_trivial,u0..u{N-1}
void write_branch_csv(std::ostream& out, const Branch& branch);

void to_json(nlohmann::json& j, const Branch& branch);

}  // namespace tperiodic
