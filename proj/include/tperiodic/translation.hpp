#pragma once

// Translation operator along the trajectories of the lambda/mu system on
// m-node histories, its fixed points and their discrete indices.

#include "tperiodic/averaging.hpp"
#include "tperiodic/degree.hpp"
#include "tperiodic/error.hpp"
#include "tperiodic/integrator.hpp"
#include "tperiodic/problem.hpp"

#include "json.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tperiodic {

struct TranslationConfig {
    int m = 32;
    int steps_per_delay = kDefaultStepsPerDelay;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;
    double fd_step = 1e-6;
    int n_quad = kDefaultQuadrature;

    void validate() const;
};

void to_json(nlohmann::json& j, const TranslationConfig& cfg);

/// History -> solution segment on [T - r, T] resampled onto the m-node grid.
class Translator {
public:
    Translator(const CoupledProblem& problem, double lambda, double mu, TranslationConfig cfg);

    [[nodiscard]] const CoupledProblem& problem() const noexcept { return problem_; }
    [[nodiscard]] const TranslationConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double mu() const noexcept { return mu_; }
    [[nodiscard]] int unknowns() const noexcept { return (cfg_.m + 1) * problem_.dim(); }

    void set_lambda(double lambda) { lambda_ = lambda; }

    [[nodiscard]] History translate(const History& init) const;
    [[nodiscard]] Trajectory trajectory(const History& init, double t_end) const;

    /// Q(u) on flattened node values.
    [[nodiscard]] Vec apply(const Vec& u) const;
    /// R(u) = Q(u) - u.
    [[nodiscard]] Vec residual(const Vec& u) const;
    /// Forward-difference DQ at u given Q(u).
    [[nodiscard]] Mat derivative(const Vec& u, const Vec& qu) const;

    [[nodiscard]] History to_history(const Vec& u) const;

private:
    const CoupledProblem& problem_;
    double lambda_;
    double mu_;
    TranslationConfig cfg_;
    std::unique_ptr<AveragedFieldCache> cache_;
};

/// Convenience wrapper around Translator::translate.
[[nodiscard]] History translate(const CoupledProblem& problem, double lambda, double mu, const History& init,
                                const TranslationConfig& cfg);

struct NewtonOutcome {
    bool converged = false;
    Vec u;
    double residual = 0.0;
    int iterations = 0;
    std::string failure;
    /// Last integrator error met while iterating, if any.
    std::optional<ErrorKind> failure_kind;
    /// DQ at the returned point when requested.
    std::optional<Mat> dq;
};

/// Damped Newton with backtracking on ||Q(u) - u||_inf.
[[nodiscard]] NewtonOutcome solve_fixed_point(const Translator& translator, Vec u0, bool want_derivative);

struct FixedPointRecord {
    History history;
    double residual = 0.0;
    /// sign det(I - DQ); empty for a degenerate fixed point.
    std::optional<int> index;
    double eigen_margin = 0.0;
    int iterations = 0;
};

void to_json(nlohmann::json& j, const FixedPointRecord& record);

struct SeedFailure {
    std::size_t seed = 0;
    std::string message;
};

struct FixedPointSearch {
    std::vector<FixedPointRecord> records;
    std::vector<SeedFailure> failures;
};

inline constexpr double kEigenMarginFloor = 1e-8;
inline constexpr double kDuplicateDistance = 1e-7;

[[nodiscard]] FixedPointSearch find_fixed_points(const CoupledProblem& problem, double lambda,
                                                 const std::vector<History>& seeds, const TranslationConfig& cfg,
                                                 double mu = 1.0);

struct IndexReport {
    int lhs_sum = 0;
    int rhs = 0;
    bool pass = false;
    double lambda = 0.0;
    int m = 0;
    DegreeReport degree;
    std::vector<FixedPointRecord> records;
    std::vector<SeedFailure> failures;
    std::size_t seed_count = 0;
    /// Records whose histories leave the box; excluded from the sum.
    std::size_t outside = 0;
};

void to_json(nlohmann::json& j, const IndexReport& report);

/// Seeds: constant histories at refined zeros of nu plus a
/// seeds_per_axis^n lattice of cell centres in V.
[[nodiscard]] IndexReport verify_index_identity(const CoupledProblem& problem, double lambda, const Box& box,
                                                const TranslationConfig& cfg, int seeds_per_axis = 3);

}  // namespace tperiodic
