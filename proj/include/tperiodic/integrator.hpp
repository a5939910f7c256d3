#pragma once

// Fixed-step RK4 method of steps for the coupled delay system with
// cubic Hermite dense output.

#include "tperiodic/averaging.hpp"
#include "tperiodic/problem.hpp"

#include <iosfwd>
#include <vector>

namespace tperiodic {

inline constexpr double kBlowupThreshold = 1e9;
inline constexpr int kDefaultStepsPerDelay = 64;
inline constexpr int kDefaultFlowSteps = 2048;

struct IntegratorOptions {
    int steps_per_delay = kDefaultStepsPerDelay;
    /// Quadrature used for w_f in the averaged homotopy term (mu < 1).
    int n_quad = kDefaultQuadrature;
    double blowup_threshold = kBlowupThreshold;
    /// Optional shared memo for w_f; a private one is used when null.
    AveragedFieldCache* cache = nullptr;
};

/// Dense solution on [-r, t_end]: the initial history on [-r, 0] followed by
/// RK4 nodes joined by cubic Hermite pieces.
class Trajectory {
public:
    Trajectory(History history, double step, int dim);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double delay() const noexcept { return history_.span(); }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] double t_end() const noexcept { return times_.empty() ? 0.0 : times_.back(); }
    [[nodiscard]] const History& history() const noexcept { return history_; }

    [[nodiscard]] std::size_t node_count() const noexcept { return times_.size(); }
    [[nodiscard]] double node_time(std::size_t i) const { return times_[i]; }
    [[nodiscard]] Eigen::Map<const Vec> node_state(std::size_t i) const;
    [[nodiscard]] Eigen::Map<const Vec> node_slope(std::size_t i) const;

    [[nodiscard]] Vec eval(double t) const;
    [[nodiscard]] Vec deriv(double t) const;
    void eval_into(double t, VecOut out) const;

    /// CSV with header t,x1..xk,y1..ys; `samples` equally spaced rows on
    /// [-r, t_end] (or [0, t_end] without the history).
    void write_csv(std::ostream& out, int dim_x, int samples, bool include_history = true) const;

    // Builder interface used by the integrator.
    void push_node(double t, VecIn state);
    void set_slope(std::size_t i, VecIn slope);

private:
    struct Segment {
        std::size_t index;
        double u;
        double width;
        bool on_node;
    };
    [[nodiscard]] Segment locate(double t) const;

    History history_;
    double step_;
    int dim_;
    std::vector<double> times_;
    std::vector<double> states_;
    std::vector<double> slopes_;
};

/// Solves the lambda/mu system
///   x' = lambda [mu f + (1 - mu) (a(t)/<a>) w_f(x, y)]
///   y' = a(t) g(x, y) + lambda mu h
/// from `init` on [-r, 0] up to `t_end`, h = r / steps_per_delay.
[[nodiscard]] Trajectory integrate(const CoupledProblem& problem, double lambda, double mu, const History& init,
                                   double t_end, int steps_per_delay = kDefaultStepsPerDelay);
[[nodiscard]] Trajectory integrate(const CoupledProblem& problem, double lambda, double mu, const History& init,
                                   double t_end, const IntegratorOptions& options);

/// Same system with an explicit delay, which may exceed the period. The
/// history must span [-delay, 0].
[[nodiscard]] Trajectory integrate_with_delay(const CoupledProblem& problem, double delay, double lambda, double mu,
                                              const History& init, double t_end, const IntegratorOptions& options);

/// x' = 0, y' = a(t) g(x, y) from `point` at time 0 to time t.
[[nodiscard]] Vec flow_unperturbed(const CoupledProblem& problem, VecIn point, double t,
                                   int steps = kDefaultFlowSteps);
/// x' = 0, y' = <a> g(x, y) from `point` at time 0 to time t.
[[nodiscard]] Vec flow_averaged(const CoupledProblem& problem, VecIn point, double t, int steps = kDefaultFlowSteps);

}  // namespace tperiodic
