#pragma once

#include "tperiodic/problem.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace tperiodic {

/// An evaluable vector field R^n -> R^n.
struct FieldHandle {
    int dim = 0;
    std::function<Vec(const Vec&)> eval;

    Vec operator()(const Vec& p) const { return eval(p); }
};

[[nodiscard]] FieldHandle negate(FieldHandle field);

/// w_f(p, q) = (1/T) * integral_0^T f(t, p, q, p, q) dt, componentwise Simpson.
[[nodiscard]] Vec average_f(const CoupledProblem& problem, VecIn p, VecIn q, int n_quad = kDefaultQuadrature);

/// nu(p, q) = (w_f(p, q), g(p, q)).
[[nodiscard]] FieldHandle nu_field(const CoupledProblem& problem, int n_quad = kDefaultQuadrature);

/// v_lambda(p, q) = ((lambda / <a>) w_f(p, q), lambda g(p, q)).
[[nodiscard]] FieldHandle v_lambda_field(const CoupledProblem& problem, double lambda,
                                         int n_quad = kDefaultQuadrature);

/// Memo for w_f along the mu-homotopy path. Keys are (p, q) rounded to a
/// 1e-12 lattice; the table holds at most `capacity` entries and is cleared
/// when full. Safe under concurrent use.
class AveragedFieldCache {
public:
    static constexpr std::size_t kDefaultCapacity = 4096;
    static constexpr double kKeyResolution = 1e-12;

    explicit AveragedFieldCache(const CoupledProblem& problem, int n_quad = kDefaultQuadrature,
                                std::size_t capacity = kDefaultCapacity);

    /// Writes w_f(p, q) into `out`.
    void lookup(VecIn p, VecIn q, VecOut out);

    [[nodiscard]] std::size_t hits() const;
    [[nodiscard]] std::size_t misses() const;
    [[nodiscard]] std::size_t size() const;

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept;
    };

    const CoupledProblem& problem_;
    int n_quad_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::unordered_map<std::vector<std::int64_t>, Vec, KeyHash> table_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace tperiodic
