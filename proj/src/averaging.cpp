#include "tperiodic/averaging.hpp"

#include "tperiodic/error.hpp"

#include <cmath>

namespace tperiodic {

FieldHandle negate(FieldHandle field) {
    auto inner = std::move(field.eval);
    return {field.dim, [inner = std::move(inner)](const Vec& p) -> Vec { return -inner(p); }};
}

Vec average_f(const CoupledProblem& problem, VecIn p, VecIn q, int n_quad) {
    const int k = problem.dim_x();
    if (p.size() != k || q.size() != problem.dim_y()) {
        throw Error(ErrorKind::InvalidParameter, "average_f: point has the wrong dimension");
    }
    Vec sum = Vec::Zero(k);
    if (k == 0 || !problem.has_f()) {
        return sum;
    }
    const double T = problem.period();
    const auto w = simpson_weights(n_quad, T);
    Vec value(k);
    for (int i = 0; i <= n_quad; ++i) {
        problem.eval_f(T * i / n_quad, p, q, p, q, value);
        sum += w[static_cast<std::size_t>(i)] * value;
    }
    return sum / T;
}

FieldHandle nu_field(const CoupledProblem& problem, int n_quad) {
    check_quadrature_nodes(n_quad);
    const int k = problem.dim_x();
    const int n = problem.dim();
    return {n, [&problem, k, n, n_quad](const Vec& z) -> Vec {
                if (z.size() != n) {
                    throw Error(ErrorKind::InvalidParameter, "nu: point has the wrong dimension");
                }
                Vec out(n);
                const auto p = z.head(k);
                const auto q = z.tail(n - k);
                out.head(k) = average_f(problem, p, q, n_quad);
                Vec gv(n - k);
                problem.eval_g(p, q, gv);
                out.tail(n - k) = gv;
                return out;
            }};
}

FieldHandle v_lambda_field(const CoupledProblem& problem, double lambda, int n_quad) {
    if (!(lambda > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "v_lambda requires lambda > 0");
    }
    const double avg = problem.average_a();
    if (avg == 0.0) {
        throw Error(ErrorKind::ZeroAverage, "v_lambda requires a nonzero average of a");
    }
    FieldHandle nu = nu_field(problem, n_quad);
    const int k = problem.dim_x();
    return {nu.dim, [nu = std::move(nu), k, lambda, avg](const Vec& z) -> Vec {
                Vec out = nu(z);
                out.head(k) *= lambda / avg;
                out.tail(out.size() - k) *= lambda;
                return out;
            }};
}

// ---------------------------------------------------------------------------

AveragedFieldCache::AveragedFieldCache(const CoupledProblem& problem, int n_quad, std::size_t capacity)
    : problem_(problem), n_quad_(n_quad), capacity_(capacity) {
    check_quadrature_nodes(n_quad);
    if (capacity_ == 0) {
        throw Error(ErrorKind::InvalidParameter, "cache capacity must be positive");
    }
}

std::size_t AveragedFieldCache::KeyHash::operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto v : key) {
        h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

void AveragedFieldCache::lookup(VecIn p, VecIn q, VecOut out) {
    std::vector<std::int64_t> key;
    key.reserve(static_cast<std::size_t>(p.size() + q.size()));
    bool representable = true;
    auto push = [&](double v) {
        const double scaled = std::round(v / kKeyResolution);
        if (!(std::abs(scaled) < 9.0e18)) {
            representable = false;
            return;
        }
        key.push_back(static_cast<std::int64_t>(scaled));
    };
    for (Eigen::Index i = 0; i < p.size(); ++i) push(p[i]);
    for (Eigen::Index i = 0; i < q.size(); ++i) push(q[i]);
    if (!representable) {
        out = average_f(problem_, p, q, n_quad_);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        if (auto it = table_.find(key); it != table_.end()) {
            ++hits_;
            out = it->second;
            return;
        }
        ++misses_;
    }
    Vec value = average_f(problem_, p, q, n_quad_);
    out = value;
    std::lock_guard lock(mutex_);
    if (table_.size() >= capacity_) {
        table_.clear();
    }
    table_.emplace(std::move(key), std::move(value));
}

std::size_t AveragedFieldCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t AveragedFieldCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::size_t AveragedFieldCache::size() const {
    std::lock_guard lock(mutex_);
    return table_.size();
}

}  // namespace tperiodic
