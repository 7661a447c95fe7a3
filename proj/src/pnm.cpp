#include "vvc/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vvc {

void VarLimits::validate(Index m) const {
    require_dim(lower.size(), m, "var limits: lower");
    require_dim(upper.size(), m, "var limits: upper");
    if ((lower.array() > upper.array()).any()) throw_data("var limits: lower exceeds upper");
}

Vector VarLimits::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

VarLimits VarLimits::unbounded(Index m, Scalar span) {
    return {Vector::Constant(m, -span), Vector::Constant(m, span)};
}

Vector project_box(const Vector& x, const VarLimits& limits) {
    require_dim(x.size(), limits.lower.size(), "project_box");
    return limits.clamp(x);
}

void ControllerConfig::validate() const {
    if (epsilon <= 0) throw_config("epsilon must be positive");
    if (beta <= 0 || beta >= 1) throw_config("beta must lie in (0, 1)");
    if (delta <= 0 || delta >= 0.5) throw_config("delta must lie in (0, 0.5)");
    if (c_diag.size() > 0 && (c_diag.array() <= 0).any()) throw_config("scaling diagonal must be positive");
    if (max_armijo_backtracks < 1) throw_config("max_armijo_backtracks must be at least 1");
    if (convergence_tol <= 0) throw_config("convergence_tol must be positive");
    if (max_iterations < 1) throw_config("max_iterations must be at least 1");
}

Scalar objective(const Matrix& m_matrix, const Vector& qg, const Vector& c, const Vector& v_ref) {
    require_dim(qg.size(), m_matrix.cols(), "objective: qg");
    require_dim(c.size(), m_matrix.rows(), "objective: c");
    require_dim(v_ref.size(), m_matrix.rows(), "objective: v_ref");
    return 0.5 * (m_matrix * qg + c - v_ref).squaredNorm();
}

Vector gradient(const Matrix& m_matrix, const Vector& v, const Vector& v_ref) {
    require_dim(v.size(), m_matrix.rows(), "gradient: v");
    require_dim(v_ref.size(), m_matrix.rows(), "gradient: v_ref");
    return m_matrix.transpose() * (v - v_ref);
}

Vector compute_w(const Vector& qg, const Vector& grad, const ControllerConfig& cfg, const VarLimits& limits) {
    const Index m = qg.size();
    require_dim(grad.size(), m, "compute_w: grad");
    limits.validate(m);
    Vector scaled = grad;
    if (cfg.c_diag.size() > 0) {
        require_dim(cfg.c_diag.size(), m, "compute_w: c_diag");
        scaled = cfg.c_diag.cwiseProduct(grad);
    }
    return (qg - limits.clamp(qg - scaled)).cwiseAbs();
}

std::vector<int> compute_active_set(const Vector& qg, const Vector& grad, const Vector& w,
                                    const ControllerConfig& cfg, const VarLimits& limits) {
    const Index m = qg.size();
    require_dim(grad.size(), m, "compute_active_set: grad");
    require_dim(w.size(), m, "compute_active_set: w");
    std::vector<int> active;
    for (Index i = 0; i < m; ++i) {
        const Scalar eps_i = std::min(cfg.epsilon, w[i]);
        const bool near_lower = qg[i] >= limits.lower[i] && qg[i] <= limits.lower[i] + eps_i;
        const bool near_upper = qg[i] >= limits.upper[i] - eps_i && qg[i] <= limits.upper[i];
        if ((near_lower && grad[i] > 0.0) || (near_upper && grad[i] < 0.0))
            active.push_back(static_cast<int>(i));
    }
    return active;
}

ScalingMatrix::ScalingMatrix(const Matrix& hessian, std::vector<int> active)
    : m_(hessian.rows()), active_(std::move(active)) {
    if (hessian.rows() != hessian.cols()) throw_data("scaling: hessian must be square");
    std::sort(active_.begin(), active_.end());
    active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
    if (!active_.empty() && (active_.front() < 0 || active_.back() >= m_))
        throw_data("scaling: active index out of range");

    free_.reserve(static_cast<size_t>(m_) - active_.size());
    size_t ai = 0;
    for (int i = 0; i < m_; ++i) {
        if (ai < active_.size() && active_[ai] == i) {
            ++ai;
        } else {
            free_.push_back(i);
        }
    }

    if (!free_.empty()) {
        Matrix block(free_.size(), free_.size());
        for (size_t r = 0; r < free_.size(); ++r)
            for (size_t col = 0; col < free_.size(); ++col)
                block(static_cast<Index>(r), static_cast<Index>(col)) = hessian(free_[r], free_[col]);
        free_llt_.compute(block);
        if (free_llt_.info() != Eigen::Success)
            throw_internal("scaling: free principal block of an SPD Hessian failed to factor");
    }
    active_diag_.resize(static_cast<Index>(active_.size()));
    for (size_t k = 0; k < active_.size(); ++k) {
        const Scalar hkk = std::abs(hessian(active_[k], active_[k]));
        if (hkk <= 0) throw_internal("scaling: zero Hessian diagonal");
        active_diag_[static_cast<Index>(k)] = 1.0 / hkk;
    }
}

Vector ScalingMatrix::apply(const Vector& g) const {
    require_dim(g.size(), m_, "scaling apply");
    Vector u = Vector::Zero(m_);
    if (!free_.empty()) {
        Vector gf(static_cast<Index>(free_.size()));
        for (size_t k = 0; k < free_.size(); ++k) gf[static_cast<Index>(k)] = g[free_[k]];
        const Vector uf = free_llt_.solve(gf);
        for (size_t k = 0; k < free_.size(); ++k) u[free_[k]] = uf[static_cast<Index>(k)];
    }
    for (size_t k = 0; k < active_.size(); ++k)
        u[active_[k]] = active_diag_[static_cast<Index>(k)] * g[active_[k]];
    return u;
}

Matrix ScalingMatrix::dense() const {
    Matrix d = Matrix::Zero(m_, m_);
    if (!free_.empty()) {
        Matrix inv = free_llt_.solve(Matrix::Identity(static_cast<Index>(free_.size()),
                                                      static_cast<Index>(free_.size())));
        // The operator is symmetric by construction; the triangular solves
        // leave asymmetric rounding noise, so materialize the symmetric part.
        inv = 0.5 * (inv + inv.transpose()).eval();
        for (size_t r = 0; r < free_.size(); ++r)
            for (size_t col = 0; col < free_.size(); ++col)
                d(free_[r], free_[col]) = inv(static_cast<Index>(r), static_cast<Index>(col));
    }
    for (size_t k = 0; k < active_.size(); ++k)
        d(active_[k], active_[k]) = active_diag_[static_cast<Index>(k)];
    return d;
}

ArmijoResult armijo_step(const Vector& qg, const Vector& grad, const Vector& direction,
                         const std::vector<int>& active, const Matrix& m_matrix, const Vector& c,
                         const Vector& v_ref, Scalar h_current, const VarLimits& limits,
                         const ControllerConfig& cfg, int initial_power) {
    const Index m = qg.size();
    require_dim(grad.size(), m, "armijo: grad");
    require_dim(direction.size(), m, "armijo: direction");

    std::vector<char> is_active(static_cast<size_t>(m), 0);
    for (int i : active) is_active[static_cast<size_t>(i)] = 1;
    Scalar free_term = 0.0;
    for (Index i = 0; i < m; ++i)
        if (!is_active[static_cast<size_t>(i)]) free_term += grad[i] * direction[i];

    ArmijoResult res;
    Scalar alpha = std::pow(cfg.beta, initial_power);
    for (int trial = 0; trial < cfg.max_armijo_backtracks; ++trial) {
        const Vector q_next = limits.clamp(qg - alpha * direction);
        const Scalar h_next = objective(m_matrix, q_next, c, v_ref);
        Scalar active_term = 0.0;
        for (int i : active) active_term += grad[i] * (qg[i] - q_next[i]);
        if (h_current - h_next >= cfg.delta * (alpha * free_term + active_term)) {
            res.qg_next = q_next;
            res.alpha = alpha;
            res.backtracks = trial;
            res.objective_next = h_next;
            return res;
        }
        alpha *= cfg.beta;
    }
    // Trial budget spent: near the optimum the decrease test sits at rounding
    // level, so the caller treats the unchanged point as converged.
    res.qg_next = qg;
    res.alpha = 0.0;
    res.backtracks = cfg.max_armijo_backtracks;
    res.exhausted = true;
    res.objective_next = h_current;
    return res;
}

namespace {

struct StepOutcome {
    Vector qg_next;
    Scalar alpha;
    int backtracks;
    bool exhausted;
    std::vector<int> active;
};

SolveResult run_projected_descent(const Matrix& m_matrix, const Matrix& hessian, const Vector& c,
                                  const Vector& v_ref, const VarLimits& limits, const ControllerConfig& cfg,
                                  const Vector& qg0,
                                  const std::function<StepOutcome(const Vector&, const Vector&, Scalar)>& step) {
    cfg.validate();
    const Index m = m_matrix.cols();
    require_dim(hessian.rows(), m, "solver: hessian");
    limits.validate(m);
    require_dim(qg0.size(), m, "solver: qg0");

    SolveResult result;
    Vector q = limits.clamp(qg0);
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const Vector residual = m_matrix * q + c - v_ref;
        const Scalar h = 0.5 * residual.squaredNorm();
        const Vector g = m_matrix.transpose() * residual;

        StepOutcome out = step(q, g, h);
        const Scalar step_inf = (out.qg_next - q).lpNorm<Eigen::Infinity>();

        IterationRecord rec;
        rec.iter = iter;
        rec.objective = h;
        rec.alpha = out.alpha;
        rec.backtracks = out.backtracks;
        rec.active_size = static_cast<int>(out.active.size());
        rec.step_inf = step_inf;
        rec.qg = out.qg_next;
        rec.active = std::move(out.active);
        result.trace.push_back(std::move(rec));

        q = std::move(out.qg_next);
        result.iterations = iter;
        if (out.exhausted) {
            result.status = SolveStatus::armijo_exhausted;
            break;
        }
        if (step_inf < cfg.convergence_tol) {
            result.status = SolveStatus::converged;
            break;
        }
        if (iter == cfg.max_iterations) result.status = SolveStatus::iteration_cap;
    }

    result.qg = q;
    const Vector residual = m_matrix * q + c - v_ref;
    result.objective = 0.5 * residual.squaredNorm();
    result.gradient = m_matrix.transpose() * residual;
    return result;
}

}  // namespace

SolveResult pnm_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                      const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    return run_projected_descent(
        m_matrix, hessian, c, v_ref, limits, cfg, qg0,
        [&](const Vector& q, const Vector& g, Scalar h) {
            const Vector w = compute_w(q, g, cfg, limits);
            std::vector<int> active = compute_active_set(q, g, w, cfg, limits);
            const ScalingMatrix d(hessian, active);
            const Vector u = d.apply(g);
            ArmijoResult ar = armijo_step(q, g, u, active, m_matrix, c, v_ref, h, limits, cfg, 0);
            return StepOutcome{std::move(ar.qg_next), ar.alpha, ar.backtracks, ar.exhausted, std::move(active)};
        });
}

SolveResult gp_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                     const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    const Scalar step = cfg.gp_step > 0 ? cfg.gp_step : 1.0 / power_iteration_lmax(hessian);
    return run_projected_descent(
        m_matrix, hessian, c, v_ref, limits, cfg, qg0,
        [&, step](const Vector& q, const Vector& g, Scalar) {
            Vector q_next = limits.clamp(q - step * g);
            return StepOutcome{std::move(q_next), step, 0, false, {}};
        });
}

SolveResult dsgp_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                       const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    const Vector inv_diag = hessian.diagonal().cwiseAbs().cwiseInverse();
    // No active-set machinery here; the decrease test charges the realized
    // per-coordinate movement so that bound-blocked coordinates cannot stall
    // the backtracking.
    std::vector<int> all(static_cast<size_t>(m_matrix.cols()));
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return run_projected_descent(
        m_matrix, hessian, c, v_ref, limits, cfg, qg0,
        [&, all](const Vector& q, const Vector& g, Scalar h) {
            const Vector u = inv_diag.cwiseProduct(g);
            ArmijoResult ar = armijo_step(q, g, u, all, m_matrix, c, v_ref, h, limits, cfg, 0);
            return StepOutcome{std::move(ar.qg_next), ar.alpha, ar.backtracks, ar.exhausted, {}};
        });
}

KktReport check_kkt(const Vector& qg, const Vector& grad, const VarLimits& limits, Scalar tol) {
    const Index m = qg.size();
    require_dim(grad.size(), m, "check_kkt: grad");
    limits.validate(m);
    Scalar residual = 0.0;
    for (Index i = 0; i < m; ++i) {
        const bool at_lower = qg[i] <= limits.lower[i];
        const bool at_upper = qg[i] >= limits.upper[i];
        Scalar viol;
        if (at_lower && at_upper) {
            viol = 0.0;  // pinched coordinate, any gradient is consistent
        } else if (at_lower) {
            viol = std::max(0.0, -grad[i]);
        } else if (at_upper) {
            viol = std::max(0.0, grad[i]);
        } else {
            viol = std::abs(grad[i]);
        }
        residual = std::max(residual, viol);
    }
    return {residual, residual <= tol};
}

Scalar power_iteration_lmax(const Matrix& h, int max_iters, Scalar rel_tol) {
    if (h.rows() != h.cols() || h.rows() == 0) throw_data("power iteration: square matrix required");
    const Index m = h.rows();
    Vector x(m);
    for (Index i = 0; i < m; ++i) x[i] = 1.0 + 1e-3 * static_cast<Scalar>(i % 7);
    x.normalize();
    Scalar lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        const Vector y = h * x;
        const Scalar next = x.dot(y);
        const Scalar norm = y.norm();
        if (norm == 0.0) return 0.0;
        x = y / norm;
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace vvc
