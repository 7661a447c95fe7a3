#ifndef VVC_PNM_HPP
#define VVC_PNM_HPP

#include "vvc/linear_model.hpp"
#include "vvc/types.hpp"

#include <memory>
#include <vector>

namespace vvc {

/// Element-wise VAr bounds. Non-DER nodes carry [0, 0] so a single m-vector
/// of commands covers every phase node.
struct VarLimits {
    Vector lower;
    Vector upper;

    void validate(Index m) const;
    Vector clamp(const Vector& x) const;
    static VarLimits unbounded(Index m, Scalar span = 1e9);
};

/// Box projection, element-wise clamp. Idempotent.
Vector project_box(const Vector& x, const VarLimits& limits);

struct ControllerConfig {
    Scalar epsilon = 1e-3;          // cap on the near-bound band
    Scalar beta = 0.5;              // step-shrink factor, in (0,1)
    Scalar delta = 0.1;             // sufficient-decrease constant, in (0,0.5)
    Vector c_diag;                  // fixed diagonal scaling for the band width; empty = identity
    int max_armijo_backtracks = 50;
    Scalar convergence_tol = 1e-8;  // infinity-norm on successive iterates
    int max_iterations = 200000;
    Scalar gp_step = 0.0;           // gradient-projection step; <= 0 selects 1/lambda_max(H)

    void validate() const;
};

/// h(qg) = 0.5 ||M qg + c - v_ref||^2.
Scalar objective(const Matrix& m_matrix, const Vector& qg, const Vector& c, const Vector& v_ref);

/// Gradient of h at the voltage profile v: M^T (v - v_ref). Note the
/// transpose: M is not symmetric on unbalanced feeders, and M^T (v - v_ref)
/// is the derivative of the squared-deviation objective (H = M^T M).
Vector gradient(const Matrix& m_matrix, const Vector& v, const Vector& v_ref);

/// w = |qg - [qg - C grad]_box|, the per-coordinate movement of one scaled
/// projected-gradient probe. Zero exactly at first-order optimal points.
Vector compute_w(const Vector& qg, const Vector& grad, const ControllerConfig& cfg, const VarLimits& limits);

/// Indices within min(epsilon, w_i) of a bound whose gradient pushes outward
/// (strict inequalities on the gradient). Sorted ascending.
std::vector<int> compute_active_set(const Vector& qg, const Vector& grad, const Vector& w,
                                    const ControllerConfig& cfg, const VarLimits& limits);

/// Gradient scaling D built from the Hessian and an active index set:
/// the free principal block of D inverts the matching block of H, active
/// diagonal entries are 1/|H_ii|, and every off-diagonal entry touching an
/// active index is zero. Symmetric positive definite by construction.
class ScalingMatrix {
public:
    ScalingMatrix(const Matrix& hessian, std::vector<int> active);

    Vector apply(const Vector& g) const;
    /// Materialize D densely (tests, small problems).
    Matrix dense() const;

    const std::vector<int>& active() const { return active_; }
    const std::vector<int>& free() const { return free_; }

private:
    Index m_;
    std::vector<int> active_;
    std::vector<int> free_;
    Eigen::LLT<Matrix> free_llt_;
    Vector active_diag_;
};

inline ScalingMatrix build_scaling(const Matrix& hessian, std::vector<int> active) {
    return ScalingMatrix(hessian, std::move(active));
}

struct ArmijoResult {
    Vector qg_next;
    Scalar alpha = 0.0;
    int backtracks = 0;       // rejected trials before acceptance
    bool exhausted = false;   // trial budget spent; qg_next == qg
    Scalar objective_next = 0.0;
};

/// Backtracking step along the projection arc qg(alpha) = [qg - alpha u]_box.
/// Trial alpha runs over beta^k starting at k = initial_power (the full step
/// first, so an unconstrained Newton direction is taken whole), and the
/// sufficient-decrease test charges free coordinates alpha * g_i u_i and
/// active coordinates their realized movement g_i (qg_i - qg_next_i).
/// `h_current` is the reference objective on the left-hand side (a measured
/// value in closed loop); trial points are scored with M and c.
ArmijoResult armijo_step(const Vector& qg, const Vector& grad, const Vector& direction,
                         const std::vector<int>& active, const Matrix& m_matrix, const Vector& c,
                         const Vector& v_ref, Scalar h_current, const VarLimits& limits,
                         const ControllerConfig& cfg, int initial_power = 0);

struct IterationRecord {
    int iter = 0;
    Scalar objective = 0.0;  // at the start of the iteration
    Scalar alpha = 0.0;
    int backtracks = 0;
    int active_size = 0;
    Scalar step_inf = 0.0;
    Vector qg;               // iterate after the step
    std::vector<int> active;
};

enum class SolveStatus { converged, iteration_cap, armijo_exhausted };

struct SolveResult {
    Vector qg;
    int iterations = 0;
    SolveStatus status = SolveStatus::converged;
    Scalar objective = 0.0;
    Vector gradient;  // at the returned point
    std::vector<IterationRecord> trace;

    bool converged() const { return status != SolveStatus::iteration_cap; }
};

/// Projected Newton solve of min h over the box: per iteration the active
/// set is refreshed, the gradient is scaled by the block-structured inverse
/// of H, and the step is picked by the backtracking rule above. Terminates
/// when successive iterates differ by less than convergence_tol.
SolveResult pnm_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                      const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0);

/// Gradient projection with a fixed step (cfg.gp_step, or 1/lambda_max(H)
/// when unset; a unit step mirrors the textbook rule but diverges when
/// ||H|| > 2, so the spectral default is safer).
SolveResult gp_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                     const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0);

/// Diagonally scaled gradient projection: direction diag(H)^{-1} grad with
/// the same backtracking rule, every index treated as free, first trial at
/// full step.
SolveResult dsgp_solve(const Matrix& m_matrix, const Matrix& hessian, const Vector& c, const Vector& v_ref,
                       const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0);

struct KktReport {
    Scalar residual = 0.0;
    bool pass = false;
};

/// First-order optimality residual over the box: |g_i| at interior entries,
/// max(0, -g_i) at the lower bound, max(0, g_i) at the upper bound, zero
/// where the bounds pinch. Bound membership is exact comparison.
KktReport check_kkt(const Vector& qg, const Vector& grad, const VarLimits& limits, Scalar tol);

/// Largest eigenvalue of an SPD matrix by power iteration (deterministic
/// start vector).
Scalar power_iteration_lmax(const Matrix& h, int max_iters = 1000, Scalar rel_tol = 1e-12);

// Model-flavoured conveniences.
inline Scalar objective(const LinearSensitivityModel& model, const Vector& qg, const Vector& c,
                        const Vector& v_ref) {
    return objective(model.m_matrix(), qg, c, v_ref);
}
inline Vector gradient(const LinearSensitivityModel& model, const Vector& v, const Vector& v_ref) {
    return gradient(model.m_matrix(), v, v_ref);
}
inline SolveResult pnm_solve(const LinearSensitivityModel& model, const Vector& c, const Vector& v_ref,
                             const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    return pnm_solve(model.m_matrix(), model.hessian(), c, v_ref, limits, cfg, qg0);
}
inline SolveResult gp_solve(const LinearSensitivityModel& model, const Vector& c, const Vector& v_ref,
                            const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    return gp_solve(model.m_matrix(), model.hessian(), c, v_ref, limits, cfg, qg0);
}
inline SolveResult dsgp_solve(const LinearSensitivityModel& model, const Vector& c, const Vector& v_ref,
                              const VarLimits& limits, const ControllerConfig& cfg, const Vector& qg0) {
    return dsgp_solve(model.m_matrix(), model.hessian(), c, v_ref, limits, cfg, qg0);
}

}  // namespace vvc

#endif
