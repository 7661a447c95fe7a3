#ifndef VVC_LINEAR_MODEL_HPP
#define VVC_LINEAR_MODEL_HPP

#include "vvc/network.hpp"
#include "vvc/types.hpp"

#include <memory>
#include <utility>

namespace vvc {

/// Signed incidence blocks of the feeder: a0 is n0 x m (head-bus rows), a is
/// m x m (non-root rows). Each column holds +1 at the from-node row and -1 at
/// the to-node row of one phase circuit; a is invertible for a radial net.
std::pair<SparseMatrix, SparseMatrix> build_incidence(const NetworkModel& net);

/// Constant matrices of the compact linear voltage model
///   v = M qg + c,  M = 2 A^{-T} Dx A^{-1},  H = M^T M.
/// A stays sparse and factorized; M and H are dense. H is symmetric positive
/// definite whenever every per-segment reactance block is invertible, which
/// parse-time validation guarantees.
class LinearSensitivityModel {
public:
    const SparseMatrix& a0() const { return a0_; }
    const SparseMatrix& a() const { return a_; }
    const SparseMatrix& dr() const { return dr_; }
    const SparseMatrix& dx() const { return dx_; }
    const Matrix& m_matrix() const { return m_; }
    const Matrix& hessian() const { return h_; }

    Index m() const { return m_.rows(); }
    Index n0() const { return a0_.rows(); }

    /// Solve A x = b with the stored factorization.
    Vector solve_a(const Vector& b) const;
    /// Solve A^T x = b with the stored factorization.
    Vector solve_at(const Vector& b) const;

private:
    friend LinearSensitivityModel build_linear_model(const NetworkModel&);

    SparseMatrix a0_, a_, dr_, dx_;
    Matrix m_, h_;
    struct Factorization;
    std::shared_ptr<Factorization> lu_;  // non-const: SparseLU's transpose view is not const-callable
};

LinearSensitivityModel build_linear_model(const NetworkModel& net);

/// Offset vector of the linear model for a given operating condition:
///   c = -M qc - A^{-T} A0 v0 - 2 A^{-T} Dr A^{-1} p
/// with v0 the squared slack voltages and p, qc the nodal consumptions.
Vector compute_c(const LinearSensitivityModel& model, const Vector& v0, const Vector& p, const Vector& qc);

}  // namespace vvc

#endif
