#include "vvc/linear_model.hpp"

#include <Eigen/SparseLU>

#include <vector>

namespace vvc {

struct LinearSensitivityModel::Factorization {
    Eigen::SparseLU<SparseMatrix> lu;
};

std::pair<SparseMatrix, SparseMatrix> build_incidence(const NetworkModel& net) {
    const Index m = net.node_count();
    const Index n0 = net.root_phase_count();
    std::vector<Eigen::Triplet<Scalar>> t0, t;
    t0.reserve(static_cast<size_t>(m));
    t.reserve(static_cast<size_t>(2 * m));

    for (const LineSegment& seg : net.segments()) {
        const auto phases = seg.phases.ordered();
        for (int k = 0; k < seg.phases.size(); ++k) {
            const Phase ph = phases[static_cast<size_t>(k)];
            const Index col = net.node_index(seg.to, ph);  // column stacking == node stacking
            if (seg.from == 0) {
                t0.emplace_back(net.node_index(0, ph), col, 1.0);
            } else {
                t.emplace_back(net.node_index(seg.from, ph), col, 1.0);
            }
            t.emplace_back(net.node_index(seg.to, ph), col, -1.0);
        }
    }

    SparseMatrix a0(n0, m), a(m, m);
    a0.setFromTriplets(t0.begin(), t0.end());
    a.setFromTriplets(t.begin(), t.end());
    return {std::move(a0), std::move(a)};
}

LinearSensitivityModel build_linear_model(const NetworkModel& net) {
    LinearSensitivityModel model;
    const Index m = net.node_count();
    std::tie(model.a0_, model.a_) = build_incidence(net);

    std::vector<Eigen::Triplet<Scalar>> tr, tx;
    for (const LineSegment& seg : net.segments()) {
        const auto [rt, xt] = tilde_impedance(seg.z, seg.phases);
        const Index off = net.node_index(seg.to, seg.phases.ordered()[0]);
        const int n = seg.phases.size();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                tr.emplace_back(off + i, off + j, rt(i, j));
                tx.emplace_back(off + i, off + j, xt(i, j));
            }
        }
    }
    model.dr_.resize(m, m);
    model.dx_.resize(m, m);
    model.dr_.setFromTriplets(tr.begin(), tr.end());
    model.dx_.setFromTriplets(tx.begin(), tx.end());

    auto fact = std::make_shared<LinearSensitivityModel::Factorization>();
    fact->lu.compute(model.a_);
    if (fact->lu.info() != Eigen::Success)
        throw_internal("incidence matrix factorization failed on a validated radial network");
    model.lu_ = fact;

    // M = 2 A^{-T} (Dx A^{-1}) via dense solves against the factorization;
    // never assembled from an explicit inverse formula.
    Matrix inv_a = fact->lu.solve(Matrix::Identity(m, m));
    Matrix dx_inv_a = model.dx_ * inv_a;
    model.m_ = 2.0 * fact->lu.transpose().solve(dx_inv_a);

    model.h_.setZero(m, m);
    model.h_.selfadjointView<Eigen::Lower>().rankUpdate(model.m_.transpose());
    model.h_ = model.h_.selfadjointView<Eigen::Lower>();

    Eigen::LLT<Matrix> llt(model.h_);
    if (llt.info() != Eigen::Success)
        throw_data("voltage-sensitivity Hessian is not positive definite; check the impedance data");

    return model;
}

Vector LinearSensitivityModel::solve_a(const Vector& b) const {
    require_dim(b.size(), m(), "solve_a");
    return lu_->lu.solve(b);
}

Vector LinearSensitivityModel::solve_at(const Vector& b) const {
    require_dim(b.size(), m(), "solve_at");
    return lu_->lu.transpose().solve(b);
}

Vector compute_c(const LinearSensitivityModel& model, const Vector& v0, const Vector& p, const Vector& qc) {
    require_dim(v0.size(), model.n0(), "compute_c: v0");
    require_dim(p.size(), model.m(), "compute_c: p");
    require_dim(qc.size(), model.m(), "compute_c: qc");
    const Vector head = model.a0().transpose() * v0;  // stored block is the n0 x m slice
    const Vector drop = model.dr() * model.solve_a(p);
    return -model.m_matrix() * qc - model.solve_at(head + 2.0 * drop);
}

}  // namespace vvc
