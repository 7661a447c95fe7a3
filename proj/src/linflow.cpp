#include "vvc/linflow.hpp"

namespace vvc {

void OperatingPoint::validate(Index m, Index n0) const {
    require_dim(v0.size(), n0, "operating point: v0");
    require_dim(p.size(), m, "operating point: p");
    require_dim(qc.size(), m, "operating point: qc");
    if (!v0.allFinite() || !p.allFinite() || !qc.allFinite())
        throw_data("operating point contains non-finite entries");
    if ((v0.array() <= 0).any()) throw_data("squared slack voltages must be positive");
}

VoltageProfile predict_voltages(const LinearSensitivityModel& model, const Vector& qg, const Vector& c) {
    require_dim(qg.size(), model.m(), "predict_voltages: qg");
    require_dim(c.size(), model.m(), "predict_voltages: c");
    return {model.m_matrix() * qg + c};
}

BranchFlows branch_flows(const LinearSensitivityModel& model, const Vector& p, const Vector& q) {
    require_dim(p.size(), model.m(), "branch_flows: p");
    require_dim(q.size(), model.m(), "branch_flows: q");
    return {-model.solve_a(p), -model.solve_a(q)};
}

}  // namespace vvc
