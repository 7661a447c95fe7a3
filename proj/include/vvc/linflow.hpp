#ifndef VVC_LINFLOW_HPP
#define VVC_LINFLOW_HPP

#include "vvc/linear_model.hpp"
#include "vvc/types.hpp"

namespace vvc {

/// Exogenous conditions of one evaluation: squared slack voltages and the
/// non-DER nodal consumptions, all per-unit.
struct OperatingPoint {
    Vector v0;  // n0, per-unit^2, > 0
    Vector p;   // m
    Vector qc;  // m

    void validate(Index m, Index n0) const;
};

struct VoltageProfile {
    Vector v;  // squared magnitudes, per-unit^2
};

/// v = M qg + c.
VoltageProfile predict_voltages(const LinearSensitivityModel& model, const Vector& qg, const Vector& c);

/// Per-segment flows implied by nodal injections: P = -A^{-1} p, Q = -A^{-1} q.
/// The flow on a segment equals the sum of consumptions at and below its
/// to-bus, restricted to the phases it carries.
struct BranchFlows {
    Vector p;  // per segment phase circuit, stacking order
    Vector q;
};
BranchFlows branch_flows(const LinearSensitivityModel& model, const Vector& p, const Vector& q);

}  // namespace vvc

#endif
