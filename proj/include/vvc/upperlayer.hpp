#ifndef VVC_UPPERLAYER_HPP
#define VVC_UPPERLAYER_HPP

#include "vvc/linear_model.hpp"
#include "vvc/network.hpp"
#include "vvc/pnm.hpp"
#include "vvc/types.hpp"

#include <vector>

namespace vvc {

/// Discrete device ratings and the objective weights of the slow-timescale
/// layer. Capacitor vectors are m-sized with zeros at nodes without banks.
struct DiscreteDeviceConfig {
    Vector tap_step;  // per head-bus phase
    int tap_min = -16;
    int tap_max = 16;
    int tap_change_limit = 2;  // per control period, per phase
    Vector cb_unit_var;        // m
    IntVector cb_max;          // m
    int cb_switch_limit = 1;   // per control period, per node
    Scalar weight_v = 1.0;
    Scalar weight_tap = 0.1;
    Scalar weight_cb = 0.1;
    long enumeration_cap = 50000;

    void validate(Index m, Index n0) const;
    static DiscreteDeviceConfig from_network(const NetworkModel& net, Scalar weight_v = 1.0,
                                             Scalar weight_tap = 0.1, Scalar weight_cb = 0.1);
};

/// Linearized squared head voltage 1 + 2 n_tap tap_step (per phase).
Vector oltc_squared_voltage(const IntVector& n_tap, const Vector& tap_step);
/// Exact squared head voltage (1 + n_tap tap_step)^2, for error reporting;
/// the linearization error is exactly (n_tap tap_step)^2.
Vector oltc_squared_voltage_exact(const IntVector& n_tap, const Vector& tap_step);

/// Reactive power injected by the banks: n_cb (element-wise) unit_var.
Vector cb_reactive(const IntVector& n_cb, const Vector& unit_var, const IntVector& cb_max);

/// Receding-horizon instance: forecasts over the horizon plus the device
/// state the first-step change limits count against.
struct MpcProblem {
    int horizon = 1;
    Scalar period_s = 900.0;
    Matrix p;         // horizon x m, net real consumption forecast
    Matrix ql;        // horizon x m, reactive load forecast (before banks)
    Matrix qg_lower;  // horizon x m
    Matrix qg_upper;  // horizon x m
    IntVector tap0;   // n0
    IntVector cb0;    // m
    Vector v_ref;     // empty selects ones

    void validate(Index m, Index n0) const;
};

struct DiscreteSchedule {
    std::vector<IntVector> n_tap;  // per step
    std::vector<IntVector> n_cb;
    std::vector<Vector> qg;        // continuous minimizer per step (not dispatched)
    Scalar objective = 0.0;
};

/// Globally optimal schedule by exhaustive enumeration of the discrete
/// trajectories; for each one the per-step continuous VAr problem (strictly
/// convex, box constrained, separable across steps once the devices are
/// fixed) is solved exactly. Ties go to fewer total device movements, then to
/// the lexicographically smallest trajectory. Throws when the discrete space
/// exceeds enumeration_cap.
DiscreteSchedule solve_mpc(const LinearSensitivityModel& model, const MpcProblem& problem,
                           const DiscreteDeviceConfig& devices, const ControllerConfig& cfg = {});

struct FirstStepCommand {
    IntVector n_tap;
    IntVector n_cb;
};

/// Receding-horizon dispatch: only the first step of the schedule is applied.
FirstStepCommand apply_receding_horizon(const DiscreteSchedule& schedule);

}  // namespace vvc

#endif
