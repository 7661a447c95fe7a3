#ifndef VVC_ONLINE_HPP
#define VVC_ONLINE_HPP

#include "vvc/linear_model.hpp"
#include "vvc/plant.hpp"
#include "vvc/pnm.hpp"
#include "vvc/types.hpp"

#include <optional>
#include <vector>

namespace vvc {

/// Time-stamped operating data at a uniform resolution. `p` is gross load;
/// the DER real output `pv` nets against it and bounds the VAr headroom.
struct ScenarioSeries {
    Scalar resolution_s = 10.0;
    Scalar control_period_s = 10.0;
    Scalar noise_std = 0.0;  // per-unit^2 on squared-voltage measurements
    Matrix p;                // steps x m
    Matrix qc;               // steps x m
    Matrix pv;               // steps x m
    Matrix v0;               // steps x n0
    Vector capacity;         // m, per-phase-node inverter apparent power

    int steps() const { return static_cast<int>(p.rows()); }
    Scalar span_s() const { return resolution_s * static_cast<Scalar>(steps()); }
    void validate(Index m, Index n0) const;

    /// Zero-order-hold sample at time t (seconds from start).
    int data_index(Scalar t) const;
};

/// VAr headroom of the inverters: +/- sqrt(capacity^2 - pv^2), zero where
/// there is no DER. Throws if the real output exceeds the rating.
VarLimits estimate_var_limits(const Vector& capacity, const Vector& pv_real);

/// Closed-loop gradient estimate from a squared-voltage measurement:
/// M^T (v_measured - v_ref). Coincides with the model gradient whenever the
/// measurement comes from the linear model itself.
Vector feedback_gradient(const Matrix& m_matrix, const Vector& v_measured, const Vector& v_ref);

enum class ControllerKind { pnm, gp, dsgp };
enum class PlantChoice { nonlinear, linear };

/// Everything one control cycle consumes besides the held command.
struct OnlineStepData {
    Vector v0;          // n0
    Vector p;           // m, net real consumption
    Vector qc;          // m
    Vector pv;          // m, DER real output (for the limit update)
    Vector v_measured;  // m, squared magnitudes fed back by the bus agents
};

struct OnlineStepResult {
    Vector qg_next;
    VarLimits limits;
    Vector c;
    Scalar objective_measured = 0.0;
    Scalar alpha = 0.0;
    int backtracks = 0;
    bool exhausted = false;
    int active_size = 0;
};

/// One control cycle: refresh c(t) and the VAr limits, estimate the gradient
/// from the measurement, and take a single projected step. The backtracking
/// test compares the measured objective against the model-predicted objective
/// of the trial command (same c(t) on both sides of the prediction).
OnlineStepResult online_step(const Vector& qg, const LinearSensitivityModel& model, const Vector& capacity,
                             const OnlineStepData& data, const Vector& v_ref, const ControllerConfig& cfg,
                             ControllerKind kind = ControllerKind::pnm);

struct TraceRow {
    Scalar time_s = 0.0;
    Vector qg;          // command applied during this step
    Vector v_measured;  // squared magnitudes
    Scalar objective = 0.0;
    int backtracks = 0;
    int active_size = 0;
    Vector q_lower, q_upper;
    Scalar min_vmag = 0.0, max_vmag = 0.0;
    bool plant_converged = true;
    bool exhausted = false;
};

struct SimulationTrace {
    std::vector<TraceRow> rows;
    Scalar time_avg_objective = 0.0;
    Scalar min_vmag = 0.0;
    Scalar max_vmag = 0.0;
    int undervoltage_steps = 0;  // steps with any node magnitude < 0.95
    int overvoltage_steps = 0;   // steps with any node magnitude > 1.05
    int plant_failures = 0;
    int armijo_exhaustions = 0;
};

struct SimulationOptions {
    ControllerKind controller = ControllerKind::pnm;
    PlantChoice plant = PlantChoice::nonlinear;
    ControllerConfig cfg;
    SweepConfig sweep;
    Vector v_ref;              // empty selects the flat profile of ones
    uint64_t seed = 0;         // measurement-noise stream
    bool with_baseline = false;  // also trace the uncontrolled (qg = 0) run
    bool stale_c = false;        // build c(t) from the previous step's data
};

struct SimulationResult {
    SimulationTrace controlled;
    std::optional<SimulationTrace> baseline;
};

/// Run the closed loop over the scenario: at each control period the plant is
/// solved at the held command, squared voltages are measured (optionally with
/// noise), and one online_step produces the next command. Commands always lie
/// inside the step's VAr limits; shrinking limits re-project the held command
/// before it is applied. A plant failure holds the previous command and flags
/// the run.
SimulationResult run_simulation(const NetworkModel& net, const LinearSensitivityModel& model,
                                const ScenarioSeries& scenario, const SimulationOptions& options);

}  // namespace vvc

#endif
