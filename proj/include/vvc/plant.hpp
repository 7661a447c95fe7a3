#ifndef VVC_PLANT_HPP
#define VVC_PLANT_HPP

#include "vvc/linflow.hpp"
#include "vvc/network.hpp"
#include "vvc/types.hpp"

#include <random>
#include <vector>

namespace vvc {

struct SweepConfig {
    Scalar tolerance = 1e-8;  // per-unit, on max |dV| per iteration
    int max_iterations = 200;
};

struct PlantSolution {
    ComplexVector node_voltages;  // m, global stacking order
    Vector squared_magnitudes;    // m
    int iterations = 0;
    Scalar residual = 0.0;
    bool converged = false;
    std::vector<Scalar> residual_history;
};

/// Solve the nonlinear constant-power flow of the feeder with a
/// backward/forward sweep: the backward pass aggregates branch currents
/// leaf-to-root from conj(S / V) load currents, the forward pass updates
/// voltages root-to-leaf via V_to = V_from - Z I. Net reactive consumption is
/// qc - qg. Non-convergence is reported through `converged`, not thrown;
/// a vanishing voltage under nonzero load throws (collapse).
PlantSolution solve_nonlinear(const NetworkModel& net, const OperatingPoint& point, const Vector& qg,
                              const SweepConfig& cfg = {});

/// Squared-magnitude measurement of a converged solution, optionally with
/// additive zero-mean Gaussian noise of standard deviation `noise_std`
/// (per-unit^2). Pass a generator to make noisy measurements reproducible.
Vector measure_squared_voltages(const PlantSolution& sol, Scalar noise_std = 0.0,
                                std::mt19937_64* rng = nullptr);

/// Slack phasors for squared magnitudes v0, at the conventional reference
/// angles 0, -120, +120 degrees for phases a, b, c.
ComplexVector slack_phasors(const NetworkModel& net, const Vector& v0);

}  // namespace vvc

#endif
