#include "vvc/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vvc {

void ScenarioSeries::validate(Index m, Index n0) const {
    if (resolution_s <= 0) throw_data("scenario: resolution_s must be positive");
    if (control_period_s <= 0) throw_data("scenario: control_period_s must be positive");
    if (noise_std < 0) throw_data("scenario: noise_std must be non-negative");
    const Index n = p.rows();
    if (n < 1) throw_data("scenario: at least one step is required");
    if (qc.rows() != n || pv.rows() != n || v0.rows() != n)
        throw_data("scenario: all series must have the same number of steps");
    require_dim(p.cols(), m, "scenario: p");
    require_dim(qc.cols(), m, "scenario: qc");
    require_dim(pv.cols(), m, "scenario: pv");
    require_dim(v0.cols(), n0, "scenario: v0");
    require_dim(capacity.size(), m, "scenario: capacity");
    if (!p.allFinite() || !qc.allFinite() || !pv.allFinite() || !v0.allFinite())
        throw_data("scenario: series contain non-finite entries");
    if ((v0.array() <= 0).any()) throw_data("scenario: squared slack voltages must be positive");
    if ((pv.array() < 0).any()) throw_data("scenario: DER real output must be non-negative");
    for (Index t = 0; t < n; ++t)
        for (Index i = 0; i < m; ++i)
            if (pv(t, i) > capacity[i] + 1e-12)
                throw_data("scenario: DER real output exceeds inverter capacity at step " + std::to_string(t));
}

int ScenarioSeries::data_index(Scalar t) const {
    const int idx = static_cast<int>(std::floor(t / resolution_s));
    return std::clamp(idx, 0, steps() - 1);
}

VarLimits estimate_var_limits(const Vector& capacity, const Vector& pv_real) {
    require_dim(pv_real.size(), capacity.size(), "estimate_var_limits");
    const Index m = capacity.size();
    Vector upper(m);
    for (Index i = 0; i < m; ++i) {
        if (pv_real[i] < 0) throw_data("estimate_var_limits: negative DER real output");
        if (pv_real[i] > capacity[i] + 1e-12)
            throw_data("estimate_var_limits: DER real output exceeds inverter capacity");
        const Scalar headroom = capacity[i] * capacity[i] - pv_real[i] * pv_real[i];
        upper[i] = std::sqrt(std::max(0.0, headroom));
    }
    return {-upper, upper};
}

Vector feedback_gradient(const Matrix& m_matrix, const Vector& v_measured, const Vector& v_ref) {
    return gradient(m_matrix, v_measured, v_ref);
}

OnlineStepResult online_step(const Vector& qg, const LinearSensitivityModel& model, const Vector& capacity,
                             const OnlineStepData& data, const Vector& v_ref, const ControllerConfig& cfg,
                             ControllerKind kind) {
    const Index m = model.m();
    require_dim(qg.size(), m, "online_step: qg");
    require_dim(data.v_measured.size(), m, "online_step: v_measured");

    OnlineStepResult out;
    out.limits = estimate_var_limits(capacity, data.pv);
    const Vector q = out.limits.clamp(qg);
    out.c = compute_c(model, data.v0, data.p, data.qc);

    const Vector g = feedback_gradient(model.m_matrix(), data.v_measured, v_ref);
    out.objective_measured = 0.5 * (data.v_measured - v_ref).squaredNorm();

    switch (kind) {
        case ControllerKind::pnm: {
            const Vector w = compute_w(q, g, cfg, out.limits);
            const std::vector<int> active = compute_active_set(q, g, w, cfg, out.limits);
            const ScalingMatrix d(model.hessian(), active);
            const Vector u = d.apply(g);
            const ArmijoResult ar = armijo_step(q, g, u, active, model.m_matrix(), out.c, v_ref,
                                                out.objective_measured, out.limits, cfg, 0);
            out.qg_next = ar.qg_next;
            out.alpha = ar.alpha;
            out.backtracks = ar.backtracks;
            out.exhausted = ar.exhausted;
            out.active_size = static_cast<int>(active.size());
            break;
        }
        case ControllerKind::dsgp: {
            const Vector u = model.hessian().diagonal().cwiseAbs().cwiseInverse().cwiseProduct(g);
            std::vector<int> all(static_cast<size_t>(m));
            for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
            const ArmijoResult ar = armijo_step(q, g, u, all, model.m_matrix(), out.c, v_ref,
                                                out.objective_measured, out.limits, cfg, 0);
            out.qg_next = ar.qg_next;
            out.alpha = ar.alpha;
            out.backtracks = ar.backtracks;
            out.exhausted = ar.exhausted;
            break;
        }
        case ControllerKind::gp: {
            const Scalar step = cfg.gp_step > 0 ? cfg.gp_step : 1.0 / power_iteration_lmax(model.hessian());
            out.qg_next = out.limits.clamp(q - step * g);
            out.alpha = step;
            break;
        }
    }
    return out;
}

namespace {

Vector noisy(const Vector& v, Scalar noise_std, std::mt19937_64& rng) {
    if (noise_std <= 0) return v;
    std::normal_distribution<Scalar> dist(0.0, noise_std);
    Vector out = v;
    for (Index i = 0; i < out.size(); ++i) out[i] += dist(rng);
    return out;
}

void finalize_summary(SimulationTrace& trace) {
    Scalar sum = 0.0;
    Scalar vmin = std::numeric_limits<Scalar>::infinity();
    Scalar vmax = -vmin;
    for (const TraceRow& row : trace.rows) {
        sum += row.objective;
        vmin = std::min(vmin, row.min_vmag);
        vmax = std::max(vmax, row.max_vmag);
        if (row.min_vmag < 0.95) ++trace.undervoltage_steps;
        if (row.max_vmag > 1.05) ++trace.overvoltage_steps;
        if (!row.plant_converged) ++trace.plant_failures;
        if (row.exhausted) ++trace.armijo_exhaustions;
    }
    trace.time_avg_objective = trace.rows.empty() ? 0.0 : sum / static_cast<Scalar>(trace.rows.size());
    trace.min_vmag = vmin;
    trace.max_vmag = vmax;
}

}  // namespace

SimulationResult run_simulation(const NetworkModel& net, const LinearSensitivityModel& model,
                                const ScenarioSeries& scenario, const SimulationOptions& options) {
    const Index m = model.m();
    scenario.validate(m, model.n0());
    options.cfg.validate();

    const Vector v_ref = options.v_ref.size() > 0 ? options.v_ref : Vector::Ones(m);
    require_dim(v_ref.size(), m, "run_simulation: v_ref");

    ControllerConfig cfg = options.cfg;
    if (options.controller == ControllerKind::gp && cfg.gp_step <= 0)
        cfg.gp_step = 1.0 / power_iteration_lmax(model.hessian());

    const int n_ctrl = std::max(1, static_cast<int>(std::floor(scenario.span_s() / scenario.control_period_s)));

    auto run_pass = [&](bool controlled) {
        SimulationTrace trace;
        trace.rows.reserve(static_cast<size_t>(n_ctrl));
        std::mt19937_64 rng(options.seed);
        Vector q_held = Vector::Zero(m);

        for (int k = 0; k < n_ctrl; ++k) {
            const Scalar t = static_cast<Scalar>(k) * scenario.control_period_s;
            const int idx = scenario.data_index(t);
            const int c_idx = options.stale_c ? std::max(0, idx - 1) : idx;

            OperatingPoint point;
            point.v0 = scenario.v0.row(idx).transpose();
            point.p = (scenario.p.row(idx) - scenario.pv.row(idx)).transpose();  // net real consumption
            point.qc = scenario.qc.row(idx).transpose();

            const Vector pv_now = scenario.pv.row(idx).transpose();
            const VarLimits limits = estimate_var_limits(scenario.capacity, pv_now);
            const Vector q_applied = controlled ? limits.clamp(q_held) : Vector::Zero(m);

            TraceRow row;
            row.time_s = t;
            row.qg = q_applied;
            row.q_lower = limits.lower;
            row.q_upper = limits.upper;

            Vector v_true;
            if (options.plant == PlantChoice::nonlinear) {
                const PlantSolution sol = solve_nonlinear(net, point, q_applied, options.sweep);
                row.plant_converged = sol.converged;
                v_true = sol.squared_magnitudes;
            } else {
                const Vector c_now = compute_c(model, point.v0, point.p, point.qc);
                v_true = predict_voltages(model, q_applied, c_now).v;
            }
            const Vector v_meas = noisy(v_true, scenario.noise_std, rng);
            row.v_measured = v_meas;
            row.objective = 0.5 * (v_meas - v_ref).squaredNorm();
            const Vector vmag = v_true.cwiseMax(0.0).cwiseSqrt();
            row.min_vmag = vmag.minCoeff();
            row.max_vmag = vmag.maxCoeff();

            if (controlled && row.plant_converged) {
                OnlineStepData data;
                data.v0 = scenario.v0.row(c_idx).transpose();
                data.p = (scenario.p.row(c_idx) - scenario.pv.row(c_idx)).transpose();
                data.qc = scenario.qc.row(c_idx).transpose();
                data.pv = pv_now;
                data.v_measured = v_meas;
                const OnlineStepResult step = online_step(q_applied, model, scenario.capacity, data,
                                                          v_ref, cfg, options.controller);
                row.backtracks = step.backtracks;
                row.active_size = step.active_size;
                row.exhausted = step.exhausted;
                q_held = step.qg_next;
            } else if (controlled) {
                q_held = q_applied;  // plant failed: hold the command
            }

            trace.rows.push_back(std::move(row));
        }
        finalize_summary(trace);
        return trace;
    };

    SimulationResult result;
    result.controlled = run_pass(true);
    if (options.with_baseline) result.baseline = run_pass(false);
    return result;
}

}  // namespace vvc
