#include "vvc/upperlayer.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace vvc {

void DiscreteDeviceConfig::validate(Index m, Index n0) const {
    require_dim(tap_step.size(), n0, "devices: tap_step");
    if ((tap_step.array() <= 0).any()) throw_data("devices: tap_step must be positive");
    if (tap_min > tap_max) throw_data("devices: empty tap range");
    if (tap_change_limit < 0 || cb_switch_limit < 0) throw_data("devices: negative change limit");
    require_dim(cb_unit_var.size(), m, "devices: cb_unit_var");
    require_dim(cb_max.size(), m, "devices: cb_max");
    if ((cb_unit_var.array() < 0).any() || (cb_max.array() < 0).any())
        throw_data("devices: negative capacitor rating");
    if (weight_v <= 0 || weight_tap <= 0 || weight_cb <= 0) throw_data("devices: weights must be positive");
    if (enumeration_cap < 1) throw_data("devices: enumeration_cap must be positive");
}

DiscreteDeviceConfig DiscreteDeviceConfig::from_network(const NetworkModel& net, Scalar weight_v,
                                                        Scalar weight_tap, Scalar weight_cb) {
    DiscreteDeviceConfig d;
    const Index m = net.node_count();
    const Index n0 = net.root_phase_count();
    if (net.oltc()) {
        d.tap_step = net.oltc()->tap_step;
        d.tap_min = net.oltc()->tap_min;
        d.tap_max = net.oltc()->tap_max;
        d.tap_change_limit = net.oltc()->tap_change_limit;
    } else {
        d.tap_step = Vector::Constant(n0, 0.00625);
        d.tap_min = d.tap_max = 0;  // no OLTC declared: tap pinned at neutral
        d.tap_change_limit = 0;
    }
    d.cb_unit_var = Vector::Zero(m);
    d.cb_max = IntVector::Zero(m);
    int switch_limit = 1;
    for (const CapacitorBankSpec& cb : net.capacitor_banks()) {
        const Bus& bus = net.buses()[static_cast<size_t>(net.bus_position(cb.bus))];
        const auto ph = bus.phases.ordered();
        for (int k = 0; k < bus.phases.size(); ++k) {
            const Index node = net.node_index(cb.bus, ph[static_cast<size_t>(k)]);
            d.cb_unit_var[node] = cb.unit_var_pu;
            d.cb_max[node] = cb.max_units;
        }
        switch_limit = cb.switch_limit;
    }
    d.cb_switch_limit = switch_limit;
    d.weight_v = weight_v;
    d.weight_tap = weight_tap;
    d.weight_cb = weight_cb;
    return d;
}

Vector oltc_squared_voltage(const IntVector& n_tap, const Vector& tap_step) {
    require_dim(n_tap.size(), tap_step.size(), "oltc_squared_voltage");
    return Vector::Ones(n_tap.size()) + 2.0 * n_tap.cast<Scalar>().cwiseProduct(tap_step);
}

Vector oltc_squared_voltage_exact(const IntVector& n_tap, const Vector& tap_step) {
    require_dim(n_tap.size(), tap_step.size(), "oltc_squared_voltage_exact");
    const Vector ratio = Vector::Ones(n_tap.size()) + n_tap.cast<Scalar>().cwiseProduct(tap_step);
    return ratio.cwiseProduct(ratio);
}

Vector cb_reactive(const IntVector& n_cb, const Vector& unit_var, const IntVector& cb_max) {
    require_dim(unit_var.size(), n_cb.size(), "cb_reactive: unit_var");
    require_dim(cb_max.size(), n_cb.size(), "cb_reactive: cb_max");
    for (Index i = 0; i < n_cb.size(); ++i)
        if (n_cb[i] < 0 || n_cb[i] > cb_max[i])
            throw_data("cb_reactive: bank count out of range at node " + std::to_string(i));
    return n_cb.cast<Scalar>().cwiseProduct(unit_var);
}

void MpcProblem::validate(Index m, Index n0) const {
    if (horizon < 1) throw_data("mpc: horizon must be at least 1");
    if (p.rows() != horizon || ql.rows() != horizon || qg_lower.rows() != horizon || qg_upper.rows() != horizon)
        throw_data("mpc: forecast length must equal the horizon");
    require_dim(p.cols(), m, "mpc: p");
    require_dim(ql.cols(), m, "mpc: ql");
    require_dim(qg_lower.cols(), m, "mpc: qg_lower");
    require_dim(qg_upper.cols(), m, "mpc: qg_upper");
    require_dim(tap0.size(), n0, "mpc: tap0");
    require_dim(cb0.size(), m, "mpc: cb0");
    if ((qg_lower.array() > qg_upper.array()).any()) throw_data("mpc: VAr bounds cross");
}

namespace {

// Enumerate integer vectors whose entries move at most `limit` from `prev`
// inside [lo, hi], in lexicographic order.
void enumerate_moves(const IntVector& prev, int lo, int hi, int limit,
                     const std::vector<Index>& slots, IntVector base,
                     size_t pos, std::vector<IntVector>& out) {
    if (pos == slots.size()) {
        out.push_back(base);
        return;
    }
    const Index i = slots[pos];
    const int from = std::max(lo, prev[i] - limit);
    const int to = std::min(hi, prev[i] + limit);
    for (int v = from; v <= to; ++v) {
        base[i] = v;
        enumerate_moves(prev, lo, hi, limit, slots, base, pos + 1, out);
    }
}

std::vector<IntVector> tap_choices(const IntVector& prev, const DiscreteDeviceConfig& d) {
    std::vector<Index> slots(static_cast<size_t>(prev.size()));
    for (size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<Index>(i);
    std::vector<IntVector> out;
    enumerate_moves(prev, d.tap_min, d.tap_max, d.tap_change_limit, slots, prev, 0, out);
    return out;
}

std::vector<IntVector> cb_choices(const IntVector& prev, const DiscreteDeviceConfig& d,
                                  const std::vector<Index>& cb_nodes) {
    std::vector<IntVector> out;
    if (cb_nodes.empty()) {
        out.push_back(prev);
        return out;
    }
    // Per-node ranges differ, so recurse manually.
    std::function<void(size_t, IntVector&)> rec = [&](size_t pos, IntVector& base) {
        if (pos == cb_nodes.size()) {
            out.push_back(base);
            return;
        }
        const Index i = cb_nodes[pos];
        const int from = std::max(0, prev[i] - d.cb_switch_limit);
        const int to = std::min(d.cb_max[i], prev[i] + d.cb_switch_limit);
        for (int v = from; v <= to; ++v) {
            base[i] = v;
            rec(pos + 1, base);
        }
    };
    IntVector base = prev;
    rec(0, base);
    return out;
}

long worst_case_choices(const DiscreteDeviceConfig& d, Index n0, const std::vector<Index>& cb_nodes) {
    long per_step = 1;
    const long tap_span = std::min<long>(d.tap_max - d.tap_min + 1, 2L * d.tap_change_limit + 1);
    for (Index i = 0; i < n0; ++i) per_step *= std::max(1L, tap_span);
    for (Index i : cb_nodes)
        per_step *= std::max(1L, std::min<long>(d.cb_max[i] + 1, 2L * d.cb_switch_limit + 1));
    return per_step;
}

}  // namespace

DiscreteSchedule solve_mpc(const LinearSensitivityModel& model, const MpcProblem& problem,
                           const DiscreteDeviceConfig& devices, const ControllerConfig& cfg) {
    const Index m = model.m();
    const Index n0 = model.n0();
    devices.validate(m, n0);
    problem.validate(m, n0);
    cfg.validate();

    std::vector<Index> cb_nodes;
    for (Index i = 0; i < m; ++i)
        if (devices.cb_max[i] > 0) cb_nodes.push_back(i);

    const long per_step = worst_case_choices(devices, n0, cb_nodes);
    long total = 1;
    for (int t = 0; t < problem.horizon; ++t) {
        if (total > devices.enumeration_cap / std::max(1L, per_step)) {
            total = devices.enumeration_cap + 1;
            break;
        }
        total *= per_step;
    }
    if (total > devices.enumeration_cap)
        throw_data("mpc: discrete decision space exceeds the enumeration cap (" +
                   std::to_string(devices.enumeration_cap) + ")");

    const Vector v_ref = problem.v_ref.size() > 0 ? problem.v_ref : Vector::Ones(m);
    require_dim(v_ref.size(), m, "mpc: v_ref");

    // Weighted voltage term 0.5 wv ||M qg + c - v_ref||^2 folded into the
    // standard solver by scaling the model with sqrt(wv).
    const Scalar sw = std::sqrt(devices.weight_v);
    const Matrix mw = sw * model.m_matrix();
    const Matrix hw = devices.weight_v * model.hessian();
    const Vector zero_ref = Vector::Zero(m);

    // The voltage cost of a step depends only on (step, taps, banks); cache it
    // together with the minimizer across enumeration branches.
    std::map<std::vector<int>, std::pair<Scalar, Vector>> cache;
    auto step_cost = [&](int t, const IntVector& tap, const IntVector& cb) {
        std::vector<int> key;
        key.reserve(1 + static_cast<size_t>(tap.size()) + cb_nodes.size());
        key.push_back(t);
        for (Index i = 0; i < tap.size(); ++i) key.push_back(tap[i]);
        for (Index i : cb_nodes) key.push_back(cb[i]);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;

        const Vector v0 = oltc_squared_voltage(tap, devices.tap_step);
        const Vector qcb = cb_reactive(cb, devices.cb_unit_var, devices.cb_max);
        const Vector qc_eff = problem.ql.row(t).transpose() - qcb;
        const Vector c = compute_c(model, v0, problem.p.row(t).transpose(), qc_eff);

        VarLimits limits{problem.qg_lower.row(t).transpose(), problem.qg_upper.row(t).transpose()};
        const SolveResult res = pnm_solve(mw, hw, sw * (c - v_ref), zero_ref, limits, cfg,
                                          limits.clamp(Vector::Zero(m)));
        auto value = std::make_pair(res.objective, res.qg);
        cache.emplace(std::move(key), value);
        return value;
    };

    DiscreteSchedule best;
    best.objective = std::numeric_limits<Scalar>::infinity();
    long best_moves = 0;

    std::vector<IntVector> taps(static_cast<size_t>(problem.horizon));
    std::vector<IntVector> cbs(static_cast<size_t>(problem.horizon));
    std::vector<Vector> qgs(static_cast<size_t>(problem.horizon));

    std::function<void(int, const IntVector&, const IntVector&, Scalar, long)> dfs =
        [&](int t, const IntVector& prev_tap, const IntVector& prev_cb, Scalar cost, long moves) {
            if (t == problem.horizon) {
                bool better = !std::isfinite(best.objective);
                if (!better) {
                    const Scalar tie = 1e-12 * (1.0 + std::abs(best.objective));
                    better = cost < best.objective - tie ||
                             (std::abs(cost - best.objective) <= tie && moves < best_moves);
                }
                if (better) {
                    best.objective = cost;
                    best.n_tap = taps;
                    best.n_cb = cbs;
                    best.qg = qgs;
                    best_moves = moves;
                }
                return;
            }
            for (const IntVector& tap : tap_choices(prev_tap, devices)) {
                const Scalar tap_cost =
                    0.5 * devices.weight_tap * (tap - prev_tap).cast<Scalar>().squaredNorm();
                const long tap_moves = (tap - prev_tap).cwiseAbs().sum();
                for (const IntVector& cb : cb_choices(prev_cb, devices, cb_nodes)) {
                    const Scalar cb_cost =
                        0.5 * devices.weight_cb * (cb - prev_cb).cast<Scalar>().squaredNorm();
                    const long cb_moves = (cb - prev_cb).cwiseAbs().sum();
                    const auto [v_cost, qg] = step_cost(t, tap, cb);
                    taps[static_cast<size_t>(t)] = tap;
                    cbs[static_cast<size_t>(t)] = cb;
                    qgs[static_cast<size_t>(t)] = qg;
                    dfs(t + 1, tap, cb, cost + v_cost + tap_cost + cb_cost,
                        moves + tap_moves + cb_moves);
                }
            }
        };

    // First-step changes count against the pre-horizon device state.
    IntVector tap0 = problem.tap0;
    for (Index i = 0; i < tap0.size(); ++i)
        if (tap0[i] < devices.tap_min || tap0[i] > devices.tap_max)
            throw_data("mpc: initial tap position out of range");
    for (Index i = 0; i < m; ++i)
        if (problem.cb0[i] < 0 || problem.cb0[i] > devices.cb_max[i])
            throw_data("mpc: initial bank count out of range");

    dfs(0, tap0, problem.cb0, 0.0, 0);
    return best;
}

FirstStepCommand apply_receding_horizon(const DiscreteSchedule& schedule) {
    if (schedule.n_tap.empty() || schedule.n_cb.empty())
        throw_data("apply_receding_horizon: empty schedule");
    return {schedule.n_tap.front(), schedule.n_cb.front()};
}

}  // namespace vvc
