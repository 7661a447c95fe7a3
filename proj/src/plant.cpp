#include "vvc/plant.hpp"

#include <cmath>
#include <numbers>

namespace vvc {

ComplexVector slack_phasors(const NetworkModel& net, const Vector& v0) {
    require_dim(v0.size(), net.root_phase_count(), "slack_phasors: v0");
    constexpr Scalar third = 2.0 * std::numbers::pi / 3.0;
    const auto phases = net.buses()[0].phases.ordered();
    ComplexVector out(net.root_phase_count());
    for (Index k = 0; k < out.size(); ++k) {
        if (v0[k] <= 0) throw_data("slack_phasors: squared slack voltage must be positive");
        const Scalar mag = std::sqrt(v0[k]);
        switch (phases[static_cast<size_t>(k)]) {
            case Phase::a: out[k] = std::polar(mag, 0.0); break;
            case Phase::b: out[k] = std::polar(mag, -third); break;
            case Phase::c: out[k] = std::polar(mag, third); break;
        }
    }
    return out;
}

PlantSolution solve_nonlinear(const NetworkModel& net, const OperatingPoint& point, const Vector& qg,
                              const SweepConfig& cfg) {
    const Index m = net.node_count();
    point.validate(m, net.root_phase_count());
    require_dim(qg.size(), m, "solve_nonlinear: qg");

    const ComplexVector v_root = slack_phasors(net, point.v0);
    const auto& buses = net.buses();
    const auto& segments = net.segments();
    const auto& order = net.topo_order();

    // Per-bus views into the global stacking; the root indexes v_root.
    const int nb = static_cast<int>(buses.size());
    std::vector<Index> offset(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) offset[static_cast<size_t>(b)] = (b == 0) ? 0 : net.node_offset(b);

    // Row of each segment-phase at the parent bus (into v_root for root parents).
    std::vector<std::vector<Index>> parent_rows(segments.size());
    for (size_t si = 0; si < segments.size(); ++si) {
        const LineSegment& s = segments[si];
        const auto ph = s.phases.ordered();
        parent_rows[si].resize(static_cast<size_t>(s.phases.size()));
        for (int k = 0; k < s.phases.size(); ++k)
            parent_rows[si][static_cast<size_t>(k)] = net.node_index(s.from, ph[static_cast<size_t>(k)]);
    }

    ComplexVector v(m);
    for (int b = 1; b < nb; ++b) {
        const auto ph = buses[static_cast<size_t>(b)].phases.ordered();
        for (int k = 0; k < buses[static_cast<size_t>(b)].phases.size(); ++k)
            v[offset[static_cast<size_t>(b)] + k] = v_root[net.node_index(0, ph[static_cast<size_t>(k)])];
    }

    const Vector q_net = point.qc - qg;
    std::vector<ComplexVector> seg_current(segments.size());

    PlantSolution sol;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        // Backward: branch currents, children before parents.
        for (auto bit = order.rbegin(); bit != order.rend(); ++bit) {
            const int b = *bit;
            if (b == 0) continue;
            const int si = net.incoming_segment(b);
            const LineSegment& s = segments[static_cast<size_t>(si)];
            const int n = s.phases.size();
            ComplexVector cur = ComplexVector::Zero(n);
            for (int k = 0; k < n; ++k) {
                const Index node = offset[static_cast<size_t>(b)] + k;
                const Complex load(point.p[node], q_net[node]);
                if (load != Complex(0.0, 0.0)) {
                    const Complex vk = v[node];
                    if (std::abs(vk) < 1e-6)
                        throw Error(ErrorKind::convergence,
                                    "voltage collapse at node " + net.node_label(node) + " during sweep");
                    cur[k] = std::conj(load / vk);
                }
            }
            for (int ci : net.child_segments(b)) {
                const LineSegment& cs = segments[static_cast<size_t>(ci)];
                const auto cph = cs.phases.ordered();
                for (int k = 0; k < cs.phases.size(); ++k)
                    cur[s.phases.position(cph[static_cast<size_t>(k)])] += seg_current[static_cast<size_t>(ci)][k];
            }
            seg_current[static_cast<size_t>(si)] = std::move(cur);
        }

        // Forward: voltage drops, parents before children.
        Scalar max_dv = 0.0;
        for (int b : order) {
            if (b == 0) continue;
            const int si = net.incoming_segment(b);
            const LineSegment& s = segments[static_cast<size_t>(si)];
            const int parent = net.parent_position(b);
            const int n = s.phases.size();
            ComplexVector v_up(n);
            for (int k = 0; k < n; ++k) {
                const Index row = parent_rows[static_cast<size_t>(si)][static_cast<size_t>(k)];
                v_up[k] = (parent == 0) ? v_root[row] : v[row];
            }
            const ComplexVector v_new = v_up - s.z * seg_current[static_cast<size_t>(si)];
            for (int k = 0; k < n; ++k) {
                const Index node = offset[static_cast<size_t>(b)] + k;
                max_dv = std::max(max_dv, std::abs(v_new[k] - v[node]));
                v[node] = v_new[k];
            }
        }

        sol.iterations = it;
        sol.residual = max_dv;
        sol.residual_history.push_back(max_dv);
        if (max_dv < cfg.tolerance) {
            sol.converged = true;
            break;
        }
    }

    sol.node_voltages = std::move(v);
    sol.squared_magnitudes = sol.node_voltages.cwiseAbs2();
    return sol;
}

Vector measure_squared_voltages(const PlantSolution& sol, Scalar noise_std, std::mt19937_64* rng) {
    Vector vm = sol.squared_magnitudes;
    if (noise_std > 0.0) {
        if (rng == nullptr) throw_config("noisy measurements require a random generator");
        std::normal_distribution<Scalar> dist(0.0, noise_std);
        for (Index i = 0; i < vm.size(); ++i) vm[i] += dist(*rng);
    }
    return vm;
}

}  // namespace vvc
