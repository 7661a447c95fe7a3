#include "vvc/feeder_gen.hpp"

#include "vvc/linear_model.hpp"
#include "vvc/linflow.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vvc {

namespace {

PhaseSet random_subset(PhaseSet parent, int want, std::mt19937_64& rng) {
    const auto ph = parent.ordered();
    std::vector<Phase> pool(ph.begin(), ph.begin() + parent.size());
    std::shuffle(pool.begin(), pool.end(), rng);
    PhaseSet out;
    for (int k = 0; k < want; ++k) out.insert(pool[static_cast<size_t>(k)]);
    return out;
}

ComplexMatrix random_impedance(int n, std::mt19937_64& rng, const FeederOptions& opt) {
    std::uniform_real_distribution<Scalar> x_self(0.02, 0.08);
    std::uniform_real_distribution<Scalar> xr(opt.xr_min, opt.xr_max);
    std::uniform_real_distribution<Scalar> mutual(0.20, 0.35);
    std::uniform_real_distribution<Scalar> mutual_r(0.15, 0.30);

    Vector xs(n), rs(n);
    for (int k = 0; k < n; ++k) {
        xs[k] = x_self(rng);
        rs[k] = xs[k] / xr(rng);
    }
    ComplexMatrix z(n, n);
    for (int i = 0; i < n; ++i) {
        z(i, i) = Complex(rs[i], xs[i]);
        for (int j = i + 1; j < n; ++j) {
            const Scalar xm = mutual(rng) * std::min(xs[i], xs[j]);
            const Scalar rm = mutual_r(rng) * std::min(rs[i], rs[j]);
            z(i, j) = z(j, i) = Complex(rm, xm);
        }
    }
    return z;
}

}  // namespace

NetworkModel generate_feeder(const FeederOptions& opt) {
    if (opt.buses < 2) throw_config("generate_feeder: at least 2 buses required");
    if (opt.target_min_voltage < 0.90 || opt.target_min_voltage >= 1.0)
        throw_config("generate_feeder: target_min_voltage must lie in [0.90, 1.0)");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<Scalar> unit(0.0, 1.0);

    // Three-phase buses form the primary backbone; laterals hang off any bus
    // and may drop phases. Keeping backbone parents three-phase stops the
    // phase count from decaying to one on deep feeders.
    const int n = opt.buses;
    std::vector<int> parent(static_cast<size_t>(n), 0);
    std::vector<PhaseSet> phases(static_cast<size_t>(n));
    phases[0] = PhaseSet::all();
    phases[1] = PhaseSet::all();  // keeps the head-bus phase set equal to its segment union
    std::vector<int> backbone{0, 1};
    for (int i = 2; i < n; ++i) {
        const Scalar u = unit(rng);
        if (u < opt.three_phase_fraction) {
            const int bp = unit(rng) < opt.chain_bias
                               ? backbone.back()
                               : backbone[std::uniform_int_distribution<size_t>(0, backbone.size() - 1)(rng)];
            parent[static_cast<size_t>(i)] = bp;
            phases[static_cast<size_t>(i)] = PhaseSet::all();
            backbone.push_back(i);
        } else {
            const int bp = unit(rng) < opt.chain_bias
                               ? i - 1
                               : std::uniform_int_distribution<int>(0, i - 1)(rng);
            parent[static_cast<size_t>(i)] = bp;
            const PhaseSet pp = phases[static_cast<size_t>(bp)];
            int want = 1;
            if (pp.size() >= 2 && u < opt.three_phase_fraction + opt.two_phase_fraction) want = 2;
            want = std::min(want, pp.size());
            phases[static_cast<size_t>(i)] = random_subset(pp, want, rng);
        }
    }

    std::vector<Bus> buses;
    std::vector<int> der_buses;
    for (int i = 0; i < n; ++i) {
        Bus b;
        b.id = i;
        b.phases = phases[static_cast<size_t>(i)];
        if (i > 0 && unit(rng) < opt.der_fraction) {
            b.der = Der{opt.der_capacity_pu};
            der_buses.push_back(i);
        }
        buses.push_back(std::move(b));
    }
    if (der_buses.empty()) {
        buses.back().der = Der{opt.der_capacity_pu};
        der_buses.push_back(n - 1);
    }

    std::vector<LineSegment> segments;
    for (int i = 1; i < n; ++i) {
        LineSegment s;
        s.from = parent[static_cast<size_t>(i)];
        s.to = i;
        s.phases = phases[static_cast<size_t>(i)];
        s.z = random_impedance(s.phases.size(), rng, opt);
        segments.push_back(std::move(s));
    }

    std::optional<OltcSpec> oltc;
    std::vector<CapacitorBankSpec> cbs;
    if (opt.with_devices) {
        // Desk-scale ranges: the schedule layer enumerates the discrete space
        // exhaustively, so keep taps tight and attach one bank on the
        // narrowest DER bus.
        OltcSpec o;
        o.tap_step = Vector::Constant(3, 0.00625);
        o.tap_min = -2;
        o.tap_max = 2;
        o.tap_change_limit = 1;
        oltc = std::move(o);
        int cb_bus = der_buses.front();
        for (int b : der_buses)
            if (phases[static_cast<size_t>(b)].size() < phases[static_cast<size_t>(cb_bus)].size())
                cb_bus = b;
        cbs.push_back({cb_bus, 0.1, 1, 1});
    }

    NetworkModel net = NetworkModel::build(opt.base_voltage_v, opt.base_power_va, buses, segments, oltc, cbs);

    // Rescale every impedance so the linear baseline at nominal loading puts
    // the deepest node at the target magnitude.
    const LinearSensitivityModel model = build_linear_model(net);
    const Index m = net.node_count();
    const Vector c = compute_c(model, Vector::Ones(net.root_phase_count()),
                               Vector::Constant(m, opt.nominal_p), Vector::Constant(m, opt.nominal_qc));
    const Scalar vmin = c.minCoeff();
    const Scalar drop = 1.0 - vmin;
    if (drop > 1e-9) {
        const Scalar target_sq = opt.target_min_voltage * opt.target_min_voltage;
        const Scalar scale = (1.0 - target_sq) / drop;
        for (LineSegment& s : segments) s.z *= scale;
        net = NetworkModel::build(opt.base_voltage_v, opt.base_power_va, std::move(buses),
                                  std::move(segments), net.oltc(), net.capacitor_banks());
    }
    return net;
}

}  // namespace vvc
