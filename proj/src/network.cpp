#include "vvc/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <unordered_map>

namespace vvc {

using nlohmann::json;

namespace {

// Phase rotation vector a = [1, e^{-j2pi/3}, e^{+j2pi/3}].
Complex rotation(Phase p) {
    constexpr Scalar third = 2.0 * std::numbers::pi / 3.0;
    switch (p) {
        case Phase::a: return {1.0, 0.0};
        case Phase::b: return std::polar(1.0, -third);
        case Phase::c: return std::polar(1.0, third);
    }
    return {1.0, 0.0};
}

json must_get(const json& j, const char* key, const char* ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw_data(std::string(ctx) + ": missing field '" + key + "'");
    return *it;
}

}  // namespace

std::pair<Matrix, Matrix> tilde_impedance(const ComplexMatrix& z, PhaseSet phases) {
    const int n = phases.size();
    if (z.rows() != n || z.cols() != n)
        throw_data("tilde_impedance: impedance block is " + std::to_string(z.rows()) + "x" +
                   std::to_string(z.cols()) + " but the phase set has " + std::to_string(n) + " phases");
    const auto ph = phases.ordered();
    Matrix r(n, n), x(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            // (a a^H)_{ij} = a_i * conj(a_j); the transform multiplies entry
            // (i,j) by the conjugate of that factor.
            const Complex zt = std::conj(rotation(ph[i])) * rotation(ph[j]) * z(i, j);
            r(i, j) = zt.real();
            x(i, j) = zt.imag();
        }
    }
    return {r, x};
}

NetworkModel NetworkModel::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw_data(std::string("malformed network document: ") + e.what());
    }
    if (!doc.is_object()) throw_data("malformed network document: top level must be an object");

    NetworkModel net;
    net.base_voltage_v_ = must_get(doc, "base_voltage_v", "network").get<Scalar>();
    net.base_power_va_ = must_get(doc, "base_power_va", "network").get<Scalar>();
    if (net.base_voltage_v_ <= 0 || net.base_power_va_ <= 0)
        throw_data("network: base voltage and base power must be positive");

    for (const auto& jb : must_get(doc, "buses", "network")) {
        Bus b;
        b.id = must_get(jb, "id", "bus").get<int>();
        b.phases = PhaseSet::parse(must_get(jb, "phases", "bus").get<std::string>());
        if (jb.contains("der")) {
            Der d;
            d.capacity_pu = must_get(jb["der"], "capacity_pu", "der").get<Scalar>();
            b.der = d;
        }
        net.buses_.push_back(std::move(b));
    }
    for (const auto& js : must_get(doc, "segments", "network")) {
        LineSegment s;
        s.from = must_get(js, "from", "segment").get<int>();
        s.to = must_get(js, "to", "segment").get<int>();
        s.phases = PhaseSet::parse(must_get(js, "phases", "segment").get<std::string>());
        const auto entries = must_get(js, "z_pu", "segment");
        const int n = s.phases.size();
        if (static_cast<int>(entries.size()) != n * n)
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       ": z_pu must list " + std::to_string(n * n) + " [re, im] pairs (row-major)");
        s.z.resize(n, n);
        for (int k = 0; k < n * n; ++k) {
            const auto& pair = entries[static_cast<size_t>(k)];
            if (!pair.is_array() || pair.size() != 2)
                throw_data("segment z_pu entries must be [re, im] pairs");
            s.z(k / n, k % n) = Complex(pair[0].get<Scalar>(), pair[1].get<Scalar>());
        }
        net.segments_.push_back(std::move(s));
    }

    if (doc.contains("oltc")) {
        const auto& jo = doc["oltc"];
        OltcSpec o;
        const auto steps = must_get(jo, "tap_step", "oltc");
        o.tap_step.resize(static_cast<Index>(steps.size()));
        for (Index i = 0; i < o.tap_step.size(); ++i) o.tap_step[i] = steps[static_cast<size_t>(i)].get<Scalar>();
        o.tap_min = must_get(jo, "tap_min", "oltc").get<int>();
        o.tap_max = must_get(jo, "tap_max", "oltc").get<int>();
        o.tap_change_limit = jo.value("tap_change_limit", 2);
        net.oltc_ = std::move(o);
    }
    if (doc.contains("capacitor_banks")) {
        for (const auto& jc : doc["capacitor_banks"]) {
            CapacitorBankSpec cb;
            cb.bus = must_get(jc, "bus", "capacitor_bank").get<int>();
            cb.unit_var_pu = must_get(jc, "unit_var_pu", "capacitor_bank").get<Scalar>();
            cb.max_units = must_get(jc, "max_units", "capacitor_bank").get<int>();
            cb.switch_limit = jc.value("switch_limit", 1);
            net.capacitor_banks_.push_back(cb);
        }
    }

    net.finalize();
    return net;
}

NetworkModel NetworkModel::build(Scalar base_voltage_v, Scalar base_power_va,
                                 std::vector<Bus> buses, std::vector<LineSegment> segments,
                                 std::optional<OltcSpec> oltc,
                                 std::vector<CapacitorBankSpec> capacitor_banks) {
    NetworkModel net;
    net.base_voltage_v_ = base_voltage_v;
    net.base_power_va_ = base_power_va;
    net.buses_ = std::move(buses);
    net.segments_ = std::move(segments);
    net.oltc_ = std::move(oltc);
    net.capacitor_banks_ = std::move(capacitor_banks);
    if (net.base_voltage_v_ <= 0 || net.base_power_va_ <= 0)
        throw_data("network: base voltage and base power must be positive");
    net.finalize();
    return net;
}

void NetworkModel::finalize() {
    if (buses_.empty()) throw_data("network: no buses");
    std::sort(buses_.begin(), buses_.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    std::sort(segments_.begin(), segments_.end(),
              [](const LineSegment& a, const LineSegment& b) { return a.to < b.to; });

    std::unordered_map<int, int> pos;
    for (size_t i = 0; i < buses_.size(); ++i) {
        const Bus& b = buses_[i];
        if (!pos.emplace(b.id, static_cast<int>(i)).second)
            throw_data("duplicate bus id " + std::to_string(b.id));
        if (b.id < 0) throw_data("bus ids must be non-negative");
        if (b.phases.empty()) throw_data("bus " + std::to_string(b.id) + " has an empty phase set");
        if (b.id == 0 && b.der) throw_data("the feeder head bus cannot carry a DER");
        if (b.der && b.der->capacity_pu < 0)
            throw_data("bus " + std::to_string(b.id) + ": DER capacity must be non-negative");
    }
    if (buses_[0].id != 0) throw_data("network: feeder head bus 0 is missing");
    if (segments_.empty()) throw_data("network: at least one line segment is required");

    const size_t nb = buses_.size();
    parent_pos_.assign(nb, -1);
    incoming_segment_.assign(nb, -1);
    child_segments_.assign(nb, {});

    std::set<std::pair<int, int>> seen_edges;
    for (size_t si = 0; si < segments_.size(); ++si) {
        LineSegment& s = segments_[si];
        auto fit = pos.find(s.from);
        auto tit = pos.find(s.to);
        if (fit == pos.end() || tit == pos.end())
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       " references an unknown bus");
        if (s.to == 0) throw_data("segment into the feeder head bus is not allowed");
        if (s.from == s.to) throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) + " is a self-loop");
        if (!seen_edges.emplace(s.from, s.to).second)
            throw_data("duplicate segment to bus " + std::to_string(s.to));

        const Bus& fb = buses_[static_cast<size_t>(fit->second)];
        const Bus& tb = buses_[static_cast<size_t>(tit->second)];
        if (s.phases != tb.phases)
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       ": phase set \"" + s.phases.str() + "\" must equal the to-bus phase set \"" +
                       tb.phases.str() + "\"");
        if (!s.phases.subset_of(fb.phases))
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       ": phase set \"" + s.phases.str() + "\" is absent at the from-bus");
        if (s.z.rows() != s.phases.size() || s.z.cols() != s.phases.size())
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       ": impedance block dimension mismatch");

        auto [r, x] = tilde_impedance(s.z, s.phases);
        (void)r;
        Eigen::FullPivLU<Matrix> lu(x);
        if (!lu.isInvertible())
            throw_data("segment " + std::to_string(s.from) + "->" + std::to_string(s.to) +
                       ": reactance block is singular");

        if (incoming_segment_[static_cast<size_t>(tit->second)] == -1) {
            incoming_segment_[static_cast<size_t>(tit->second)] = static_cast<int>(si);
            parent_pos_[static_cast<size_t>(tit->second)] = fit->second;
        }
        child_segments_[static_cast<size_t>(fit->second)].push_back(static_cast<int>(si));
    }

    // Walk from the head bus. A revisited bus means a cycle; an unreached bus
    // means a subtree detached from the head. Together with the per-segment
    // checks above, a clean walk implies exactly one predecessor per non-root
    // bus and exactly nb-1 segments, so no separate counting is needed.
    std::vector<char> visited(nb, 0);
    topo_order_.clear();
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = 1;
    while (!frontier.empty()) {
        int bp = frontier.front();
        frontier.pop();
        topo_order_.push_back(bp);
        for (int si : child_segments_[static_cast<size_t>(bp)]) {
            int cp = pos.at(segments_[static_cast<size_t>(si)].to);
            if (visited[static_cast<size_t>(cp)])
                throw_data("cycle detected at bus " + std::to_string(segments_[static_cast<size_t>(si)].to));
            visited[static_cast<size_t>(cp)] = 1;
            frontier.push(cp);
        }
    }
    for (size_t i = 0; i < nb; ++i)
        if (!visited[i])
            throw_data("cycle detected: bus " + std::to_string(buses_[i].id) +
                       " is not reachable from the feeder head");

    // Head bus carries exactly the phases of its outgoing segments.
    PhaseSet root_union;
    for (int si : child_segments_[0])
        for (Phase p : {Phase::a, Phase::b, Phase::c})
            if (segments_[static_cast<size_t>(si)].phases.contains(p)) root_union.insert(p);
    if (!(root_union == buses_[0].phases))
        throw_data("head bus phase set \"" + buses_[0].phases.str() +
                   "\" must equal the union of its outgoing segment phases \"" + root_union.str() + "\"");

    node_offset_.assign(nb, 0);
    Index offset = 0;
    for (size_t i = 1; i < nb; ++i) {
        node_offset_[i] = offset;
        offset += buses_[i].phases.size();
    }
    node_count_ = offset;

    if (oltc_ && oltc_->tap_step.size() != root_phase_count())
        throw_data("oltc: tap_step must have one entry per head-bus phase");
    for (const auto& cb : capacitor_banks_) {
        if (pos.find(cb.bus) == pos.end() || cb.bus == 0)
            throw_data("capacitor_bank: bus " + std::to_string(cb.bus) + " is not a non-root bus");
        if (cb.max_units < 0 || cb.unit_var_pu < 0)
            throw_data("capacitor_bank at bus " + std::to_string(cb.bus) + ": negative rating");
    }
}

int NetworkModel::bus_position(int bus_id) const {
    auto it = std::lower_bound(buses_.begin(), buses_.end(), bus_id,
                               [](const Bus& b, int id) { return b.id < id; });
    if (it == buses_.end() || it->id != bus_id) throw_data("unknown bus id " + std::to_string(bus_id));
    return static_cast<int>(it - buses_.begin());
}

Index NetworkModel::node_index(int bus_id, Phase p) const {
    const int bp = bus_position(bus_id);
    const Bus& b = buses_[static_cast<size_t>(bp)];
    const int ppos = b.phases.position(p);
    if (ppos < 0)
        throw_data("bus " + std::to_string(bus_id) + " has no phase " + std::string(1, phase_char(p)));
    return (bp == 0 ? 0 : node_offset_[static_cast<size_t>(bp)]) + ppos;
}

std::string NetworkModel::node_label(Index k) const {
    for (size_t i = 1; i < buses_.size(); ++i) {
        const Index off = node_offset_[i];
        const int n = buses_[i].phases.size();
        if (k >= off && k < off + n) {
            const auto ph = buses_[i].phases.ordered();
            return std::to_string(buses_[i].id) + "." + phase_char(ph[static_cast<size_t>(k - off)]);
        }
    }
    throw_data("node index " + std::to_string(k) + " out of range");
}

Index NetworkModel::node_index_of_label(const std::string& label) const {
    const auto dot = label.find('.');
    if (dot == std::string::npos || dot + 2 != label.size())
        throw_data("bad node label '" + label + "' (expected \"bus.phase\")");
    const int bus_id = std::stoi(label.substr(0, dot));
    const char pc = label[dot + 1];
    if (pc < 'a' || pc > 'c') throw_data("bad phase in node label '" + label + "'");
    return node_index(bus_id, static_cast<Phase>(pc - 'a'));
}

std::vector<std::string> NetworkModel::slack_labels() const {
    std::vector<std::string> out;
    const auto ph = buses_[0].phases.ordered();
    for (int k = 0; k < buses_[0].phases.size(); ++k)
        out.push_back("0." + std::string(1, phase_char(ph[static_cast<size_t>(k)])));
    return out;
}

Vector NetworkModel::der_capacity() const {
    Vector cap = Vector::Zero(node_count_);
    for (size_t i = 1; i < buses_.size(); ++i) {
        if (!buses_[i].der) continue;
        const Index off = node_offset_[i];
        for (int k = 0; k < buses_[i].phases.size(); ++k) cap[off + k] = buses_[i].der->capacity_pu;
    }
    return cap;
}

std::string NetworkModel::to_document() const {
    json doc;
    doc["base_voltage_v"] = base_voltage_v_;
    doc["base_power_va"] = base_power_va_;
    doc["buses"] = json::array();
    for (const Bus& b : buses_) {
        json jb{{"id", b.id}, {"phases", b.phases.str()}};
        if (b.der) jb["der"] = {{"capacity_pu", b.der->capacity_pu}};
        doc["buses"].push_back(std::move(jb));
    }
    doc["segments"] = json::array();
    for (const LineSegment& s : segments_) {
        json entries = json::array();
        const int n = s.phases.size();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                entries.push_back({s.z(i, j).real(), s.z(i, j).imag()});
        doc["segments"].push_back({{"from", s.from}, {"to", s.to}, {"phases", s.phases.str()}, {"z_pu", std::move(entries)}});
    }
    if (oltc_) {
        json jo;
        jo["tap_step"] = std::vector<Scalar>(oltc_->tap_step.begin(), oltc_->tap_step.end());
        jo["tap_min"] = oltc_->tap_min;
        jo["tap_max"] = oltc_->tap_max;
        jo["tap_change_limit"] = oltc_->tap_change_limit;
        doc["oltc"] = std::move(jo);
    }
    if (!capacitor_banks_.empty()) {
        doc["capacitor_banks"] = json::array();
        for (const auto& cb : capacitor_banks_)
            doc["capacitor_banks"].push_back({{"bus", cb.bus},
                                              {"unit_var_pu", cb.unit_var_pu},
                                              {"max_units", cb.max_units},
                                              {"switch_limit", cb.switch_limit}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace vvc
