#ifndef VVC_NETWORK_HPP
#define VVC_NETWORK_HPP

#include "vvc/phase.hpp"
#include "vvc/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vvc {

/// Inverter-interfaced DER at a bus. `capacity_pu` is the apparent-power
/// rating of each phase of the inverter, in per-unit.
struct Der {
    Scalar capacity_pu = 0.0;
};

struct Bus {
    int id = 0;
    PhaseSet phases;
    std::optional<Der> der;
};

/// Directed line segment from a bus towards one of its children. The phase
/// set equals the to-bus phase set (one circuit per phase of the child) and
/// `z` is the per-unit impedance matrix in that phase order.
struct LineSegment {
    int from = 0;
    int to = 0;
    PhaseSet phases;
    ComplexMatrix z;
};

/// Head-bus on-load tap changer, as declared in the network document.
struct OltcSpec {
    Vector tap_step;  // per phase of the head bus
    int tap_min = -16;
    int tap_max = 16;
    int tap_change_limit = 2;
};

/// Switchable capacitor bank at a bus (applies to every phase of the bus).
struct CapacitorBankSpec {
    int bus = 0;
    Scalar unit_var_pu = 0.0;
    int max_units = 0;
    int switch_limit = 1;
};

/// Phase-aware radial feeder. Buses are kept sorted by ascending id with the
/// head bus (id 0) first; segments sorted by ascending to-bus id. The global
/// node stacking enumerates non-root buses in that order, phases a,b,c within
/// a bus; head-bus phases are stacked separately (the slack side).
class NetworkModel {
public:
    /// Parse and fully validate a UTF-8 network document (see README for the
    /// schema). Throws Error(data) on any malformed or non-radial input.
    static NetworkModel parse(const std::string& text);

    /// Assemble from parts, running the same validation as parse().
    static NetworkModel build(Scalar base_voltage_v, Scalar base_power_va,
                              std::vector<Bus> buses, std::vector<LineSegment> segments,
                              std::optional<OltcSpec> oltc = {},
                              std::vector<CapacitorBankSpec> capacitor_banks = {});

    /// Serialize back to the document format (round-trips through parse()).
    std::string to_document() const;

    Scalar base_voltage_v() const { return base_voltage_v_; }
    Scalar base_power_va() const { return base_power_va_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<LineSegment>& segments() const { return segments_; }
    const std::optional<OltcSpec>& oltc() const { return oltc_; }
    const std::vector<CapacitorBankSpec>& capacitor_banks() const { return capacitor_banks_; }

    /// Total number of non-root phase nodes (the dimension m).
    Index node_count() const { return node_count_; }
    /// Number of head-bus phases (the slack dimension).
    Index root_phase_count() const { return buses_[0].phases.size(); }

    int bus_position(int bus_id) const;
    /// Row of (bus, phase) in the global stacking, 0..m-1. Root bus phases
    /// index into the slack stacking 0..n0-1 instead.
    Index node_index(int bus_id, Phase p) const;
    /// First global node index of the bus at `bus_pos` (root: slack offset 0).
    Index node_offset(int bus_pos) const { return node_offset_[static_cast<size_t>(bus_pos)]; }

    /// Bus positions in breadth-first order from the head bus; parents always
    /// precede children.
    const std::vector<int>& topo_order() const { return topo_order_; }
    int parent_position(int bus_pos) const { return parent_pos_[static_cast<size_t>(bus_pos)]; }
    /// Segment feeding the bus at `bus_pos` (-1 for the root).
    int incoming_segment(int bus_pos) const { return incoming_segment_[static_cast<size_t>(bus_pos)]; }
    const std::vector<int>& child_segments(int bus_pos) const { return child_segments_[static_cast<size_t>(bus_pos)]; }

    /// "busId.phase" label of global node k, e.g. "12.b".
    std::string node_label(Index k) const;
    /// Parse a node label back to its global index.
    Index node_index_of_label(const std::string& label) const;
    /// Slack labels "0.a", ... in stacking order.
    std::vector<std::string> slack_labels() const;

    /// Per-phase-node DER apparent-power capacity (zero at non-DER nodes).
    Vector der_capacity() const;

private:
    NetworkModel() = default;
    void finalize();  // derive orderings, indices, run validation

    Scalar base_voltage_v_ = 1.0;
    Scalar base_power_va_ = 1.0;
    std::vector<Bus> buses_;
    std::vector<LineSegment> segments_;
    std::optional<OltcSpec> oltc_;
    std::vector<CapacitorBankSpec> capacitor_banks_;

    Index node_count_ = 0;
    std::vector<Index> node_offset_;       // per bus position
    std::vector<int> parent_pos_;          // per bus position, -1 for root
    std::vector<int> incoming_segment_;    // per bus position, -1 for root
    std::vector<std::vector<int>> child_segments_;
    std::vector<int> topo_order_;
};

/// Split a per-unit impedance block into the real/imaginary parts of its
/// phase-rotated counterpart: entry (p,q) is multiplied by conj(a_p)*a_q with
/// a = [1, exp(-j2pi/3), exp(+j2pi/3)] restricted to `phases`. For a purely
/// single-phase block this is the identity map.
std::pair<Matrix, Matrix> tilde_impedance(const ComplexMatrix& z, PhaseSet phases);

/// Convenience wrapper matching the document entry point.
inline NetworkModel parse_network(const std::string& text) { return NetworkModel::parse(text); }

}  // namespace vvc

#endif
