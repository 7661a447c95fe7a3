#ifndef VVC_SCENARIO_IO_HPP
#define VVC_SCENARIO_IO_HPP

#include "vvc/network.hpp"
#include "vvc/online.hpp"
#include "vvc/pnm.hpp"
#include "vvc/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vvc {

/// Network file referenced by a scenario document, if any.
std::optional<std::string> scenario_network_path(const std::string& text);

/// Parse a scenario document against a network. Each of p/qc/pv/v0 accepts a
/// scalar, a per-node array, {"profile": name, "scale": s}, or
/// {"csv": path} with node labels in the header; csv paths resolve against
/// `base_dir`. A scalar (or scalar-scaled profile) for pv applies at DER
/// nodes only.
ScenarioSeries load_scenario(const std::string& text, const NetworkModel& net, const std::string& base_dir);

/// Constant-conditions scenario.
ScenarioSeries make_static_scenario(const NetworkModel& net, int steps, Scalar p, Scalar qc, Scalar pv_der,
                                    Scalar resolution_s = 10.0, Scalar control_period_s = 10.0);

/// Smooth double-peak load with a midday generation bell, jittered per node.
ScenarioSeries make_daily_scenario(const NetworkModel& net, int steps, uint64_t seed, Scalar p_peak,
                                   Scalar qc_peak, Scalar pv_peak, Scalar resolution_s = 10.0,
                                   Scalar control_period_s = 10.0);

std::string scenario_to_document(const ScenarioSeries& scenario, const std::string& network_path);

// Columnar CSV artifacts. All numbers round-trip exactly ("%.17g").
std::string trace_to_csv(const NetworkModel& net, const SimulationTrace& trace);
std::string summary_to_json(const SimulationTrace& trace);
std::string solve_trace_to_csv(const std::vector<IterationRecord>& trace);
std::string voltage_table_to_csv(const NetworkModel& net, const Vector& squared_magnitudes,
                                 const ComplexVector* node_voltages = nullptr);

/// Minimal CSV reader for round-trips: header plus numeric rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Scalar>> rows;

    int column(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(const std::string& text);

std::string format_scalar(Scalar x);

}  // namespace vvc

#endif
