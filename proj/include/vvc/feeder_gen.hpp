#ifndef VVC_FEEDER_GEN_HPP
#define VVC_FEEDER_GEN_HPP

#include "vvc/network.hpp"
#include "vvc/types.hpp"

#include <cstdint>

namespace vvc {

/// Knobs for synthetic radial unbalanced feeders. Impedances are drawn with
/// X/R ratios in [xr_min, xr_max] and then rescaled so the linear-model
/// baseline at the nominal per-node loading hits target_min_voltage.
struct FeederOptions {
    int buses = 25;
    uint64_t seed = 1;
    Scalar der_fraction = 0.4;
    Scalar der_capacity_pu = 0.5;
    Scalar xr_min = 0.5;
    Scalar xr_max = 3.0;
    Scalar target_min_voltage = 0.94;  // magnitude, per-unit
    Scalar nominal_p = 0.06;           // per phase node
    Scalar nominal_qc = 0.03;
    Scalar chain_bias = 0.5;           // probability of extending the previous bus
    Scalar three_phase_fraction = 0.55;
    Scalar two_phase_fraction = 0.25;
    Scalar base_voltage_v = 4160.0;
    Scalar base_power_va = 100000.0;
    bool with_devices = false;  // attach an OLTC and a few capacitor banks
};

/// Deterministic per seed; the result always validates under parse().
NetworkModel generate_feeder(const FeederOptions& options);

}  // namespace vvc

#endif
