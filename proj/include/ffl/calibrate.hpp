#pragma once

#include "ffl/device.hpp"
#include "ffl/parallel.hpp"
#include "ffl/rf.hpp"

namespace ffl::calibrate {

// Indicator targets the calibration map is fitted against. The bases put
// the collapsed port indicators in the device's operating range; the spans
// set the sensitivity per unit of hidden state.
struct Targets {
    double zc22_base = 14450.0;  // ohm at w = w_eq
    double zc22_span = 7000.0;   // ohm per unit level (low-side slope)
    double zc22_hi_w = 0.72;     // anchor for the boosted high side
    double zc22_hi = 16650.0;    // ohm at the anchor
    double zc11_base = 14250.0;  // ohm at w = w_eq (port-1 minimum)
    double zc11_rise = 960.0;    // ohm rise at w = w_eq +/- 0.2
    double zc12_base = 2100.0;   // ohm off-diagonal scale at w = w_eq
};

// Collapsed indicators of a bare state (no dynamics), used by the fit and
// by diagnostics.
struct IndicatorProbe {
    double zc11, zc12, zc21, zc22;
};
IndicatorProbe probe(double w, double s, const device::DeviceParams& p,
                     const rf::SweepConfig& cfg, ExecPolicy policy = ExecPolicy::Serial);

// Fit the zmap resistances/gains so the collapsed indicators meet the
// targets on the standard sweep. Dynamics parameters are left untouched.
device::DeviceParams fit(device::DeviceParams start, const Targets& targets = {},
                         const rf::SweepConfig& cfg = {});

}  // namespace ffl::calibrate
