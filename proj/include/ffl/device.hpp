#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ffl/rf.hpp"

namespace ffl::device {

// Calibration map from hidden state to the lumped two-port network.
// Branch resistances are functions of state; capacitances are fixed.
// Port 2 is affine in the effective level (monotone, carries the global
// sign convention); port 1 is quadratic with its minimum at w_eq, which is
// what produces the pinched loop and the regime where the voltage that
// lowers the port-1 indicator depends on which side of w_eq the state is.
struct ZMapParams {
    double r_series = 1889.87;     // ohm
    double c_series = 0.06e-12;    // F
    double r_shunt1 = 232.012;     // ohm
    double c_shunt1 = 0.25e-12;    // F
    double shunt1_curv = 3.38391;  // quadratic gain on (w - w_eq)^2
    double shunt1_lin = -0.027574;       // linear trim cancelling port-2 leakage into zc11
    double r_shunt2 = 238.501;     // ohm
    double c_shunt2 = 0.25e-12;    // F
    double shunt2_slope = 0.873586; // linear gain on (u2 - w_eq)
    double shunt2_curv_hi = 3.00418; // extra quadratic gain above w_eq
    double s_couple = 0.022;       // short-term trace weight inside u2
    double r_min = 1.0;            // ohm, floor for all branch resistances
};

struct DeviceParams {
    double w_eq = 0.5;      // long-term equilibrium level
    double w_gain = 0.0015; // 1/(V*s), long-term drive rate
    double w_relax = 0.005; // 1/s, long-term relaxation
    double s_gain = 0.01;   // 1/(V*s), short-term trace gain
    double s_relax = 1.0;   // 1/s, short-term decay (>> w_relax)

    double fatigue_gain = 2.55e-7;       // per |V|*s above the recovery threshold
    double fatigue_recovery_v = -9.5;    // V; at or below this the device recovers
    double fatigue_recovery_rate = 2e-3; // 1/s while recovering
    double fatigue_kappa = 50.0;         // dynamics reduction g(a) = 1/(1+kappa*a)

    double chaos_eps = 0.23; // perturbation amplitude; 0 = smooth deterministic
    double chaos_r = 3.99;   // logistic-map parameter
    int n_osc = 8;           // chaos oscillators (even)
    std::uint64_t seed = 1;  // chaos seed

    double asym = 0.05;   // port asymmetry in [0, 0.2]
    double dt_int = 0.01; // s, fixed integration substep

    ZMapParams zmap;

    void validate() const;
    static DeviceParams defaults() { return DeviceParams{}; }
};

struct DeviceState {
    double w = 0.5; // long-term level in [0,1]
    double s = 0.0; // short-term trace, signed
    double a = 0.0; // fatigue in [0,1]
    double t = 0.0; // simulated time (s)
    std::vector<double> c; // chaos oscillators, each in (0,1)

    // Equilibrium state with seeded chaos oscillators.
    static DeviceState fresh(const DeviceParams& params);
};

// Advance the state by dt under a constant bias. Fixed-step explicit
// integration with substeps of at most params.dt_int; the chaos vector is
// updated once per substep. Throws BiasOutOfRange / InvalidDuration.
DeviceState step(DeviceState state, const DeviceParams& params, double volts, double dt);

// Fixed -10 V stimulation; fatigue strictly decreases (until the floor).
DeviceState restore(DeviceState state, const DeviceParams& params, double duration);

// Zero-bias wait; the short-term trace decays at s_relax.
DeviceState settle(DeviceState state, const DeviceParams& params, double duration);

// Lumped two-port impedance matrix at one frequency. Deterministic in
// (state, freq); finite for all reachable states. freq must be positive.
rf::ZMatrix network_at(const DeviceState& state, const DeviceParams& params, double freq);

// --- parameter file I/O ------------------------------------------------
// Flat "key = value" text, '#' comments. Missing keys fall back to the
// defaults and are reported in `notices`.
DeviceParams load_params(std::istream& in, std::vector<std::string>& notices);
void save_params(std::ostream& out, const DeviceParams& p);

}  // namespace ffl::device
