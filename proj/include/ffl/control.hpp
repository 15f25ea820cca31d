#pragma once

#include <cstddef>

#include "ffl/testbench.hpp"

namespace ffl::control {

enum class Indicator { ZC11, ZC12, ZC21, ZC22 };

enum class TolMode { Bilateral, Unilateral };

struct SetpointSpec {
    Indicator indicator = Indicator::ZC22;
    double target = 0;   // ohm
    double tol = 1.0;    // ohm
    TolMode tol_mode = TolMode::Bilateral;
    double v_up = 3.3;   // V applied while the indicator is below target
    double v_down = -3.3;
    double tick = 0.1;   // s dwell per loop pass; one full pass also spends
                         // the sweep duration and one command latency
    std::size_t max_ticks = 20000;

    void validate() const;
};

double read_indicator(const rf::SweepResult& res, Indicator which);

// Bang-bang drive: measure; while outside tolerance apply v_up/v_down for
// one tick and measure again; finish with bias 0. Returns the number of
// drive ticks used. Bilateral accepts |zc - target| <= tol; unilateral
// accepts the first sample at or past the target from the approach side.
// Throws SetpointUnreachable when max_ticks is exhausted.
std::size_t drive_to_setpoint(bench::Testbench& tb, const SetpointSpec& spec);

// Reset used between serialized digits: full-swing +/-10 V drive to the
// target on ZC22, approached one-sidedly. Accumulates fatigue when driving
// up; the occasional downward leg runs at the recovery voltage.
std::size_t charge_reset(bench::Testbench& tb, double target, double tol);

// Pre-digit reset sequence for reservoir runs: drive ZC22 to `low`, then
// `high` with +/-10 V, then settle one-sidedly onto `star` from above with
// the fine +/-3.3 V drive. Leaves bias at 0.
void prc_reset(bench::Testbench& tb, double low, double high, double star, double tol);

}  // namespace ffl::control
