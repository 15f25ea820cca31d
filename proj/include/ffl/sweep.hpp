#pragma once

#include "ffl/device.hpp"
#include "ffl/parallel.hpp"
#include "ffl/rf.hpp"

namespace ffl::sweep {

// Evaluate a full frequency sweep of the device at a fixed state: the
// lumped network is read as S-parameters (what a VNA would measure) and
// converted back to Z per the standard equations, then collapsed.
//
// Each frequency point is independent, so the loop parallelizes; the
// collapsed sums are accumulated serially in index order afterwards,
// keeping the result bit-identical for any thread count.
rf::SweepResult eval(const device::DeviceState& state, const device::DeviceParams& params,
                     const rf::SweepConfig& cfg, ExecPolicy policy);

}  // namespace ffl::sweep
