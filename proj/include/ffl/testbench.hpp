#pragma once

#include <iosfwd>
#include <vector>

#include "ffl/device.hpp"
#include "ffl/parallel.hpp"
#include "ffl/rf.hpp"
#include "ffl/sweep.hpp"

namespace ffl::bench {

struct BenchTiming {
    double sweep_duration = 0.5;   // s per VNA sweep
    double command_latency = 0.1;  // s per DC command
};

struct LogRow {
    double t = 0;     // s, simulated time at sweep start
    double bias = 0;  // V
    double zc11 = 0, zc12 = 0, zc21 = 0, zc22 = 0;  // ohm
};

// Emulated lab bench: one device instance, a DC bias generator and a VNA,
// bound to a simulated clock. Single-writer by contract; no wall-clock
// sleeps anywhere, so day-long experiments compress to seconds.
class Testbench {
public:
    explicit Testbench(device::DeviceParams params, rf::SweepConfig sweep_cfg = {},
                       BenchTiming timing = {}, ExecPolicy policy = ExecPolicy::Parallel);

    // Apply a new DC bias. The device is integrated under the old bias up
    // to now; the clock then advances by the command latency.
    void set_bias(double volts);

    // Hold the current bias for a duration.
    void wait(double seconds);

    // Acquire a frequency sweep at the current state. Readout does not
    // mutate the device; the clock advances by the sweep duration and the
    // measurement is appended to the log exactly once.
    rf::SweepResult sweep_once();

    double bias() const { return bias_; }
    double clock() const { return clock_; }
    const device::DeviceState& state() const { return state_; }
    const device::DeviceParams& params() const { return params_; }
    const rf::SweepConfig& sweep_config() const { return sweep_cfg_; }
    const BenchTiming& timing() const { return timing_; }
    const std::vector<LogRow>& log() const { return log_; }
    std::size_t log_size() const { return log_.size(); }

    // CSV export: header `t_s,bias_v,zc11,zc12,zc21,zc22`, LF endings.
    void export_log_csv(std::ostream& os) const;

private:
    void catch_up();

    device::DeviceParams params_;
    device::DeviceState state_;
    rf::SweepConfig sweep_cfg_;
    BenchTiming timing_;
    ExecPolicy policy_;
    double bias_ = 0.0;
    double clock_ = 0.0;
    std::vector<LogRow> log_;
};

void export_log_csv(std::ostream& os, const std::vector<LogRow>& rows);

}  // namespace ffl::bench
