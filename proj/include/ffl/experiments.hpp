#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ffl/control.hpp"
#include "ffl/digits.hpp"
#include "ffl/testbench.hpp"

namespace ffl::experiments {

// --- stimulus serialization ---------------------------------------------

struct Segment {
    double volts = 0;
    double duration = 0;  // s
    int pixel_index = -1; // serialization position, 0 = bottom-left
};

struct StimulusSchedule {
    std::vector<Segment> segments;
};

// Per-pixel durations indexed by serialization position: pixels expected
// black in `target` get w_black, all others w_white.
std::array<double, 64> weights_for(const digits::DigitBitmap& target, double w_black,
                                   double w_white);
std::array<double, 64> uniform_weights(double w);

// Additive voltage ramp k*(1 - i/32) over serial position i.
std::array<double, 64> ramp_offsets(double k);

// Serialize one glyph bottom-left to top-right, row by row. Throws
// BiasOutOfRange if any offset pushes a segment outside +/-10 V.
StimulusSchedule serialize_digit(const digits::DigitBitmap& digit,
                                 std::span<const double> weights, double v_black = -3.3,
                                 double v_white = 0.0,
                                 std::span<const double> offsets = {});

// Apply a schedule to the bench; when measure_each is set, sweep after
// every segment and return the ZC22 readings.
std::vector<double> stream_schedule(bench::Testbench& tb, const StimulusSchedule& schedule,
                                    bool measure_each = true);

// --- canned experiments ---------------------------------------------------

struct HysteresisConfig {
    double v_min = -3.8, v_max = 3.8, step = 0.1, dwell = 1.0;
    int loops = 50;
    int warmup_loops = 4;  // unmeasured staircase loops settling the orbit
};

struct HysteresisResult {
    std::size_t log_begin = 0;     // first bench-log row of the measured phase
    std::size_t samples_per_loop = 0;
    int loops = 0;                 // measured loops (plus one closing sample)
};

HysteresisResult hysteresis_sweep(bench::Testbench& tb, const HysteresisConfig& cfg = {});

struct MemoryConfig {
    double setpoint = 14338.0;  // ZC11 reset target
    int n_levels = 16;
    double t_p_base = 4.0;      // write duration is t_p_base * level
    double v_write = 3.3;
    double hold = 30.0;
    double hold_sample = 1.0;
    double tol = 5.0;
    double v_reset = 3.3;       // reset drive magnitude on port 1
    double tick = 0.1;
    std::size_t max_ticks = 20000;
};

struct MemoryLevel {
    int level = 0;
    double t_p = 0;
    double zc22_baseline = 0;   // at the reset-accept sample
    double hold_mean = 0;
    double hold_var = 0;
    double delta = 0;           // hold_mean - zc22_baseline
};

std::vector<MemoryLevel> memory_store(bench::Testbench& tb, const MemoryConfig& cfg = {});

struct PulseMemoryConfig {
    double setpoint = 14338.0;
    std::vector<int> counts = {4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48, 52, 56, 60, 64};
    double t_high = 0.25, t_low = 0.75;
    double v_pulse = 3.3;
    double hold = 30.0;
    double hold_sample = 1.0;
    double tol = 5.0;
    double v_reset = 3.3;
    double tick = 0.1;
};

struct PulseMemoryLevel {
    int count = 0;
    double zc22_baseline = 0;
    double hold_mean = 0;
    double delta = 0;
    std::vector<double> hold_samples;
};

std::vector<PulseMemoryLevel> pulse_memory(bench::Testbench& tb,
                                           const PulseMemoryConfig& cfg = {});

struct ClassifyConfig {
    double setpoint = 14338.0;  // ZC22 charge-reset target
    double tol = 5.0;
    double w_black = 4.5, w_white = 0.25;
    double v_black = -3.3, v_white = 0.0;
};

struct ClassifyResult {
    std::array<double, 10> finals{};  // ZC22 after each digit's serialization
    int argmin = -1;                  // lowest final, ties to the lower digit
};

ClassifyResult classify_inmemory(bench::Testbench& tb, const digits::DigitSet& ds,
                                 int weighted_digit, const ClassifyConfig& cfg = {});

// Constant-weight streaming of the whole dataset without resets.
inline constexpr std::array<int, 10> kAllDigits = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
std::array<double, 10> differentiation_run(bench::Testbench& tb, const digits::DigitSet& ds,
                                           double w = 4.0,
                                           std::span<const int> order = kAllDigits);

struct AdaptationConfig {
    double k = -0.9;            // offset ramp scale (negative)
    int reps = 20;
    double setpoint = 15100.0;  // ZC11, reached on the low-w side of the map
    int weighted_digit = 1;
    double w_black = 4.5, w_white = 0.25;
    double v_black = -3.3, v_white = 0.0;
    double tol = 5.0;
    double v_reset = 3.3;
    double tick = 0.1;
    std::size_t max_ticks = 20000;
};

struct AdaptationResult {
    std::array<double, 10> dynamic_range{};  // ZC11 excursion per digit
    int max_range_digit = -1;
};

AdaptationResult progressive_adaptation(bench::Testbench& tb, const digits::DigitSet& ds,
                                        const AdaptationConfig& cfg = {});

struct ReductionIteration {
    std::array<double, 10> finals{};
    int detected = -1;
    double threshold = 0;   // mean of the two lowest finals
    double range = 0;       // max - min of finals
};

struct ReductionResult {
    std::vector<ReductionIteration> iterations;
    double accuracy = 0;    // fraction of iterations detecting the weighted digit
};

ReductionResult dynamics_reduction_run(bench::Testbench& tb, const digits::DigitSet& ds,
                                       int weighted_digit = 4, int iterations = 100,
                                       const ClassifyConfig& cfg = {});

struct ChaosProbeConfig {
    double low = 16250.0, high = 16300.0;
    double pause = 10.0;
    int cycles = 20;
    double tol = 1.0;
    double v_up = 3.3, v_down = -3.3;
    double tick = 0.1;
    std::size_t max_ticks = 100000;
};

struct ChaosProbeResult {
    std::vector<double> zc22;            // every probe measurement in order
    std::vector<std::size_t> leg_ticks;  // drive ticks per leg (high, low, ...)
};

ChaosProbeResult chaos_probe(bench::Testbench& tb, const ChaosProbeConfig& cfg = {});

// Measurement resolution: three standard deviations of a held zero-bias
// readout on a fresh bench with the given parameters (floored for the
// noiseless model).
double estimate_resolution(const device::DeviceParams& params,
                           const rf::SweepConfig& sweep_cfg = {},
                           ExecPolicy policy = ExecPolicy::Parallel);

// --- script twins ---------------------------------------------------------
// The same experiments expressed in the measurement DSL; running them on a
// fresh bench reproduces the bench log of the C++ implementation byte for
// byte (see tests/acceptance).
std::string hysteresis_script(const HysteresisConfig& cfg, const bench::BenchTiming& timing);
std::string memory_script(const MemoryConfig& cfg);

}  // namespace ffl::experiments
