#include "ffl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ffl/csv.hpp"
#include "ffl/errors.hpp"

namespace ffl::experiments {

namespace {

// Serialization position i covers the grid bottom-left to top-right.
constexpr int kPixels = 64;

int serial_row(int i) { return 7 - i / 8; }  // row from top
int serial_col(int i) { return i % 8; }

}  // namespace

std::array<double, 64> weights_for(const digits::DigitBitmap& target, double w_black,
                                   double w_white) {
    std::array<double, 64> w{};
    for (int i = 0; i < kPixels; ++i)
        w[static_cast<std::size_t>(i)] =
            target.at(serial_row(i), serial_col(i)) ? w_black : w_white;
    return w;
}

std::array<double, 64> uniform_weights(double w) {
    std::array<double, 64> out{};
    out.fill(w);
    return out;
}

std::array<double, 64> ramp_offsets(double k) {
    std::array<double, 64> out{};
    for (int i = 0; i < kPixels; ++i)
        out[static_cast<std::size_t>(i)] = k * (1.0 - static_cast<double>(i) / 32.0);
    return out;
}

StimulusSchedule serialize_digit(const digits::DigitBitmap& digit,
                                 std::span<const double> weights, double v_black,
                                 double v_white, std::span<const double> offsets) {
    if (weights.size() != 64) throw std::invalid_argument("expected 64 pixel weights");
    if (!offsets.empty() && offsets.size() != 64)
        throw std::invalid_argument("expected 64 pixel offsets");
    StimulusSchedule sched;
    sched.segments.reserve(kPixels);
    for (int i = 0; i < kPixels; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!(weights[idx] > 0)) throw std::invalid_argument("pixel weights must be positive");
        const bool black = digit.at(serial_row(i), serial_col(i));
        double v = black ? v_black : v_white;
        if (!offsets.empty()) v += offsets[idx];
        if (std::abs(v) > 10.0) throw BiasOutOfRange(v);
        sched.segments.push_back({v, weights[idx], i});
    }
    return sched;
}

std::vector<double> stream_schedule(bench::Testbench& tb, const StimulusSchedule& schedule,
                                    bool measure_each) {
    std::vector<double> zc;
    zc.reserve(schedule.segments.size());
    for (const auto& seg : schedule.segments) {
        tb.set_bias(seg.volts);
        tb.wait(seg.duration);
        if (measure_each) zc.push_back(tb.sweep_once().zc22);
    }
    return zc;
}

// --- hysteresis -----------------------------------------------------------

HysteresisResult hysteresis_sweep(bench::Testbench& tb, const HysteresisConfig& cfg) {
    if (!(cfg.v_min < cfg.v_max)) throw std::invalid_argument("hysteresis needs v_min < v_max");
    if (!(cfg.step > 0)) throw std::invalid_argument("hysteresis step must be positive");
    const double span = cfg.v_max - cfg.v_min;
    const double steps_f = span / cfg.step;
    const int n_steps = static_cast<int>(std::lround(steps_f));
    if (std::abs(steps_f - n_steps) > 1e-9)
        throw std::invalid_argument("hysteresis step must divide the voltage range");
    if (cfg.loops < 1) throw std::invalid_argument("hysteresis needs at least one loop");

    HysteresisResult res;
    res.log_begin = tb.log_size();
    res.samples_per_loop = static_cast<std::size_t>(2 * n_steps + 1);
    res.loops = cfg.loops;

    // Unmeasured staircase loops with identical per-step timing settle the
    // voltage-driven orbit before sampling starts.
    const double warm_dwell = cfg.dwell + tb.timing().sweep_duration;
    for (int loop = 0; loop < cfg.warmup_loops; ++loop) {
        for (int i = 0; i <= n_steps; ++i) {
            tb.set_bias(cfg.v_min + static_cast<double>(i) * cfg.step);
            tb.wait(warm_dwell);
        }
        for (int j = 1; j <= n_steps; ++j) {
            tb.set_bias(cfg.v_max - static_cast<double>(j) * cfg.step);
            tb.wait(warm_dwell);
        }
    }

    for (int loop = 0; loop < cfg.loops; ++loop) {
        for (int i = 0; i <= n_steps; ++i) {
            tb.set_bias(cfg.v_min + static_cast<double>(i) * cfg.step);
            tb.wait(cfg.dwell);
            tb.sweep_once();
        }
        for (int j = 1; j <= n_steps; ++j) {
            tb.set_bias(cfg.v_max - static_cast<double>(j) * cfg.step);
            tb.wait(cfg.dwell);
            tb.sweep_once();
        }
    }
    // Closing sample back at the start of the staircase.
    tb.set_bias(cfg.v_min);
    tb.wait(cfg.dwell);
    tb.sweep_once();
    return res;
}

// --- memory ---------------------------------------------------------------

namespace {

control::SetpointSpec memory_reset_spec(const MemoryConfig& cfg) {
    control::SetpointSpec spec;
    spec.indicator = control::Indicator::ZC11;
    spec.target = cfg.setpoint;
    spec.tol = cfg.tol;
    spec.tol_mode = control::TolMode::Bilateral;
    spec.v_up = cfg.v_reset;
    spec.v_down = -cfg.v_reset;
    spec.tick = cfg.tick;
    spec.max_ticks = cfg.max_ticks;
    return spec;
}

}  // namespace

std::vector<MemoryLevel> memory_store(bench::Testbench& tb, const MemoryConfig& cfg) {
    if (cfg.n_levels < 2) throw std::invalid_argument("memory ladder needs >= 2 levels");
    std::vector<MemoryLevel> out;
    out.reserve(static_cast<std::size_t>(cfg.n_levels));
    const auto spec = memory_reset_spec(cfg);

    for (int level = 1; level <= cfg.n_levels; ++level) {
        control::drive_to_setpoint(tb, spec);
        const double baseline = tb.log().back().zc22;

        MemoryLevel rec;
        rec.level = level;
        rec.t_p = cfg.t_p_base * static_cast<double>(level);
        rec.zc22_baseline = baseline;

        tb.set_bias(cfg.v_write);
        tb.wait(rec.t_p);
        tb.set_bias(0.0);

        const int n_hold = static_cast<int>(std::lround(cfg.hold / cfg.hold_sample));
        std::vector<double> zs;
        zs.reserve(static_cast<std::size_t>(n_hold));
        for (int i = 0; i < n_hold; ++i) {
            tb.wait(cfg.hold_sample);
            zs.push_back(tb.sweep_once().zc22);
        }
        double sum = 0;
        for (double z : zs) sum += z;
        rec.hold_mean = sum / n_hold;
        // Variance of the readings around the slow hold decay (the fading
        // of the stored level is a trend, not measurement scatter). A
        // quadratic captures the curvature of the exponential fade.
        if (n_hold > 3) {
            double s1 = n_hold, sx = 0, sx2 = 0, sx3 = 0, sx4 = 0, sy = 0, sxy = 0, sx2y = 0;
            for (int i = 0; i < n_hold; ++i) {
                const double x = i, y = zs[static_cast<std::size_t>(i)];
                sx += x; sx2 += x * x; sx3 += x * x * x; sx4 += x * x * x * x;
                sy += y; sxy += x * y; sx2y += x * x * y;
            }
            // solve the 3x3 normal equations by elimination
            double m[3][4] = {{s1, sx, sx2, sy},
                              {sx, sx2, sx3, sxy},
                              {sx2, sx3, sx4, sx2y}};
            for (int col = 0; col < 3; ++col) {
                int piv = col;
                for (int r = col + 1; r < 3; ++r)
                    if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
                std::swap(m[piv], m[col]);
                for (int r = 0; r < 3; ++r) {
                    if (r == col || m[col][col] == 0) continue;
                    const double f = m[r][col] / m[col][col];
                    for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
                }
            }
            const double c0 = m[0][3] / m[0][0];
            const double c1 = m[1][3] / m[1][1];
            const double c2 = m[2][3] / m[2][2];
            double ss = 0;
            for (int i = 0; i < n_hold; ++i) {
                const double x = i;
                const double r = zs[static_cast<std::size_t>(i)] - (c0 + c1 * x + c2 * x * x);
                ss += r * r;
            }
            rec.hold_var = ss / (n_hold - 3);
        }
        rec.delta = rec.hold_mean - rec.zc22_baseline;
        out.push_back(rec);
    }
    return out;
}

std::vector<PulseMemoryLevel> pulse_memory(bench::Testbench& tb, const PulseMemoryConfig& cfg) {
    if (cfg.counts.empty()) throw std::invalid_argument("pulse ladder needs counts");
    MemoryConfig mc;
    mc.setpoint = cfg.setpoint;
    mc.tol = cfg.tol;
    mc.v_reset = cfg.v_reset;
    mc.tick = cfg.tick;
    const auto spec = memory_reset_spec(mc);

    std::vector<PulseMemoryLevel> out;
    for (int count : cfg.counts) {
        if (count < 0) throw std::invalid_argument("pulse counts must be non-negative");
        control::drive_to_setpoint(tb, spec);

        PulseMemoryLevel rec;
        rec.count = count;
        rec.zc22_baseline = tb.log().back().zc22;

        for (int i = 0; i < count; ++i) {
            tb.set_bias(cfg.v_pulse);
            tb.wait(cfg.t_high);
            tb.set_bias(0.0);
            tb.wait(cfg.t_low);
        }
        tb.set_bias(0.0);
        const int n_hold = static_cast<int>(std::lround(cfg.hold / cfg.hold_sample));
        double sum = 0;
        for (int i = 0; i < n_hold; ++i) {
            tb.wait(cfg.hold_sample);
            const double z = tb.sweep_once().zc22;
            rec.hold_samples.push_back(z);
            sum += z;
        }
        rec.hold_mean = sum / n_hold;
        rec.delta = rec.hold_mean - rec.zc22_baseline;
        out.push_back(rec);
    }
    return out;
}

// --- classification -------------------------------------------------------

ClassifyResult classify_inmemory(bench::Testbench& tb, const digits::DigitSet& ds,
                                 int weighted_digit, const ClassifyConfig& cfg) {
    if (weighted_digit < 0 || weighted_digit > 9)
        throw std::invalid_argument("weighted digit must be 0..9");
    const auto weights = weights_for(ds[weighted_digit], cfg.w_black, cfg.w_white);

    ClassifyResult res;
    for (int d = 0; d < 10; ++d) {
        control::charge_reset(tb, cfg.setpoint, cfg.tol);
        const auto schedule = serialize_digit(ds[d], weights, cfg.v_black, cfg.v_white);
        const auto zc = stream_schedule(tb, schedule, true);
        res.finals[static_cast<std::size_t>(d)] = zc.back();
    }
    res.argmin = static_cast<int>(
        std::min_element(res.finals.begin(), res.finals.end()) - res.finals.begin());
    return res;
}

std::array<double, 10> differentiation_run(bench::Testbench& tb, const digits::DigitSet& ds,
                                           double w, std::span<const int> order) {
    if (order.empty()) throw InsufficientData("differentiation needs at least one digit");
    const auto weights = uniform_weights(w);
    std::array<double, 10> finals{};
    for (int d : order) {
        if (d < 0 || d > 9) throw std::invalid_argument("digit out of range");
        const auto schedule = serialize_digit(ds[d], weights);
        const auto zc = stream_schedule(tb, schedule, true);
        finals[static_cast<std::size_t>(d)] = zc.back();
    }
    return finals;
}

// --- progressive adaptation -------------------------------------------------

AdaptationResult progressive_adaptation(bench::Testbench& tb, const digits::DigitSet& ds,
                                        const AdaptationConfig& cfg) {
    if (cfg.k > 0) throw std::invalid_argument("adaptation offset scale must be <= 0");
    const auto weights = weights_for(ds[cfg.weighted_digit], cfg.w_black, cfg.w_white);
    const auto offsets = ramp_offsets(cfg.k);

    // The reset parks the port-1 indicator on the high side of its map,
    // opposite the classification experiments: there the serialization
    // voltage and the relaxation pull the indicator the same way, and the
    // weighted digit runs deepest.
    control::SetpointSpec reset;
    reset.indicator = control::Indicator::ZC11;
    reset.target = cfg.setpoint;
    reset.tol = cfg.tol;
    reset.tol_mode = control::TolMode::Bilateral;
    reset.v_up = cfg.v_reset;
    reset.v_down = -cfg.v_reset;
    reset.tick = cfg.tick;
    reset.max_ticks = cfg.max_ticks;

    AdaptationResult res;
    std::array<double, 10> lo{}, hi{};
    lo.fill(1e300);
    hi.fill(-1e300);

    for (int rep = 0; rep < cfg.reps; ++rep) {
        for (int d = 0; d < 10; ++d) {
            control::drive_to_setpoint(tb, reset);
            const auto schedule =
                serialize_digit(ds[d], weights, cfg.v_black, cfg.v_white, offsets);
            const std::size_t before = tb.log_size();
            stream_schedule(tb, schedule, true);
            for (std::size_t i = before; i < tb.log_size(); ++i) {
                const double z = tb.log()[i].zc11;
                lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], z);
                hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], z);
            }
        }
    }
    for (int d = 0; d < 10; ++d)
        res.dynamic_range[static_cast<std::size_t>(d)] =
            hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)];
    res.max_range_digit = static_cast<int>(
        std::max_element(res.dynamic_range.begin(), res.dynamic_range.end()) -
        res.dynamic_range.begin());
    return res;
}

// --- dynamics reduction -----------------------------------------------------

ReductionResult dynamics_reduction_run(bench::Testbench& tb, const digits::DigitSet& ds,
                                       int weighted_digit, int iterations,
                                       const ClassifyConfig& cfg) {
    ReductionResult res;
    res.iterations.reserve(static_cast<std::size_t>(iterations));
    int hits = 0;
    for (int it = 0; it < iterations; ++it) {
        const auto cls = classify_inmemory(tb, ds, weighted_digit, cfg);
        ReductionIteration rec;
        rec.finals = cls.finals;
        rec.detected = cls.argmin;
        auto sorted = cls.finals;
        std::sort(sorted.begin(), sorted.end());
        rec.threshold = 0.5 * (sorted[0] + sorted[1]);
        rec.range = sorted[9] - sorted[0];
        if (rec.detected == weighted_digit) ++hits;
        res.iterations.push_back(rec);
    }
    res.accuracy = iterations > 0 ? static_cast<double>(hits) / iterations : 0.0;
    return res;
}

// --- chaos probe -------------------------------------------------------------

ChaosProbeResult chaos_probe(bench::Testbench& tb, const ChaosProbeConfig& cfg) {
    ChaosProbeResult res;
    const std::size_t log_begin = tb.log_size();

    control::SetpointSpec leg;
    leg.indicator = control::Indicator::ZC22;
    leg.tol = cfg.tol;
    leg.tol_mode = control::TolMode::Bilateral;
    leg.v_up = cfg.v_up;
    leg.v_down = cfg.v_down;
    leg.tick = cfg.tick;
    leg.max_ticks = cfg.max_ticks;

    for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
        leg.target = cfg.high;
        res.leg_ticks.push_back(control::drive_to_setpoint(tb, leg));
        tb.wait(cfg.pause);
        leg.target = cfg.low;
        res.leg_ticks.push_back(control::drive_to_setpoint(tb, leg));
        tb.wait(cfg.pause);
    }
    for (std::size_t i = log_begin; i < tb.log_size(); ++i)
        res.zc22.push_back(tb.log()[i].zc22);
    return res;
}

double estimate_resolution(const device::DeviceParams& params, const rf::SweepConfig& sweep_cfg,
                           ExecPolicy policy) {
    bench::Testbench tb(params, sweep_cfg, bench::BenchTiming{}, policy);
    tb.wait(30.0);
    const int n = 60;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        tb.wait(1.0);
        const double z = tb.sweep_once().zc22;
        sum += z;
        sum2 += z * z;
    }
    const double var = (sum2 - sum * sum / n) / (n - 1);
    return std::max(3.0 * std::sqrt(std::max(var, 0.0)), 1e-9);
}

// --- script twins -------------------------------------------------------------

namespace {

std::string num(double v) { return csv::exact(v); }

}  // namespace

std::string hysteresis_script(const HysteresisConfig& cfg, const bench::BenchTiming& timing) {
    const double span = cfg.v_max - cfg.v_min;
    const int n_steps = static_cast<int>(std::lround(span / cfg.step));
    std::ostringstream os;
    os << "# triangular staircase sweep with per-dwell readout\n";
    os << "let i = 0\n";
    if (cfg.warmup_loops > 0) {
        const double warm_dwell = cfg.dwell + timing.sweep_duration;
        os << "repeat " << cfg.warmup_loops << " {\n";
        os << "  i = 0\n";
        os << "  while i <= " << n_steps << " { bias " << num(cfg.v_min) << " + i * "
           << num(cfg.step) << " ; wait " << num(warm_dwell) << " ; i = i + 1 }\n";
        os << "  i = 1\n";
        os << "  while i <= " << n_steps << " { bias " << num(cfg.v_max) << " - i * "
           << num(cfg.step) << " ; wait " << num(warm_dwell) << " ; i = i + 1 }\n";
        os << "}\n";
    }
    os << "repeat " << cfg.loops << " {\n";
    os << "  i = 0\n";
    os << "  while i <= " << n_steps << " { bias " << num(cfg.v_min) << " + i * "
       << num(cfg.step) << " ; wait " << num(cfg.dwell)
       << " ; measure ; save T, BIAS, ZC11, ZC22 ; i = i + 1 }\n";
    os << "  i = 1\n";
    os << "  while i <= " << n_steps << " { bias " << num(cfg.v_max) << " - i * "
       << num(cfg.step) << " ; wait " << num(cfg.dwell)
       << " ; measure ; save T, BIAS, ZC11, ZC22 ; i = i + 1 }\n";
    os << "}\n";
    os << "bias " << num(cfg.v_min) << "\n";
    os << "wait " << num(cfg.dwell) << "\n";
    os << "measure\n";
    os << "save T, BIAS, ZC11, ZC22\n";
    return os.str();
}

std::string memory_script(const MemoryConfig& cfg) {
    const int n_hold = static_cast<int>(std::lround(cfg.hold / cfg.hold_sample));
    std::ostringstream os;
    os << "# repeated reset / write / hold ladder\n";
    os << "let lvl = 1\n";
    os << "let err = 0\n";
    os << "repeat " << cfg.n_levels << " {\n";
    os << "  # reset port-1 indicator\n";
    os << "  measure\n";
    os << "  err = ZC11 - " << num(cfg.setpoint) << "\n";
    os << "  if err < 0 { err = 0 - err }\n";
    os << "  while err > " << num(cfg.tol) << " {\n";
    os << "    if ZC11 < " << num(cfg.setpoint) << " { bias " << num(cfg.v_reset)
       << " } else { bias " << num(-cfg.v_reset) << " }\n";
    os << "    wait " << num(cfg.tick) << "\n";
    os << "    measure\n";
    os << "    err = ZC11 - " << num(cfg.setpoint) << "\n";
    os << "    if err < 0 { err = 0 - err }\n";
    os << "  }\n";
    os << "  bias 0\n";
    os << "  # write\n";
    os << "  bias " << num(cfg.v_write) << "\n";
    os << "  wait " << num(cfg.t_p_base) << " * lvl\n";
    os << "  # hold\n";
    os << "  bias 0\n";
    os << "  repeat " << n_hold << " { wait " << num(cfg.hold_sample)
       << " ; measure ; save T, ZC11, ZC22 }\n";
    os << "  lvl = lvl + 1\n";
    os << "}\n";
    return os.str();
}

}  // namespace ffl::experiments
