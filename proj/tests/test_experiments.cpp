#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ffl/errors.hpp"
#include "ffl/experiments.hpp"

using namespace ffl;
using namespace ffl::experiments;

namespace {

device::DeviceParams smooth() {
    device::DeviceParams p;
    p.chaos_eps = 0.0;
    return p;
}

const digits::DigitSet& ds() { return digits::DigitSet::builtin(); }

}  // namespace

TEST_CASE("builtin dataset invariants") {
    CHECK_NOTHROW(ds().validate());
    // 3 strictly inside 8
    CHECK(ds()[3].subset_of(ds()[8]));
    CHECK(!ds()[8].subset_of(ds()[3]));
    CHECK(ds()[3].black_count() < ds()[8].black_count());
    // pairwise distinct ink
    std::set<int> counts;
    for (int d = 0; d < 10; ++d) counts.insert(ds()[d].black_count());
    CHECK(counts.size() == 10);
}

TEST_CASE("dataset file round trip") {
    std::ostringstream os;
    ds().save(os);
    std::istringstream in(os.str());
    const auto loaded = digits::DigitSet::parse(in);
    for (int d = 0; d < 10; ++d) CHECK(loaded[d].px == ds()[d].px);

    std::istringstream bad("########\n");
    CHECK_THROWS_AS(digits::DigitSet::parse(bad), std::invalid_argument);
}

TEST_CASE("dataset file shipped in the repo matches the builtin") {
    const char* dir = std::getenv("FFL_DATA_DIR");
    REQUIRE(dir != nullptr);
    const auto loaded = digits::DigitSet::load_file(std::string(dir) + "/digits8x8.txt");
    for (int d = 0; d < 10; ++d) CHECK(loaded[d].px == ds()[d].px);
}

TEST_CASE("serialization covers every pixel bottom-left to top-right") {
    const auto weights = uniform_weights(4.0);
    const auto sched = serialize_digit(ds()[8], weights);
    REQUIRE(sched.segments.size() == 64);
    std::set<int> seen;
    for (const auto& seg : sched.segments) seen.insert(seg.pixel_index);
    CHECK(seen.size() == 64);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 63);
    // first segment is the bottom-left pixel, last is the top-right
    CHECK(sched.segments.front().pixel_index == 0);
    CHECK(sched.segments.back().pixel_index == 63);
    // index 63 corresponds to the top-right corner of the glyph
    const bool top_right_black = ds()[8].at(0, 7);
    CHECK((sched.segments.back().volts != 0.0) == top_right_black);
}

TEST_CASE("all-white glyph serializes to 64 zero-volt segments") {
    digits::DigitBitmap blank{};
    const auto sched = serialize_digit(blank, uniform_weights(4.0));
    for (const auto& seg : sched.segments) {
        CHECK(seg.volts == 0.0);
        CHECK(seg.duration == 4.0);
    }
}

TEST_CASE("weighting stretches the expected black pixels") {
    const auto weights = weights_for(ds()[4], 4.5, 0.25);
    int long_px = 0;
    for (double w : weights) {
        CHECK((w == 4.5 || w == 0.25));
        long_px += w == 4.5;
    }
    CHECK(long_px == ds()[4].black_count());
}

TEST_CASE("offsets: overflow rejected, ramp flips sign at pixel 32") {
    const auto offs = ramp_offsets(-0.9);
    CHECK(offs[0] == doctest::Approx(-0.9));
    CHECK(offs[32] == doctest::Approx(0.0));
    CHECK(offs[33] > 0.0);
    CHECK(offs[63] == doctest::Approx(-0.9 * (1.0 - 63.0 / 32.0)));

    std::array<double, 64> big{};
    big.fill(-7.0);
    CHECK_THROWS_AS(serialize_digit(ds()[4], uniform_weights(1.0), -3.3, 0.0, big),
                    BiasOutOfRange);
}

TEST_CASE("hysteresis sample accounting") {
    HysteresisConfig cfg;
    cfg.loops = 2;
    cfg.warmup_loops = 0;
    bench::Testbench tb(smooth());
    const auto res = hysteresis_sweep(tb, cfg);
    CHECK(res.samples_per_loop == 153);  // 77 up + 76 down
    CHECK(tb.log().size() == 2 * 153 + 1);

    HysteresisConfig bad;
    bad.step = 0.37;  // does not divide the range
    bench::Testbench tb2(smooth());
    CHECK_THROWS_AS(hysteresis_sweep(tb2, bad), std::invalid_argument);
}

TEST_CASE("memory ladder: monotone, distinct, quiet holds") {
    device::DeviceParams p;  // chaos on: variance contract included
    bench::Testbench tb(p);
    MemoryConfig cfg;
    cfg.n_levels = 6;  // shortened ladder for the unit suite
    const auto recs = memory_store(tb, cfg);
    REQUIRE(recs.size() == 6);
    const double eps_d = estimate_resolution(p);
    for (std::size_t i = 1; i < recs.size(); ++i) {
        CHECK(recs[i].delta > recs[i - 1].delta);
        CHECK(recs[i].delta - recs[i - 1].delta > eps_d);
    }
    for (const auto& r : recs) {
        CHECK(r.t_p == doctest::Approx(4.0 * r.level));
        CHECK(std::sqrt(r.hold_var) < 3.0 * eps_d);
    }
    CHECK_THROWS_AS(memory_store(tb, [] { MemoryConfig c; c.n_levels = 1; return c; }()),
                    std::invalid_argument);
}

TEST_CASE("zero write duration leaves no mark") {
    bench::Testbench tb(smooth());
    MemoryConfig cfg;
    cfg.n_levels = 2;
    cfg.t_p_base = 0.0;  // both levels write for 0 s
    const auto recs = memory_store(tb, cfg);
    // fading of the stored level during the hold bounds the residual delta
    for (const auto& r : recs) CHECK(std::abs(r.delta) < 60.0);
}

TEST_CASE("pulse trains: duty cycle and level separation") {
    PulseMemoryConfig cfg;
    CHECK(cfg.t_high / (cfg.t_high + cfg.t_low) == doctest::Approx(0.25));

    cfg.counts = {0, 8, 16, 24};
    cfg.hold = 10.0;
    bench::Testbench tb(smooth());
    const auto recs = pulse_memory(tb, cfg);
    REQUIRE(recs.size() == 4);
    CHECK(std::abs(recs[0].delta) < 30.0);  // zero pulses: hold fading only
    for (std::size_t i = 2; i < recs.size(); ++i)
        CHECK(recs[i].delta > recs[i - 1].delta);
    // separation maintained along the hold decay
    for (std::size_t k = 0; k < recs[1].hold_samples.size(); ++k) {
        CHECK(recs[2].hold_samples[k] > recs[1].hold_samples[k]);
        CHECK(recs[3].hold_samples[k] > recs[2].hold_samples[k]);
    }
}

TEST_CASE("classification: weighted digit wins, subset fails to 8, ties break low") {
    device::DeviceParams p;
    p.seed = 1000 + 4;
    bench::Testbench tb(p);
    const auto res4 = classify_inmemory(tb, ds(), 4);
    CHECK(res4.argmin == 4);

    device::DeviceParams p3;
    p3.seed = 1000 + 3;
    bench::Testbench tb3(p3);
    const auto res3 = classify_inmemory(tb3, ds(), 3);
    CHECK(res3.argmin == 8);
    CHECK(res3.finals[8] < res3.finals[3]);

    ClassifyResult tie;
    tie.finals.fill(1.0);
    const auto argmin = static_cast<int>(
        std::min_element(tie.finals.begin(), tie.finals.end()) - tie.finals.begin());
    CHECK(argmin == 0);  // std::min_element keeps the first of equals
}

TEST_CASE("classification monotonicity: extra ink never raises the final") {
    // digit 3's pixels are a subset of digit 8's; under identical weights the
    // superset must end at or below the subset.
    bench::Testbench tb(smooth());
    const auto res = classify_inmemory(tb, ds(), 3);
    CHECK(res.finals[8] <= res.finals[3]);
}

TEST_CASE("differentiation: ten distinct finals at the startup resolution") {
    device::DeviceParams p;
    bench::Testbench tb(p);
    const double eps_d = estimate_resolution(p);
    const auto finals = differentiation_run(tb, ds());
    for (int a = 0; a < 10; ++a)
        for (int b = a + 1; b < 10; ++b)
            CHECK(std::abs(finals[static_cast<std::size_t>(a)] -
                           finals[static_cast<std::size_t>(b)]) > eps_d);

    std::vector<int> empty;
    bench::Testbench tb2(p);
    CHECK_THROWS_AS(differentiation_run(tb2, ds(), 4.0, std::span<const int>(empty)),
                    InsufficientData);
}

TEST_CASE("identical consecutive digits get identical schedules, deterministic run") {
    const auto w = uniform_weights(4.0);
    const auto s1 = serialize_digit(ds()[5], w);
    const auto s2 = serialize_digit(ds()[5], w);
    REQUIRE(s1.segments.size() == s2.segments.size());
    for (std::size_t i = 0; i < s1.segments.size(); ++i) {
        CHECK(s1.segments[i].volts == s2.segments[i].volts);
        CHECK(s1.segments[i].duration == s2.segments[i].duration);
    }
    // replaying the same order twice is bit-deterministic
    static constexpr std::array<int, 4> order = {5, 5, 2, 2};
    device::DeviceParams p;
    bench::Testbench a(p), b(p);
    const auto fa = differentiation_run(a, ds(), 4.0, order);
    const auto fb = differentiation_run(b, ds(), 4.0, order);
    CHECK(fa == fb);
}

TEST_CASE("progressive adaptation: weighted digit dominates the dynamics") {
    bench::Testbench tb(smooth());
    AdaptationConfig cfg;
    cfg.reps = 2;  // shortened
    cfg.weighted_digit = 1;
    const auto res = progressive_adaptation(tb, ds(), cfg);
    CHECK(res.max_range_digit == 1);
    for (int d = 0; d < 10; ++d)
        if (d != 1) CHECK(res.dynamic_range[1] > res.dynamic_range[static_cast<std::size_t>(d)]);

    CHECK_THROWS_AS(progressive_adaptation(tb, ds(), [] {
                        AdaptationConfig c;
                        c.k = 0.5;
                        return c;
                    }()),
                    std::invalid_argument);
}

TEST_CASE("adaptation with zero offset and uniform weights is plain differentiation") {
    AdaptationConfig cfg;
    cfg.k = 0.0;
    cfg.w_black = 4.0;
    cfg.w_white = 4.0;
    const auto offs = ramp_offsets(cfg.k);
    const auto w = weights_for(ds()[1], cfg.w_black, cfg.w_white);
    const auto with_offsets = serialize_digit(ds()[6], w, -3.3, 0.0, offs);
    const auto plain = serialize_digit(ds()[6], uniform_weights(4.0));
    REQUIRE(with_offsets.segments.size() == plain.segments.size());
    for (std::size_t i = 0; i < plain.segments.size(); ++i) {
        CHECK(with_offsets.segments[i].volts == plain.segments[i].volts);
        CHECK(with_offsets.segments[i].duration == plain.segments[i].duration);
    }
}

TEST_CASE("dynamics reduction (short horizon) shrinks the range monotonically-ish") {
    device::DeviceParams p;
    p.fatigue_gain = 2e-6;  // accelerated fatigue for the unit suite
    bench::Testbench tb(p);
    const auto res = dynamics_reduction_run(tb, ds(), 4, 10);
    REQUIRE(res.iterations.size() == 10);
    CHECK(res.iterations.back().range < res.iterations.front().range);
    for (const auto& it : res.iterations) {
        const double lo = *std::min_element(it.finals.begin(), it.finals.end());
        CHECK(it.threshold > lo);  // between the two smallest
    }
}

TEST_CASE("chaos probe: deterministic limit vs chaotic tick counts") {
    ChaosProbeConfig cfg;
    cfg.cycles = 6;

    bench::Testbench quiet(smooth());
    const auto det = chaos_probe(quiet, cfg);
    REQUIRE(det.leg_ticks.size() == 12);
    // The noiseless probe settles onto a tight deterministic orbit: the
    // downward legs stay within a couple of ticks (only the slow fatigue
    // drift moves them) and a rerun reproduces every count exactly.
    std::size_t lo_min = det.leg_ticks[3], lo_max = det.leg_ticks[3];
    for (std::size_t i = 3; i < det.leg_ticks.size(); i += 2) {
        lo_min = std::min(lo_min, det.leg_ticks[i]);
        lo_max = std::max(lo_max, det.leg_ticks[i]);
    }
    CHECK(lo_max - lo_min <= 2);
    bench::Testbench quiet2(smooth());
    const auto det2 = chaos_probe(quiet2, cfg);
    CHECK(det.leg_ticks == det2.leg_ticks);

    device::DeviceParams noisy;
    bench::Testbench chaotic(noisy);
    const auto probe = chaos_probe(chaotic, cfg);
    std::set<std::size_t> distinct(probe.leg_ticks.begin(), probe.leg_ticks.end());
    CHECK(distinct.size() > 2);  // tick counts vary across cycles

    bench::Testbench none(smooth());
    const auto empty = chaos_probe(none, [] {
        ChaosProbeConfig c;
        c.cycles = 0;
        return c;
    }());
    CHECK(empty.zc22.empty());
    CHECK(empty.leg_ticks.empty());
}

TEST_CASE("experiment reruns with the same seed are byte-identical") {
    auto run_csv = [](std::uint64_t seed) {
        device::DeviceParams p;
        p.seed = seed;
        bench::Testbench tb(p);
        HysteresisConfig cfg;
        cfg.loops = 1;
        cfg.warmup_loops = 1;
        hysteresis_sweep(tb, cfg);
        std::ostringstream os;
        tb.export_log_csv(os);
        return os.str();
    };
    CHECK(run_csv(42) == run_csv(42));
}
