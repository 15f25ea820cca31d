#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ffl/calibrate.hpp"
#include "ffl/device.hpp"
#include "ffl/errors.hpp"
#include "ffl/prng.hpp"
#include "ffl/sweep.hpp"

using namespace ffl;
using device::DeviceParams;
using device::DeviceState;

namespace {

DeviceParams smooth_params() {
    DeviceParams p;
    p.chaos_eps = 0.0;
    return p;
}

double zc22_of(const DeviceState& st, const DeviceParams& p) {
    return sweep::eval(st, p, {}, ExecPolicy::Serial).zc22;
}

// Test-only reference integrator: same governing equations, explicit Euler
// at a 20x finer substep. Independent of device::step's substepping logic.
DeviceState reference_step(DeviceState st, const DeviceParams& p, double v, double dt,
                           double h = 0.0005) {
    const auto n = static_cast<std::size_t>(std::llround(dt / h));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = 1.0 / (1.0 + p.fatigue_kappa * st.a);
        const double win = 4.0 * st.w * (1.0 - st.w);
        const double dw = g * p.w_gain * std::tanh(v) * win - p.w_relax * (st.w - p.w_eq);
        const double ds = p.s_gain * v - p.s_relax * st.s;
        const double da = v <= p.fatigue_recovery_v ? -p.fatigue_recovery_rate
                                                     : p.fatigue_gain * std::abs(v);
        st.w = std::clamp(st.w + h * dw, 0.0, 1.0);
        st.s += h * ds;
        st.a = std::clamp(st.a + h * da, 0.0, 1.0);
    }
    st.t += dt;
    return st;
}

}  // namespace

TEST_CASE("equilibrium is a fixed point of the noiseless model") {
    const auto p = smooth_params();
    auto st = DeviceState::fresh(p);
    const auto after = device::step(st, p, 0.0, 100.0);
    CHECK(std::abs(after.w - st.w) < 1e-9);
    CHECK(std::abs(after.s - st.s) < 1e-9);
    CHECK(std::abs(after.a - st.a) < 1e-9);
    CHECK(after.t == doctest::Approx(100.0));
}

TEST_CASE("zero-duration step is the identity") {
    DeviceParams p;  // chaos enabled
    auto st = DeviceState::fresh(p);
    st.w = 0.37;
    st.s = -0.01;
    const auto after = device::step(st, p, 3.3, 0.0);
    CHECK(after.w == st.w);
    CHECK(after.s == st.s);
    CHECK(after.a == st.a);
    CHECK(after.c == st.c);
    CHECK(after.t == st.t);
}

TEST_CASE("step rejects out-of-range bias and negative duration") {
    const auto p = smooth_params();
    auto st = DeviceState::fresh(p);
    CHECK_THROWS_AS(device::step(st, p, 10.5, 1.0), BiasOutOfRange);
    CHECK_THROWS_AS(device::step(st, p, -12.0, 1.0), BiasOutOfRange);
    CHECK_THROWS_AS(device::step(st, p, 1.0, -0.1), InvalidDuration);
}

TEST_CASE("negative bias gives a strictly decreasing indicator, matching the"
          " fine-step reference") {
    const auto p = smooth_params();
    auto impl = DeviceState::fresh(p);
    auto ref = DeviceState::fresh(p);
    double prev = zc22_of(impl, p);
    for (int i = 0; i < 60; ++i) {
        impl = device::step(impl, p, -3.3, 1.0);
        ref = reference_step(ref, p, -3.3, 1.0);
        const double z = zc22_of(impl, p);
        CHECK(z < prev);  // strict decrease each second
        prev = z;
        CHECK(impl.w == doctest::Approx(ref.w).epsilon(1e-3));
        CHECK(impl.s == doctest::Approx(ref.s).epsilon(1e-3));
    }
}

TEST_CASE("positive bias raises the port-2 indicator") {
    const auto p = smooth_params();
    auto st = DeviceState::fresh(p);
    const double z0 = zc22_of(st, p);
    st = device::step(st, p, 3.3, 30.0);
    CHECK(zc22_of(st, p) > z0);
}

TEST_CASE("restore drives fatigue down and settle decays the trace") {
    const auto p = smooth_params();
    auto st = DeviceState::fresh(p);

    SUBCASE("fatigue floor") {
        st.a = 0.0;
        const auto after = device::restore(st, p, 10.0);
        CHECK(after.a == 0.0);
    }
    SUBCASE("fatigue strictly decreases under -10 V") {
        st.a = 0.8;
        const double dur = 350.0;  // past 0.6/rate, comfortably below the floor time
        const auto after = device::restore(st, p, dur);
        CHECK(after.a < 0.2);
        // matches the closed-form rate
        CHECK(after.a == doctest::Approx(0.8 - dur * p.fatigue_recovery_rate).epsilon(1e-6));
    }
    SUBCASE("restore rejects zero duration") {
        CHECK_THROWS_AS(device::restore(st, p, 0.0), InvalidDuration);
    }
    SUBCASE("settle decays s by e^-5 over 5/s_relax") {
        st.s = 0.5;
        const auto after = device::settle(st, p, 5.0 / p.s_relax);
        CHECK(std::abs(after.s) < 0.01 * 0.5);
        CHECK(std::abs(after.s) == doctest::Approx(0.5 * std::exp(-5.0)).epsilon(2e-2));
    }
    SUBCASE("settle duration 0 is the identity") {
        st.s = 0.25;
        const auto after = device::settle(st, p, 0.0);
        CHECK(after.s == st.s);
    }
    SUBCASE("long-term level settles much slower than the trace") {
        st.w = 0.8;
        st.s = 0.3;
        const double horizon = 3.0 / p.s_relax;
        const auto after = device::settle(st, p, horizon);
        const double s_residual = std::abs(after.s) / 0.3;
        const double w_residual = std::abs(after.w - p.w_eq) / 0.3;
        CHECK(w_residual / s_residual > 10.0);
    }
}

TEST_CASE("state stays bounded under random admissible programs") {
    DeviceParams p;  // chaos on
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        p.seed = seed;
        auto st = DeviceState::fresh(p);
        SplitMix64 rng(seed * 7919);
        const double s_bound = (p.s_gain * 10.0 + p.chaos_eps) / p.s_relax + 1e-9;
        for (int k = 0; k < 200; ++k) {
            const double v = rng.next_in(-10.0, 10.0);
            const double dt = rng.next_in(0.0, 5.0);
            st = device::step(st, p, v, dt);
            CHECK(st.w >= 0.0);
            CHECK(st.w <= 1.0);
            CHECK(st.a >= 0.0);
            CHECK(st.a <= 1.0);
            CHECK(std::abs(st.s) <= s_bound);
            for (double c : st.c) {
                CHECK(c > 0.0);
                CHECK(c < 1.0);
            }
        }
    }
}

TEST_CASE("trajectories are bit-identical for identical seeds and programs") {
    DeviceParams p;
    p.seed = 42;
    auto a = DeviceState::fresh(p);
    auto b = DeviceState::fresh(p);
    SplitMix64 prog(123);
    for (int k = 0; k < 50; ++k) {
        const double v = prog.next_in(-3.3, 3.3);
        const double dt = prog.next_in(0.0, 3.0);
        a = device::step(a, p, v, dt);
        b = device::step(b, p, v, dt);
    }
    CHECK(a.w == b.w);
    CHECK(a.s == b.s);
    CHECK(a.a == b.a);
    CHECK(a.c == b.c);
}

TEST_CASE("short-term component recovers fast while a long-term offset stays") {
    const auto p = smooth_params();
    auto st = DeviceState::fresh(p);
    st = device::step(st, p, -3.3, 10.0);  // pulse from equilibrium
    const double z_end = zc22_of(st, p);

    // fast phase: a few trace time-constants
    auto fast = device::settle(st, p, 4.0 / p.s_relax);
    const double z_fast = zc22_of(fast, p);
    CHECK(z_fast > z_end);  // rapid partial recovery

    // the remaining offset decays on the much slower w scale
    const double fresh = zc22_of(DeviceState::fresh(p), p);
    const double offset_after_fast = fresh - z_fast;
    auto later = device::settle(fast, p, 100.0 / p.s_relax);
    const double offset_later = fresh - zc22_of(later, p);
    CHECK(offset_after_fast > 0);
    CHECK(offset_later > 0.3 * offset_after_fast);  // persists past 100/s_relax
}

TEST_CASE("network_at is deterministic, symmetric without asym, and positive") {
    auto p = smooth_params();
    p.asym = 0.0;
    auto st = DeviceState::fresh(p);
    st.w = 0.42;
    st.s = -0.02;
    const auto z1 = device::network_at(st, p, 1e9);
    const auto z2 = device::network_at(st, p, 1e9);
    CHECK(z1.z12 == z2.z12);
    CHECK(z1.z11 == z2.z11);
    CHECK(z1.z12 == z1.z21);  // reciprocal when asym = 0

    CHECK_THROWS_AS(device::network_at(st, p, 0.0), std::invalid_argument);

    // resistances stay positive over the full reachable state box
    for (double w : {0.0, 0.25, 0.5, 0.75, 1.0})
        for (double s : {-0.2, 0.0, 0.2}) {
            st.w = w;
            st.s = s;
            for (double f : {10e6, 1e9, 6e9}) {
                const auto z = device::network_at(st, p, f);
                CHECK(std::isfinite(std::abs(z.z11)));
                CHECK(std::isfinite(std::abs(z.z22)));
                CHECK(std::abs(z.z11) > 0);
            }
        }
}

TEST_CASE("calibrated defaults put the collapsed indicators in range") {
    const auto p = smooth_params();
    const auto probe = calibrate::probe(p.w_eq, 0.0, p, rf::SweepConfig{});
    CHECK(probe.zc22 > 14000.0);
    CHECK(probe.zc22 < 16500.0);
    // the port-1 indicator has its minimum at w_eq
    const auto lo = calibrate::probe(p.w_eq - 0.15, 0.0, p, rf::SweepConfig{});
    const auto hi = calibrate::probe(p.w_eq + 0.15, 0.0, p, rf::SweepConfig{});
    CHECK(lo.zc11 > probe.zc11);
    CHECK(hi.zc11 > probe.zc11);
    // and the port-2 indicator is monotone in w
    CHECK(lo.zc22 < probe.zc22);
    CHECK(hi.zc22 > probe.zc22);
}

TEST_CASE("monotone map: zc22 strictly increases with w across the range") {
    const auto p = smooth_params();
    double prev = 0;
    bool first = true;
    for (double w = 0.05; w <= 0.951; w += 0.05) {
        const auto pr = calibrate::probe(w, 0.0, p, rf::SweepConfig{});
        if (!first) CHECK(pr.zc22 > prev);
        prev = pr.zc22;
        first = false;
    }
}

TEST_CASE("parameter file round trip with notices for missing keys") {
    DeviceParams p;
    p.w_gain = 0.0042;
    p.zmap.r_shunt2 = 300.5;
    p.seed = 77;
    std::ostringstream os;
    device::save_params(os, p);

    std::istringstream in(os.str());
    std::vector<std::string> notices;
    const auto q = device::load_params(in, notices);
    CHECK(notices.empty());
    CHECK(q.w_gain == p.w_gain);
    CHECK(q.zmap.r_shunt2 == p.zmap.r_shunt2);
    CHECK(q.seed == 77);

    std::istringstream partial("w_gain = 0.002\n# comment\nzmap.r_shunt2 = 280\n");
    notices.clear();
    const auto r = device::load_params(partial, notices);
    CHECK(r.w_gain == 0.002);
    CHECK(r.zmap.r_shunt2 == 280.0);
    CHECK(!notices.empty());  // every defaulted key is reported
}

TEST_CASE("parameter validation rejects bad values") {
    DeviceParams p;
    p.s_relax = p.w_relax * 5;  // violates the separation requirement
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = DeviceParams{};
    p.chaos_r = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = DeviceParams{};
    p.asym = 0.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = DeviceParams{};
    p.n_osc = 7;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
