#include <doctest.h>

#include <cmath>

#include "ffl/control.hpp"
#include "ffl/errors.hpp"

using namespace ffl;
using control::Indicator;
using control::SetpointSpec;
using control::TolMode;

namespace {

device::DeviceParams smooth() {
    device::DeviceParams p;
    p.chaos_eps = 0.0;
    return p;
}

SetpointSpec zc22_spec(double target, double tol) {
    SetpointSpec s;
    s.indicator = Indicator::ZC22;
    s.target = target;
    s.tol = tol;
    return s;
}

}  // namespace

TEST_CASE("spec validation") {
    SetpointSpec s = zc22_spec(15000, 1.0);
    CHECK_NOTHROW(s.validate());
    s.tol = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = zc22_spec(15000, 1.0);
    s.v_up = -1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = zc22_spec(15000, 1.0);
    s.max_ticks = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("already within tolerance returns zero ticks") {
    bench::Testbench tb(smooth());
    const double here = tb.sweep_once().zc22;
    auto s = zc22_spec(here, 50.0);
    CHECK(control::drive_to_setpoint(tb, s) == 0);
    CHECK(tb.bias() == 0.0);
}

TEST_CASE("setpoint above is reached within tolerance and leaves bias 0") {
    bench::Testbench tb(smooth());
    auto s = zc22_spec(14800.0, 5.0);
    const auto ticks = control::drive_to_setpoint(tb, s);
    CHECK(ticks > 0);
    CHECK(std::abs(tb.sweep_once().zc22 - 14800.0) < 30.0);  // short settle drift allowed
    CHECK(tb.bias() == 0.0);
}

TEST_CASE("setpoint below is reached via the negative branch") {
    bench::Testbench tb(smooth());
    auto s = zc22_spec(14100.0, 5.0);
    control::drive_to_setpoint(tb, s);
    CHECK(std::abs(tb.log().back().zc22 - 14100.0) <= 5.0);
}

TEST_CASE("unreachable targets exhaust max_ticks") {
    bench::Testbench tb(smooth());
    auto s = zc22_spec(1e9, 1.0);
    s.max_ticks = 40;
    CHECK_THROWS_AS(control::drive_to_setpoint(tb, s), SetpointUnreachable);
}

TEST_CASE("direction correctness: sustained drive moves the indicator toward the target") {
    bench::Testbench tb(smooth());
    const double z0 = tb.sweep_once().zc22;
    tb.set_bias(3.3);
    tb.wait(10.0);
    const double z_up = tb.sweep_once().zc22;
    CHECK(z_up > z0);
    tb.set_bias(-3.3);
    tb.wait(10.0);
    CHECK(tb.sweep_once().zc22 < z_up);
}

TEST_CASE("charge_reset reaches the published set point from below") {
    bench::Testbench tb(smooth());
    tb.set_bias(-3.3);
    tb.wait(60.0);  // pull the indicator well below 14338
    CHECK(tb.sweep_once().zc22 < 14338.0);
    control::charge_reset(tb, 14338.0, 5.0);
    const double landed = tb.log().back().zc22;
    CHECK(landed >= 14338.0 - 5.0);
    CHECK(landed <= 14338.0 + 30.0);  // bounded overshoot past the band
    CHECK(tb.bias() == 0.0);
}

TEST_CASE("charge_reset accumulates fatigue; prc_reset does not") {
    const auto p = smooth();

    bench::Testbench charge_bench(p);
    charge_bench.set_bias(-3.3);
    charge_bench.wait(60.0);
    charge_bench.set_bias(0.0);
    charge_bench.wait(0.0);  // settle the lazy integration before reading a
    const double a0 = charge_bench.state().a;
    control::charge_reset(charge_bench, 14338.0, 5.0);
    charge_bench.wait(0.0);
    const double da_charge = charge_bench.state().a - a0;
    CHECK(da_charge > 0);

    bench::Testbench prc_bench(p);
    control::prc_reset(prc_bench, 16350.0, 16450.0, 16400.0, 2.5);
    prc_bench.wait(0.0);
    const double a1 = prc_bench.state().a;
    control::prc_reset(prc_bench, 16350.0, 16450.0, 16400.0, 2.5);
    prc_bench.wait(0.0);
    const double da_prc = prc_bench.state().a - a1;
    // the -10 V leg recovers what the +10 V leg accrued
    CHECK(da_prc < da_charge);
}

TEST_CASE("prc_reset validates ordering and settles onto the working point") {
    bench::Testbench tb(smooth());
    CHECK_THROWS_AS(control::prc_reset(tb, 16400.0, 16450.0, 16350.0, 2.5),
                    std::invalid_argument);

    control::prc_reset(tb, 16350.0, 16450.0, 16400.0, 2.5);
    const double first = tb.log().back().zc22;
    CHECK(std::abs(first - 16400.0) <= 2 * 2.5);
    CHECK(tb.bias() == 0.0);

    // repeatability: a second reset starts within twice the tolerance
    control::prc_reset(tb, 16350.0, 16450.0, 16400.0, 2.5);
    const double second = tb.log().back().zc22;
    CHECK(std::abs(second - first) <= 2 * 2.5);
}

TEST_CASE("indicator selection reads the requested port") {
    bench::Testbench tb(smooth());
    const auto res = tb.sweep_once();
    CHECK(control::read_indicator(res, Indicator::ZC11) == res.zc11);
    CHECK(control::read_indicator(res, Indicator::ZC12) == res.zc12);
    CHECK(control::read_indicator(res, Indicator::ZC21) == res.zc21);
    CHECK(control::read_indicator(res, Indicator::ZC22) == res.zc22);
}
