#include "ffl/control.hpp"

#include <cmath>
#include <stdexcept>

#include "ffl/errors.hpp"

namespace ffl::control {

void SetpointSpec::validate() const {
    if (!(tol > 0)) throw std::invalid_argument("setpoint tolerance must be positive");
    if (!(v_up > 0 && v_down < 0))
        throw std::invalid_argument("setpoint drives require v_up > 0 > v_down");
    if (max_ticks < 1) throw std::invalid_argument("max_ticks must be >= 1");
    if (!(tick >= 0)) throw std::invalid_argument("tick must be non-negative");
}

double read_indicator(const rf::SweepResult& res, Indicator which) {
    switch (which) {
        case Indicator::ZC11: return res.zc11;
        case Indicator::ZC12: return res.zc12;
        case Indicator::ZC21: return res.zc21;
        case Indicator::ZC22: return res.zc22;
    }
    return res.zc22;
}

std::size_t drive_to_setpoint(bench::Testbench& tb, const SetpointSpec& spec) {
    spec.validate();
    double zc = read_indicator(tb.sweep_once(), spec.indicator);
    const bool from_below = zc < spec.target;

    // Unilateral: the tolerance band sits on the approach side only, so the
    // first sample within tol of the target (or past it) stops the drive.
    auto accepted = [&](double v) {
        if (spec.tol_mode == TolMode::Bilateral) return std::abs(v - spec.target) <= spec.tol;
        return from_below ? v >= spec.target - spec.tol : v <= spec.target + spec.tol;
    };

    std::size_t ticks = 0;
    while (!accepted(zc)) {
        if (ticks >= spec.max_ticks) throw SetpointUnreachable(zc, ticks);
        tb.set_bias(zc < spec.target ? spec.v_up : spec.v_down);
        tb.wait(spec.tick);
        zc = read_indicator(tb.sweep_once(), spec.indicator);
        ++ticks;
    }
    tb.set_bias(0.0);
    return ticks;
}

std::size_t charge_reset(bench::Testbench& tb, double target, double tol) {
    SetpointSpec spec;
    spec.indicator = Indicator::ZC22;
    spec.target = target;
    spec.tol = tol;
    spec.tol_mode = TolMode::Unilateral;
    spec.v_up = 10.0;
    spec.v_down = -10.0;
    return drive_to_setpoint(tb, spec);
}

void prc_reset(bench::Testbench& tb, double low, double high, double star, double tol) {
    if (!(low < star && star < high))
        throw std::invalid_argument("prc_reset requires low < star < high");

    SetpointSpec leg;
    leg.indicator = Indicator::ZC22;
    leg.tol = tol;
    leg.tol_mode = TolMode::Unilateral;

    leg.target = high;
    leg.v_up = 10.0;
    leg.v_down = -10.0;
    drive_to_setpoint(tb, leg);

    leg.target = low;
    drive_to_setpoint(tb, leg);

    // Fine leg onto the working point, approached from below where the
    // +3.3 V drive fights the relaxation and creeps in with sub-tolerance
    // steps.
    leg.target = star;
    leg.v_up = 3.3;
    leg.v_down = -3.3;
    drive_to_setpoint(tb, leg);
}

}  // namespace ffl::control
