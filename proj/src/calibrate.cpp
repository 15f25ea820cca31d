#include "ffl/calibrate.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "ffl/sweep.hpp"

namespace ffl::calibrate {

IndicatorProbe probe(double w, double s, const device::DeviceParams& p,
                     const rf::SweepConfig& cfg, ExecPolicy policy) {
    device::DeviceState st = device::DeviceState::fresh(p);
    st.w = w;
    st.s = s;
    const auto res = sweep::eval(st, p, cfg, policy);
    return {res.zc11, res.zc12, res.zc21, res.zc22};
}

namespace {

// Solve f(x) = target for an increasing response on x > 0: expand a
// bracket multiplicatively, then bisect. Robust against the r_min clamp
// flattening the response for extreme trial values.
double solve(double x_start, double target, double tol,
             const std::function<double(double)>& f) {
    double lo = x_start, hi = x_start;
    double flo = f(lo) - target, fhi = flo;
    for (int it = 0; it < 80 && flo > 0; ++it) {
        lo *= 0.5;
        flo = f(lo) - target;
    }
    for (int it = 0; it < 80 && fhi < 0; ++it) {
        hi *= 2.0;
        fhi = f(hi) - target;
    }
    if (flo > 0 || fhi < 0) throw std::runtime_error("calibration target out of range");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (std::abs(fm) < tol || hi - lo < 1e-12 * hi) return mid;
        (fm < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Same bracket-and-bisect for parameters that may be negative (additive
// bracket expansion around the start value).
double solve_signed(double x_start, double width, double target, double tol,
                    const std::function<double(double)>& f) {
    double lo = x_start - width, hi = x_start + width;
    double flo = f(lo) - target, fhi = f(hi) - target;
    for (int it = 0; it < 60 && flo > 0; ++it) { lo -= width; width *= 2; flo = f(lo) - target; }
    for (int it = 0; it < 60 && fhi < 0; ++it) { hi += width; width *= 2; fhi = f(hi) - target; }
    if (flo > 0 || fhi < 0) throw std::runtime_error("calibration target out of range");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (std::abs(fm) < tol || hi - lo < 1e-14 * std::max(1.0, std::abs(hi))) return mid;
        (fm < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

device::DeviceParams fit(device::DeviceParams p, const Targets& t, const rf::SweepConfig& cfg) {
    const double weq = p.w_eq;
    const double dw = 0.2;

    // The responses interact weakly through the series branch, so a few
    // outer rounds of one-dimensional solves settle the full map.
    for (int round = 0; round < 6; ++round) {
        p.zmap.r_shunt2 = solve(p.zmap.r_shunt2, t.zc22_base, 0.05,
                                [&](double r) {
                                    auto q = p; q.zmap.r_shunt2 = r;
                                    return probe(weq, 0, q, cfg).zc22;
                                });
        // Linear span is set on the low side (the quadratic boost only acts
        // above w_eq), then the boost pins the high-side anchor.
        p.zmap.shunt2_slope =
            solve(p.zmap.shunt2_slope, t.zc22_span, 0.05,
                  [&](double g) {
                      auto q = p; q.zmap.shunt2_slope = g;
                      return (probe(weq, 0, q, cfg).zc22 -
                              probe(weq - dw, 0, q, cfg).zc22) / dw;
                  });
        p.zmap.shunt2_curv_hi =
            solve_signed(p.zmap.shunt2_curv_hi, 0.5, t.zc22_hi, 0.05,
                         [&](double c) {
                             auto q = p; q.zmap.shunt2_curv_hi = c;
                             return probe(t.zc22_hi_w, 0, q, cfg).zc22;
                         });
        p.zmap.r_shunt1 = solve(p.zmap.r_shunt1, t.zc11_base, 0.05,
                                [&](double r) {
                                    auto q = p; q.zmap.r_shunt1 = r;
                                    return probe(weq, 0, q, cfg).zc11;
                                });
        p.zmap.shunt1_curv =
            solve(p.zmap.shunt1_curv, t.zc11_rise, 0.05,
                  [&](double c) {
                      auto q = p; q.zmap.shunt1_curv = c;
                      return probe(weq + dw, 0, q, cfg).zc11 - probe(weq, 0, q, cfg).zc11;
                  });
        // Trim the odd component of zc11 to zero so the port-1 minimum (and
        // with it the loop crossing point) does not wander with amplitude.
        // Fitted at the sweep orbit's own amplitude.
        const double dw_trim = 0.12;
        p.zmap.shunt1_lin =
            solve_signed(p.zmap.shunt1_lin, 0.05, 0.0, 0.01,
                         [&](double l) {
                             auto q = p; q.zmap.shunt1_lin = l;
                             return probe(weq + dw_trim, 0, q, cfg).zc11 -
                                    probe(weq - dw_trim, 0, q, cfg).zc11;
                         });
        // zc12 falls as the series branch gets heavier, so fit on the
        // series conductance to keep the response increasing.
        const double g_series = solve(1.0 / p.zmap.r_series, t.zc12_base, 0.05,
                                      [&](double g) {
                                          auto q = p; q.zmap.r_series = 1.0 / g;
                                          return probe(weq, 0, q, cfg).zc12;
                                      });
        p.zmap.r_series = 1.0 / g_series;
    }
    p.validate();
    return p;
}

}  // namespace ffl::calibrate
