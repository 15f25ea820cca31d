#include "ffl/device.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ffl/csv.hpp"
#include "ffl/errors.hpp"
#include "ffl/prng.hpp"

namespace ffl::device {

namespace {

constexpr double kMaxBias = 10.0;   // V
constexpr double kTanhScale = 1.0;  // V, saturation scale of the drive
constexpr double kChaosFloor = 1e-12;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Odd, saturating drive nonlinearity.
double drive(double v) { return std::tanh(v / kTanhScale); }

// Window vanishing at w = 0 and w = 1.
double window(double w) { return 4.0 * w * (1.0 - w); }

// Zero-mean ensemble perturbation: difference between the two oscillator
// half-group means, scaled by chaos_eps.
double chaos_term(const std::vector<double>& c, double eps) {
    if (eps == 0.0 || c.empty()) return 0.0;
    const std::size_t half = c.size() / 2;
    double hi = 0.0, lo = 0.0;
    for (std::size_t i = 0; i < half; ++i) hi += c[i];
    for (std::size_t i = half; i < c.size(); ++i) lo += c[i];
    return eps * (hi - lo) / static_cast<double>(half);
}

void advance_chaos(std::vector<double>& c, double r) {
    for (double& x : c) {
        x = r * x * (1.0 - x);
        x = std::clamp(x, kChaosFloor, 1.0 - kChaosFloor);
    }
}

// One explicit substep of the governing equations.
void substep(DeviceState& st, const DeviceParams& p, double v, double h) {
    if (p.chaos_eps > 0.0) advance_chaos(st.c, p.chaos_r);
    const double g = 1.0 / (1.0 + p.fatigue_kappa * st.a);
    const double dw = g * p.w_gain * drive(v) * window(st.w) - p.w_relax * (st.w - p.w_eq);
    const double ds = p.s_gain * v - p.s_relax * st.s + chaos_term(st.c, p.chaos_eps);
    double da;
    if (v <= p.fatigue_recovery_v) {
        da = -p.fatigue_recovery_rate;
    } else {
        da = p.fatigue_gain * std::abs(v);
    }
    st.w = clamp01(st.w + h * dw);
    st.s += h * ds;
    st.a = clamp01(st.a + h * da);
}

}  // namespace

void DeviceParams::validate() const {
    if (!(w_gain > 0 && w_relax > 0 && s_gain > 0 && s_relax > 0))
        throw std::invalid_argument("device rates must be strictly positive");
    if (!(s_relax > 10.0 * w_relax))
        throw std::invalid_argument("short-term decay must exceed 10x long-term relaxation");
    if (!(w_eq > 0 && w_eq < 1))
        throw std::invalid_argument("w_eq must be inside (0,1)");
    if (chaos_eps < 0) throw std::invalid_argument("chaos_eps must be >= 0");
    if (chaos_eps > 0 && !(chaos_r > 3.57 && chaos_r <= 4.0))
        throw std::invalid_argument("chaos_r must be in (3.57, 4] when chaos is enabled");
    if (n_osc < 2 || n_osc % 2 != 0)
        throw std::invalid_argument("n_osc must be even and >= 2");
    if (asym < 0 || asym > 0.2)
        throw std::invalid_argument("asym must be in [0, 0.2]");
    if (!(dt_int > 0 && dt_int <= 0.01))
        throw std::invalid_argument("dt_int must be in (0, 10 ms]");
    if (!(fatigue_gain > 0 && fatigue_recovery_rate > 0 && fatigue_kappa > 0))
        throw std::invalid_argument("fatigue parameters must be strictly positive");
    if (!(fatigue_recovery_v < 0 && fatigue_recovery_v >= -kMaxBias))
        throw std::invalid_argument("fatigue_recovery_v must be negative and reachable");
    const auto& z = zmap;
    if (!(z.r_series > 0 && z.r_shunt1 > 0 && z.r_shunt2 > 0 && z.r_min > 0))
        throw std::invalid_argument("zmap resistances must be positive");
    if (!(z.c_series > 0 && z.c_shunt1 > 0 && z.c_shunt2 > 0))
        throw std::invalid_argument("zmap capacitances must be positive");
}

DeviceState DeviceState::fresh(const DeviceParams& params) {
    params.validate();
    DeviceState st;
    st.w = params.w_eq;
    st.s = 0.0;
    st.a = 0.0;
    st.t = 0.0;
    st.c.resize(static_cast<std::size_t>(params.n_osc));
    SplitMix64 rng(params.seed ^ 0xFFC0FFC0FFC0FFC0ULL);
    for (double& x : st.c) {
        // Keep seeds away from the map's degenerate orbits.
        x = 0.05 + 0.9 * rng.next_unit();
    }
    return st;
}

DeviceState step(DeviceState state, const DeviceParams& params, double volts, double dt) {
    if (std::abs(volts) > kMaxBias) throw BiasOutOfRange(volts);
    if (dt < 0) throw InvalidDuration(dt);
    if (dt == 0) return state;

    const double h = params.dt_int;
    const auto n_full = static_cast<std::size_t>(std::floor(dt / h + 1e-9));
    const double rem = dt - static_cast<double>(n_full) * h;
    for (std::size_t i = 0; i < n_full; ++i) substep(state, params, volts, h);
    if (rem > 1e-12) substep(state, params, volts, rem);
    state.t += dt;
    return state;
}

DeviceState restore(DeviceState state, const DeviceParams& params, double duration) {
    if (!(duration > 0)) throw InvalidDuration(duration);
    return step(std::move(state), params, -kMaxBias, duration);
}

DeviceState settle(DeviceState state, const DeviceParams& params, double duration) {
    if (duration < 0) throw InvalidDuration(duration);
    return step(std::move(state), params, 0.0, duration);
}

rf::ZMatrix network_at(const DeviceState& state, const DeviceParams& params, double freq) {
    if (!(freq > 0)) throw std::invalid_argument("frequency must be positive");
    const auto& zm = params.zmap;

    const double u1 = state.w;
    const double u2 = state.w + zm.s_couple * state.s;
    const double d1 = u1 - params.w_eq;
    const double r1 = std::max(
        zm.r_min, zm.r_shunt1 * (1.0 + zm.shunt1_curv * d1 * d1 + zm.shunt1_lin * d1));
    const double d2 = u2 - params.w_eq;
    const double d2_hi = d2 > 0 ? d2 : 0.0;
    const double r2 = std::max(
        zm.r_min,
        zm.r_shunt2 * (1.0 + zm.shunt2_slope * d2 + zm.shunt2_curv_hi * d2_hi * d2_hi));

    const double omega = 2.0 * M_PI * freq;
    auto branch = [omega](double r, double cap) {
        // Parallel RC branch admittance.
        return rf::cplx(1.0 / r, omega * cap);
    };
    const rf::cplx y1 = branch(r1, zm.c_shunt1);
    const rf::cplx y2 = branch(r2, zm.c_shunt2);
    const rf::cplx ys = branch(zm.r_series, zm.c_series);

    const rf::cplx det = y1 * y2 + y1 * ys + y2 * ys;
    const rf::cplx zc = ys / det;  // reciprocal off-diagonal of the pi network

    rf::ZMatrix z;
    z.z11 = (y2 + ys) / det;
    z.z22 = (y1 + ys) / det;
    // Non-reciprocal skew models the slight |S12| vs |S21| imbalance.
    z.z12 = zc * (1.0 - 0.5 * params.asym);
    z.z21 = zc * (1.0 + 0.5 * params.asym);
    return z;
}

// --- parameter file I/O ------------------------------------------------

namespace {

struct KeyBinding {
    const char* key;
    double DeviceParams::* field;
};

struct ZKeyBinding {
    const char* key;
    double ZMapParams::* field;
};

constexpr KeyBinding kDoubleKeys[] = {
    {"w_eq", &DeviceParams::w_eq},
    {"w_gain", &DeviceParams::w_gain},
    {"w_relax", &DeviceParams::w_relax},
    {"s_gain", &DeviceParams::s_gain},
    {"s_relax", &DeviceParams::s_relax},
    {"fatigue_gain", &DeviceParams::fatigue_gain},
    {"fatigue_recovery_v", &DeviceParams::fatigue_recovery_v},
    {"fatigue_recovery_rate", &DeviceParams::fatigue_recovery_rate},
    {"fatigue_kappa", &DeviceParams::fatigue_kappa},
    {"chaos_eps", &DeviceParams::chaos_eps},
    {"chaos_r", &DeviceParams::chaos_r},
    {"asym", &DeviceParams::asym},
    {"dt_int", &DeviceParams::dt_int},
};

constexpr ZKeyBinding kZmapKeys[] = {
    {"zmap.r_series", &ZMapParams::r_series},
    {"zmap.c_series", &ZMapParams::c_series},
    {"zmap.r_shunt1", &ZMapParams::r_shunt1},
    {"zmap.c_shunt1", &ZMapParams::c_shunt1},
    {"zmap.shunt1_curv", &ZMapParams::shunt1_curv},
    {"zmap.shunt1_lin", &ZMapParams::shunt1_lin},
    {"zmap.r_shunt2", &ZMapParams::r_shunt2},
    {"zmap.c_shunt2", &ZMapParams::c_shunt2},
    {"zmap.shunt2_slope", &ZMapParams::shunt2_slope},
    {"zmap.shunt2_curv_hi", &ZMapParams::shunt2_curv_hi},
    {"zmap.s_couple", &ZMapParams::s_couple},
    {"zmap.r_min", &ZMapParams::r_min},
};

}  // namespace

DeviceParams load_params(std::istream& in, std::vector<std::string>& notices) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            // Blank or comment-only lines are fine; anything else is noise.
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                notices.push_back("line " + std::to_string(lineno) + ": ignored (no '=')");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    DeviceParams p;
    auto take = [&kv](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto parse_double = [](const std::string& key, const std::string& text) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad value for " + key + ": '" + text + "'");
        }
    };

    for (const auto& b : kDoubleKeys) {
        if (const auto* v = take(b.key)) {
            p.*(b.field) = parse_double(b.key, *v);
            kv.erase(b.key);
        } else {
            notices.push_back(std::string(b.key) + " missing, using default " +
                              csv::exact(p.*(b.field)));
        }
    }
    for (const auto& b : kZmapKeys) {
        if (const auto* v = take(b.key)) {
            p.zmap.*(b.field) = parse_double(b.key, *v);
            kv.erase(b.key);
        } else {
            notices.push_back(std::string(b.key) + " missing, using default " +
                              csv::exact(p.zmap.*(b.field)));
        }
    }
    if (const auto* v = take("n_osc")) {
        p.n_osc = static_cast<int>(parse_double("n_osc", *v));
        kv.erase("n_osc");
    } else {
        notices.push_back("n_osc missing, using default " + std::to_string(p.n_osc));
    }
    if (const auto* v = take("seed")) {
        p.seed = static_cast<std::uint64_t>(std::stoull(*v));
        kv.erase("seed");
    } else {
        notices.push_back("seed missing, using default " + std::to_string(p.seed));
    }
    for (const auto& [key, value] : kv)
        notices.push_back("unknown key '" + key + "' ignored");

    p.validate();
    return p;
}

void save_params(std::ostream& out, const DeviceParams& p) {
    out << "# ferrolab device parameters\n";
    for (const auto& b : kDoubleKeys)
        out << b.key << " = " << csv::exact(p.*(b.field)) << "\n";
    out << "n_osc = " << p.n_osc << "\n";
    out << "seed = " << p.seed << "\n";
    for (const auto& b : kZmapKeys)
        out << b.key << " = " << csv::exact(p.zmap.*(b.field)) << "\n";
}

}  // namespace ffl::device
