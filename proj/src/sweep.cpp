#include "ffl/sweep.hpp"

#include <atomic>
#include <cmath>

#include "ffl/errors.hpp"

namespace ffl::sweep {

rf::SweepResult eval(const device::DeviceState& state, const device::DeviceParams& params,
                     const rf::SweepConfig& cfg, ExecPolicy policy) {
    rf::SweepResult out;
    out.freqs = cfg.grid();
    const std::size_t n = out.freqs.size();
    out.s11.resize(n); out.s12.resize(n); out.s21.resize(n); out.s22.resize(n);
    out.z11.resize(n); out.z12.resize(n); out.z21.resize(n); out.z22.resize(n);

    // Lowest offending index wins, so the reported error does not depend on
    // thread scheduling.
    std::atomic<std::size_t> singular_at{SingularConversion::npos};

    parallel_for(n, policy, [&](std::size_t i) {
        const rf::ZMatrix dev = device::network_at(state, params, out.freqs[i]);
        try {
            const rf::SMatrix s = rf::s_from_z(dev, cfg.z0);
            const rf::ZMatrix z = rf::z_from_s(s, cfg.z0);
            out.s11[i] = s.s11; out.s12[i] = s.s12; out.s21[i] = s.s21; out.s22[i] = s.s22;
            out.z11[i] = z.z11; out.z12[i] = z.z12; out.z21[i] = z.z21; out.z22[i] = z.z22;
        } catch (const SingularConversion&) {
            std::size_t prev = singular_at.load(std::memory_order_relaxed);
            while (i < prev &&
                   !singular_at.compare_exchange_weak(prev, i, std::memory_order_relaxed)) {
            }
        }
    });

    const std::size_t bad = singular_at.load(std::memory_order_relaxed);
    if (bad != SingularConversion::npos) throw SingularConversion(bad);

    // Ordered accumulation of the collapsed indicators.
    for (std::size_t i = 0; i < n; ++i) {
        out.zc11 += std::abs(out.z11[i]);
        out.zc12 += std::abs(out.z12[i]);
        out.zc21 += std::abs(out.z21[i]);
        out.zc22 += std::abs(out.z22[i]);
    }
    return out;
}

}  // namespace ffl::sweep
