#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ffl::rf {

using cplx = std::complex<double>;

// Two-port scattering parameters at one frequency.
struct SMatrix {
    cplx s11, s12, s21, s22;
};

// Two-port impedance parameters at one frequency.
struct ZMatrix {
    cplx z11, z12, z21, z22;
};

// |Delta_S| (or the z-domain determinant scale) below this is treated as a
// non-invertible matrix.
constexpr double kSingularGuard = 1e-12;

struct SweepConfig {
    double f_start = 10e6;   // Hz
    double f_stop = 6e9;     // Hz
    std::size_t n_points = 101;
    double power_dbm = 0.0;  // informational only; readout is non-perturbative
    double z0 = 50.0;        // ohm

    void validate() const;
    // Linear grid including both endpoints.
    std::vector<double> grid() const;
};

struct SweepResult {
    std::vector<double> freqs;
    std::vector<cplx> s11, s12, s21, s22;
    std::vector<cplx> z11, z12, z21, z22;
    // Collapsed indicators: sum of |Z_xy| over all frequency points.
    double zc11 = 0, zc12 = 0, zc21 = 0, zc22 = 0;
    double t = 0;  // simulated timestamp (s)

    std::size_t size() const { return freqs.size(); }
};

// S -> Z conversion. Throws SingularConversion when |Delta_S| <= guard.
ZMatrix z_from_s(const SMatrix& s, double z0);

// Z -> S conversion (inverse transform used by the emulated VNA). Throws
// SingularConversion when (Z + z0*I) is not invertible.
SMatrix s_from_z(const ZMatrix& z, double z0);

// Collapsed indicator: plain sum of magnitude samples across the sweep.
// Throws EmptySweep on an empty span.
double collapse(std::span<const double> z_mags);

}  // namespace ffl::rf
