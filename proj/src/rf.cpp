#include "ffl/rf.hpp"

#include <cmath>
#include <stdexcept>

#include "ffl/errors.hpp"

namespace ffl::rf {

void SweepConfig::validate() const {
    if (!(f_start > 0) || !(f_stop > f_start))
        throw std::invalid_argument("sweep grid requires f_stop > f_start > 0");
    if (n_points < 2) throw std::invalid_argument("sweep requires n_points >= 2");
    if (!(z0 > 0)) throw std::invalid_argument("reference impedance must be positive");
}

std::vector<double> SweepConfig::grid() const {
    validate();
    std::vector<double> f(n_points);
    const double df = (f_stop - f_start) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i)
        f[i] = f_start + static_cast<double>(i) * df;
    f.back() = f_stop;
    return f;
}

ZMatrix z_from_s(const SMatrix& s, double z0) {
    const cplx one(1.0, 0.0);
    const cplx delta = (one - s.s11) * (one - s.s22) - s.s21 * s.s12;
    if (std::abs(delta) <= kSingularGuard) throw SingularConversion();
    ZMatrix z;
    z.z11 = ((one + s.s11) * (one - s.s22) + s.s21 * s.s12) / delta * z0;
    z.z12 = (2.0 * s.s12) / delta * z0;
    z.z21 = (2.0 * s.s21) / delta * z0;
    z.z22 = ((one - s.s11) * (one + s.s22) + s.s21 * s.s12) / delta * z0;
    return z;
}

SMatrix s_from_z(const ZMatrix& z, double z0) {
    const cplx delta = (z.z11 + z0) * (z.z22 + z0) - z.z12 * z.z21;
    // Determinant of (Z + z0*I); scale the guard by z0^2 so the test is
    // dimensionally consistent.
    if (std::abs(delta) <= kSingularGuard * z0 * z0) throw SingularConversion();
    SMatrix s;
    s.s11 = ((z.z11 - z0) * (z.z22 + z0) - z.z12 * z.z21) / delta;
    s.s12 = (2.0 * z.z12 * z0) / delta;
    s.s21 = (2.0 * z.z21 * z0) / delta;
    s.s22 = ((z.z11 + z0) * (z.z22 - z0) - z.z12 * z.z21) / delta;
    return s;
}

double collapse(std::span<const double> z_mags) {
    if (z_mags.empty()) throw EmptySweep();
    double sum = 0.0;
    for (double m : z_mags) sum += m;
    return sum;
}

}  // namespace ffl::rf
