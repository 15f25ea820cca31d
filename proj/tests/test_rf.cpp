#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "ffl/errors.hpp"
#include "ffl/prng.hpp"
#include "ffl/rf.hpp"

using namespace ffl;
using rf::cplx;

namespace {

double rel_err(cplx a, cplx b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / scale;
}

// Random passive reciprocal two-port: a T network of positive-real branches.
rf::ZMatrix random_passive_z(SplitMix64& rng) {
    auto branch = [&rng] {
        return cplx(rng.next_in(1.0, 400.0), rng.next_in(-150.0, 150.0));
    };
    const cplx za = branch(), zb = branch(), zc = branch();
    rf::ZMatrix z;
    z.z11 = za + zc;
    z.z22 = zb + zc;
    z.z12 = zc;
    z.z21 = zc;
    return z;
}

}  // namespace

TEST_CASE("z_from_s matched load identity") {
    rf::SMatrix s{{0, 0}, {0, 0}, {0, 0}, {0, 0}};
    const auto z = rf::z_from_s(s, 50.0);
    CHECK(z.z11 == cplx(50.0, 0.0));
    CHECK(z.z12 == cplx(0.0, 0.0));
    CHECK(z.z21 == cplx(0.0, 0.0));
    CHECK(z.z22 == cplx(50.0, 0.0));
}

TEST_CASE("z_from_s worked example: S11 = 0.5") {
    // By hand from the conversion equations: (1.5 * 1 + 0) / 0.5 * 50 = 150.
    rf::SMatrix s{{0.5, 0}, {0, 0}, {0, 0}, {0, 0}};
    const auto z = rf::z_from_s(s, 50.0);
    CHECK(z.z11.real() == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(z.z11.imag() == doctest::Approx(0.0));
    CHECK(z.z22.real() == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(std::abs(z.z12) == doctest::Approx(0.0));
    CHECK(std::abs(z.z21) == doctest::Approx(0.0));
}

TEST_CASE("z_from_s singular when Delta_S vanishes") {
    rf::SMatrix s{{0, 0}, {1, 0}, {1, 0}, {0, 0}};
    CHECK_THROWS_AS(rf::z_from_s(s, 50.0), SingularConversion);
}

TEST_CASE("s_from_z matched load inverse") {
    rf::ZMatrix z{{50, 0}, {0, 0}, {0, 0}, {50, 0}};
    const auto s = rf::s_from_z(z, 50.0);
    CHECK(std::abs(s.s11) == doctest::Approx(0.0));
    CHECK(std::abs(s.s12) == doctest::Approx(0.0));
    CHECK(std::abs(s.s21) == doctest::Approx(0.0));
    CHECK(std::abs(s.s22) == doctest::Approx(0.0));
}

TEST_CASE("s_from_z singular at Z = -z0*I") {
    rf::ZMatrix z{{-50, 0}, {0, 0}, {0, 0}, {-50, 0}};
    CHECK_THROWS_AS(rf::s_from_z(z, 50.0), SingularConversion);
}

TEST_CASE("round trip z_from_s(s_from_z(Z)) over random passive matrices") {
    SplitMix64 rng(0x5eed0001);
    for (int i = 0; i < 1000; ++i) {
        const auto z = random_passive_z(rng);
        const auto s = rf::s_from_z(z, 50.0);
        const auto back = rf::z_from_s(s, 50.0);
        CHECK(rel_err(z.z11, back.z11) < 1e-9);
        CHECK(rel_err(z.z12, back.z12) < 1e-9);
        CHECK(rel_err(z.z21, back.z21) < 1e-9);
        CHECK(rel_err(z.z22, back.z22) < 1e-9);
    }
}

TEST_CASE("collapse sums magnitudes") {
    std::vector<double> all_hundred(101, 100.0);
    CHECK(rf::collapse(all_hundred) == doctest::Approx(10100.0));

    std::vector<double> single{42.5};
    CHECK(rf::collapse(single) == 42.5);

    std::vector<double> empty;
    CHECK_THROWS_AS(rf::collapse(empty), EmptySweep);
}

TEST_CASE("collapse equals brute-force oracle on random data") {
    SplitMix64 rng(0x5eed0002);
    std::vector<double> v(257);
    for (auto& x : v) x = rng.next_in(0.0, 500.0);
    double oracle = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) oracle += v[i];
    CHECK(rf::collapse(v) == doctest::Approx(oracle).epsilon(1e-15));
}

TEST_CASE("collapse is linear") {
    SplitMix64 rng(0x5eed0003);
    std::vector<double> x(64), y(64), ax(64), xy(64);
    const double a = 3.25;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.next_in(0.0, 200.0);
        y[i] = rng.next_in(0.0, 200.0);
        ax[i] = a * x[i];
        xy[i] = x[i] + y[i];
    }
    CHECK(rf::collapse(ax) == doctest::Approx(a * rf::collapse(x)).epsilon(1e-12));
    CHECK(rf::collapse(xy) ==
          doctest::Approx(rf::collapse(x) + rf::collapse(y)).epsilon(1e-12));
}

TEST_CASE("sweep grid is linear with exact endpoints") {
    rf::SweepConfig cfg;
    const auto f = cfg.grid();
    REQUIRE(f.size() == 101);
    CHECK(f.front() == 10e6);
    CHECK(f.back() == 6e9);
    const double df = f[1] - f[0];
    for (std::size_t i = 2; i < f.size(); ++i)
        CHECK(f[i] - f[i - 1] == doctest::Approx(df).epsilon(1e-9));

    rf::SweepConfig bad;
    bad.n_points = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = rf::SweepConfig{};
    bad.f_stop = bad.f_start;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
