// SPDX-License-Identifier: Apache-2.0

#include "pixrect/emsolve.hpp"
#include "pixrect/errors.hpp"
#include "pixrect/matching.hpp"
#include "pixrect/mom.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

using namespace pixrect;

namespace {

constexpr double kF = 1.0e9;
constexpr double kLambdaMm = 299.792458; // c / 1 GHz in mm

SolveRequest dipole(double length_wl, int segments = 51)
{
    SolveRequest req;
    req.mesh = straight_dipole(length_wl * kLambdaMm, kLambdaMm / 1000.0, segments);
    req.frequencies = {kF};
    return req;
}

cplx dipole_z(double length_wl, int segments = 51)
{
    return solve(dipole(length_wl, segments))[0].value;
}

WireMesh pixel_mesh(int rows, int cols, double f_max)
{
    BoardSpec board;
    PixelGrid g(rows, cols, 2.5);
    return mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, f_max);
}

bool same_bits(const cplx& a, const cplx& b)
{
    return std::memcmp(&a, &b, sizeof(cplx)) == 0;
}

} // namespace

TEST_CASE("half-wave dipole impedance is near the classical value", "[emsolve]")
{
    const cplx z = dipole_z(0.5);
    CHECK(z.real() >= 60.0);
    CHECK(z.real() <= 90.0);
    CHECK(z.imag() >= 30.0);
    CHECK(z.imag() <= 55.0);
}

TEST_CASE("dipole resistance converges under segment doubling", "[emsolve]")
{
    const double r51 = dipole_z(0.5, 51).real();
    const double r101 = dipole_z(0.5, 101).real();
    CHECK(std::abs(r101 - r51) / r51 < 0.02);
}

TEST_CASE("dipole reactance crosses zero between 0.465 and 0.485 wavelengths", "[emsolve]")
{
    double lo = 0.40, hi = 0.50;
    REQUIRE(dipole_z(lo).imag() < 0.0);
    REQUIRE(dipole_z(hi).imag() > 0.0);
    // sign-change bisection on the swept length
    for (int i = 0; i < 14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (dipole_z(mid).imag() < 0.0 ? lo : hi) = mid;
    }
    const double zero = 0.5 * (lo + hi);
    CHECK(zero >= 0.465);
    CHECK(zero <= 0.485);
}

TEST_CASE("solves are bit-identical across repeats and threading modes", "[emsolve]")
{
    auto req = dipole(0.5);
    req.frequencies = {0.9e9, 1.0e9, 1.1e9};
    SolverOptions serial;
    serial.parallel = false;
    const auto a = solve(req);
    const auto b = solve(req);
    const auto c = solve(req, serial);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(same_bits(a[i].value, b[i].value));
        CHECK(same_bits(a[i].value, c[i].value));
    }
}

TEST_CASE("impedance matrix is complex-symmetric", "[emsolve]")
{
    const auto m = pixel_mesh(3, 3, 3e9);
    const auto model = mom::build_model(m, {m.feed});
    const auto med = mom::medium(2.5e9, 2.275);
    const auto A = mom::assemble_reference(model, med, mom::gauss_legendre(8));
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    CHECK(asym <= 1e-9 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("serial and OpenMP kernels agree bit for bit", "[emsolve]")
{
    const auto m = pixel_mesh(3, 3, 3e9);
    const auto model = mom::build_model(m, {m.feed});
    const auto med = mom::medium(2.5e9, 2.275);
    const auto rule = mom::gauss_legendre(8);
    const auto A = mom::assemble_reference(model, med, rule);
    const auto B = mom::assemble_parallel(model, med, rule);
    REQUIRE(A.rows() == B.rows());
    bool equal = true;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            equal = equal && same_bits(A(i, j), B(i, j));
    CHECK(equal);

    bool direct = true;
    for (std::size_t i = 0; i < model.bases.size(); i += 3)
        for (std::size_t j = 0; j < model.bases.size(); j += 2)
            direct = direct && same_bits(mom::matrix_entry(model, i, j, med, rule),
                                         A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    CHECK(direct);

    std::vector<cplx> J(model.pieces.size());
    for (std::size_t p = 0; p < J.size(); ++p)
        J[p] = cplx(std::cos(0.3 * p), std::sin(0.7 * p));
    std::vector<double> th, ph;
    for (int i = 0; i <= 12; ++i)
        th.push_back(i * kPi / 12);
    for (int j = 0; j < 24; ++j)
        ph.push_back(j * kPi / 12);
    const auto r = mom::radiate_reference(model, J, med, th, ph);
    const auto p = mom::radiate_parallel(model, J, med, th, ph);
    bool rad = true;
    for (std::size_t i = 0; i < r.e_theta.size(); ++i)
        rad = rad && same_bits(r.e_theta[i], p.e_theta[i]) && same_bits(r.e_phi[i], p.e_phi[i]);
    CHECK(rad);
}

TEST_CASE("two-port impedance matrix is reciprocal", "[emsolve]")
{
    const auto m = pixel_mesh(3, 3, 3e9);
    const auto z = two_port(m, m.feed, m.segments.size() - 1, 2.5e9, 2.275);
    CHECK(std::abs(z[0][1] - z[1][0]) <= 1e-6 * std::abs(z[0][1]));
}

TEST_CASE("solver input validation", "[emsolve]")
{
    SolveRequest coarse;
    coarse.mesh = straight_dipole(150.0, 1.0, 5); // 30 mm segments at 1 GHz
    coarse.frequencies = {kF};
    CHECK_THROWS_AS(solve(coarse), ConfigError);

    SolverOptions strict;
    strict.max_condition = 1.0;
    try {
        solve(dipole(0.5), strict);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(e.metric() > 1.0);
    }
}

TEST_CASE("reflection sweep examples", "[emsolve]")
{
    // The dipole is matched when the reference is the conjugate of 73 + j42.5.
    const auto pts = reflection_sweep(dipole(0.5), {cplx(73.0, -42.5)});
    CHECK(pts[0].gamma_db <= -20.0);

    const auto z = solve(dipole(0.5))[0].value;
    const auto exact = reflection_sweep(dipole(0.5), {std::conj(z)});
    CHECK(exact[0].gamma_db == -100.0);

    CHECK_THROWS_AS(reflection_sweep(dipole(0.5), {cplx(-1.0, 0.0)}), ConfigError);
}

TEST_CASE("dipole far field", "[emsolve]")
{
    const auto ff = far_field(dipole(0.5), kF, 5.0);
    CHECK(std::abs(ff.peak_gain_dbi - 2.15) <= 0.3);
    CHECK(ff.gain_at(0, 0) < -30.0);
    CHECK(ff.gain_at(ff.theta.size() - 1, 0) < -30.0);
    CHECK(std::abs(ff.radiated_power / ff.input_power - 1.0) < 0.05);

    const auto fine = far_field(dipole(0.5), kF, 2.5);
    CHECK(std::abs(fine.radiated_power / ff.radiated_power - 1.0) < 0.01);

    const auto cuts = principal_cuts(ff);
    CHECK(cuts.size() == 4 * ff.theta.size());
    CHECK_THROWS_AS(far_field(dipole(0.5), kF, 7.0), ConfigError);
}

TEST_CASE("pixel layout radiates what it accepts", "[emsolve]")
{
    SolveRequest req;
    req.mesh = pixel_mesh(4, 4, 3e9);
    req.frequencies = {2.5e9};
    req.eps_eff = 2.275;
    const auto ff = far_field(req, 2.5e9, 5.0);
    CHECK(std::abs(ff.radiated_power / ff.input_power - 1.0) < 0.05);
}
