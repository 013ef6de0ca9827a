// SPDX-License-Identifier: Apache-2.0

#include "pixrect/errors.hpp"
#include "pixrect/matching.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <thread>

using namespace pixrect;

namespace {

// Frozen from an independent evaluation of 20 log10(4 pi d / lambda) with
// c = 299792458 m/s.
constexpr double kFspl03m = 29.94900848971737;
constexpr double kLinkDelta = -25.44900848971737;

AntennaCost toy_cost(cplx z_ref, std::size_t budget = 0)
{
    AntennaCost::Context ctx{PixelGrid(2, 2, 2.5), BoardSpec{}, MeshOptions{}, SolverOptions{}, 3e9, 0.0};
    if (budget)
        ctx.mesh.segment_budget = budget;
    CostSpec spec;
    spec.z_ref = z_ref;
    return AntennaCost(ctx, spec);
}

} // namespace

TEST_CASE("gamma examples", "[matching]")
{
    CHECK(gamma(cplx(0.3, 37.0), cplx(0.3, -37.0)) == cplx(0.0, 0.0));
    CHECK(gamma(cplx(50.0, 0.0), cplx(50.0, 0.0)) == cplx(0.0, 0.0));
    const cplx g = gamma(cplx(0.0, 0.0), cplx(50.0, 0.0));
    CHECK(g == cplx(-1.0, 0.0));
    CHECK(std::abs(g) == 1.0);
    CHECK_THROWS_AS(gamma(cplx(-50.0, 10.0), cplx(50.0, -10.0)), NumericalError);
    CHECK_THROWS_AS(gamma(cplx(50.0, 0.0), cplx(0.0, 10.0)), ConfigError);
}

TEST_CASE("conjugate match is an exact zero for random references", "[matching]")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> re(1e-3, 500.0), im(-500.0, 500.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const cplx z_ref(re(rng), im(rng));
        worst = std::max(worst, std::abs(gamma(std::conj(z_ref), z_ref)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("passive loads never reflect more than they receive", "[matching]")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> re(0.0, 1000.0), re_ref(1e-3, 1000.0), im(-1000.0, 1000.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const cplx z(i % 50 == 0 ? 0.0 : re(rng), im(rng));
        const cplx z_ref(re_ref(rng), im(rng));
        worst = std::max(worst, std::abs(gamma(z, z_ref)));
    }
    CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("dB conversion clamps at the floor", "[matching]")
{
    CHECK(to_db(0.0) == -100.0);
    CHECK(to_db(1e-9, -100.0) == -100.0);
    CHECK(to_db(0.1) == Catch::Approx(-20.0));
    CHECK(to_db(1e-3, -40.0) == -40.0);
}

TEST_CASE("free-space link budget", "[matching]")
{
    CHECK(std::abs(free_space_path_loss_db(0.3, 2.5e9) - kFspl03m) < 1e-9);
    CHECK(std::abs(free_space_path_loss_db(0.3, 2.5e9) - 29.95) <= 0.01);

    LinkSpec link;
    link.p_tx = 10.0;
    const auto r = friis(link);
    CHECK(std::abs(r.p_rx_dbm - link.p_tx - kLinkDelta) < 1e-9);
    CHECK(std::abs(r.p_rx_dbm - link.p_tx + 25.45) <= 0.01);
    CHECK(r.far_field_ok); // 2 D^2 / lambda = 0.0204 m

    LinkSpec far = link;
    far.distance = 0.6;
    CHECK(friis(far).p_rx_dbm - r.p_rx_dbm == Catch::Approx(-20.0 * std::log10(2.0)).epsilon(1e-12));

    LinkSpec near = link;
    near.distance = 0.01;
    CHECK_FALSE(friis(near).far_field_ok);

    double prev = 1e300;
    for (double d = 0.1; d < 3.0; d += 0.1) {
        LinkSpec l = link;
        l.distance = d;
        const double p = friis(l).p_rx_dbm;
        CHECK(p < prev);
        prev = p;
    }
    LinkSpec more_gain = link;
    more_gain.g_rx = 1.0;
    CHECK(friis(more_gain).p_rx_dbm > r.p_rx_dbm);

    LinkSpec off = link;
    off.p_tx = -std::numeric_limits<double>::infinity();
    CHECK(friis(off).p_rx_dbm == -std::numeric_limits<double>::infinity());
}

TEST_CASE("antenna cost is memoized and deterministic", "[matching]")
{
    auto cost = toy_cost(cplx(0.3, -37.0));
    const BitVector bits{1, 0, 1, 1, 0, 0, 1, 0};
    const double a = cost.evaluate(bits);
    CHECK(cost.memo_hits() == 0);
    const double b = cost.evaluate(bits);
    CHECK(a == b);
    CHECK(cost.memo_hits() == 1);
    CHECK(cost.memo_size() == 1);

    auto fresh = toy_cost(cplx(0.3, -37.0));
    CHECK(fresh.evaluate(bits) == a);
}

TEST_CASE("a conjugate-matched layout costs the floor", "[matching]")
{
    const BitVector bits(8, 1);
    const cplx z = toy_cost(cplx(50.0, 0.0)).impedance(bits);
    auto matched = toy_cost(std::conj(z));
    CHECK(matched.evaluate(bits) == -100.0);
}

TEST_CASE("concurrent evaluation returns the serial values", "[matching]")
{
    auto serial = toy_cost(cplx(0.3, -37.0));
    auto shared = toy_cost(cplx(0.3, -37.0));
    std::vector<BitVector> layouts;
    for (int v = 0; v < 24; ++v) {
        BitVector b(8);
        for (int i = 0; i < 8; ++i)
            b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(((v * 37 + 11) >> (7 - i)) & 1);
        layouts.push_back(b);
    }
    std::vector<double> expect, got(layouts.size() * 2);
    for (const auto& b : layouts)
        expect.push_back(serial.evaluate(b));
    std::vector<std::thread> pool;
    for (int t = 0; t < 2; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = 0; i < layouts.size(); ++i) {
                const std::size_t k = t ? layouts.size() - 1 - i : i;
                got[t * layouts.size() + k] = shared.evaluate(layouts[k]);
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (std::size_t i = 0; i < layouts.size(); ++i) {
        CHECK(got[i] == expect[i]);
        CHECK(got[layouts.size() + i] == expect[i]);
    }
}

TEST_CASE("mesh budget failures become numerical errors", "[matching]")
{
    auto cost = toy_cost(cplx(0.3, -37.0), 3);
    const BitVector bits(8, 1);
    CHECK_THROWS_AS(cost.evaluate(bits), NumericalError);
    CHECK_THROWS_AS(cost.evaluate(bits), NumericalError);
    CHECK(cost.memo_hits() == 1);
}
