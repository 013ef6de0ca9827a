// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks, one PASS/FAIL line per criterion. The optional argument
// is a scratch directory for pipeline runs.

#include "pixrect/errors.hpp"
#include "pixrect/pipeline.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

using namespace pixrect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > budget_s) {
        o.pass = false;
        o.detail += fmt(" [over the %.0f s budget]", budget_s);
    }
    std::printf("%s criterion %d (%s): %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt);
    std::fflush(stdout);
    failures += !o.pass;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

constexpr double kLambdaMm = 299.792458; // at 1 GHz

cplx dipole_z(double length_wl, int segments = 51)
{
    SolveRequest req;
    req.mesh = straight_dipole(length_wl * kLambdaMm, kLambdaMm / 1000.0, segments);
    req.frequencies = {1e9};
    return solve(req)[0].value;
}

Outcome conjugate_zero()
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> re(1e-3, 1000.0), im(-1000.0, 1000.0);
    double worst = std::abs(gamma(cplx(0.3, 37.0), cplx(0.3, -37.0)));
    for (int i = 0; i < 1000; ++i) {
        const cplx z_ref(re(rng), im(rng));
        worst = std::max(worst, std::abs(gamma(std::conj(z_ref), z_ref)));
    }
    return {worst <= 1e-12, fmt("max |gamma| = %.3g", worst)};
}

Outcome passivity()
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> re(0.0, 1000.0), re_ref(1e-3, 1000.0), im(-1000.0, 1000.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const cplx z(re(rng), im(rng));
        const cplx z_ref(re_ref(rng), im(rng));
        worst = std::max(worst, std::abs(gamma(z, z_ref)));
    }
    return {worst <= 1.0 + 1e-12, fmt("max |gamma| = %.15f", worst)};
}

Outcome dipole_benchmark()
{
    const cplx z = dipole_z(0.5);
    const bool band = z.real() >= 60 && z.real() <= 90 && z.imag() >= 30 && z.imag() <= 55;
    double lo = 0.40, hi = 0.50;
    if (!(dipole_z(lo).imag() < 0 && dipole_z(hi).imag() > 0))
        return {false, "no reactance sign change on 0.40..0.50 wavelengths"};
    for (int i = 0; i < 14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (dipole_z(mid).imag() < 0 ? lo : hi) = mid;
    }
    const double zero = 0.5 * (lo + hi);
    return {band && zero >= 0.465 && zero <= 0.485,
            fmt("Z = %.2f %+.2fj ohm, X = 0 at %.4f wavelengths", z.real(), z.imag(), zero)};
}

Outcome power_balance()
{
    SolveRequest dip;
    dip.mesh = straight_dipole(0.5 * kLambdaMm, kLambdaMm / 1000.0, 51);
    dip.frequencies = {1e9};
    const auto a = far_field(dip, 1e9, 5.0);

    RunConfig cfg;
    const auto g = cfg.make_grid();
    BitVector bits(g.free_count());
    for (std::size_t i = 0; i < bits.size(); ++i)
        bits[i] = static_cast<std::uint8_t>((i * 7 + i / 5) % 3 != 0);
    MeshOptions mo = cfg.mesh;
    mo.allow_disconnected = true;
    SolveRequest pix{mesh(decode_layout(g, bits), cfg.board, cfg.f_max(), mo), {cfg.cost.f_r}, cfg.board.eps_eff};
    const auto b = far_field(pix, cfg.cost.f_r, 5.0);

    const double ra = a.radiated_power / a.input_power - 1.0;
    const double rb = b.radiated_power / b.input_power - 1.0;
    return {std::abs(ra) < 0.05 && std::abs(rb) < 0.05,
            fmt("dipole %+.3f%%, 8x8 layout (%zu segments) %+.3f%%", 100 * ra, pix.mesh.segments.size(), 100 * rb)};
}

Outcome planted_optimum()
{
    const std::size_t n = 16;
    BitVector target(n);
    for (std::size_t i = 0; i < n; ++i)
        target[i] = static_cast<std::uint8_t>((0xA5C3U >> (n - 1 - i)) & 1U);
    FunctionEvaluator eval([&](const BitVector& b) {
        double d = 0;
        for (std::size_t i = 0; i < n; ++i)
            d += b[i] != target[i];
        return d;
    });
    int optima = 0;
    for (std::uint32_t v = 0; v < (1U << n); ++v) {
        BitVector b(n);
        for (std::size_t i = 0; i < n; ++i)
            b[i] = static_cast<std::uint8_t>((v >> (n - 1 - i)) & 1U);
        optima += eval.evaluate(b) == 0.0;
    }
    BpsoConfig cfg;
    cfg.population = 30;
    cfg.iterations = 100;
    cfg.transfer = Transfer::V2;
    int hits = 0;
    bool monotone = true;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        cfg.seed = seed;
        const auto r = run(cfg, eval, n);
        hits += r.best == target;
        for (std::size_t i = 1; i < r.log.size(); ++i)
            monotone = monotone && r.log[i].gbest_cost <= r.log[i - 1].gbest_cost;
    }
    return {optima == 1 && hits >= 18 && monotone,
            fmt("%d/20 seeds hit the unique optimum, gbest %s", hits, monotone ? "non-increasing" : "INCREASED")};
}

Outcome toy_end_to_end(const fs::path& dir)
{
    RunConfig cfg;
    cfg.grid.rows = 2;
    cfg.grid.cols = 2;
    cfg.output_dir = (dir / "toy").string();
    PipelineInputs in;
    in.stages = Stages{true, true, false, false, false};
    const auto rep = run_pipeline(cfg, in);
    if (rep.exit_code != kExitOk || !rep.best || !rep.z_ref)
        return {false, fmt("pipeline exit code %d", rep.exit_code)};

    // Exhaustive enumeration straight through the solver.
    const auto g = cfg.make_grid();
    MeshOptions mo = cfg.mesh;
    mo.allow_disconnected = true;
    double best = std::numeric_limits<double>::infinity();
    BitVector arg;
    for (int v = 0; v < 256; ++v) {
        BitVector b(8);
        for (int i = 0; i < 8; ++i)
            b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (7 - i)) & 1);
        SolveRequest req{mesh(decode_layout(g, b), cfg.board, cfg.f_max(), mo), {cfg.cost.f_r}, cfg.board.eps_eff};
        const double c = to_db(std::abs(gamma(solve(req, cfg.solver)[0].value, *rep.z_ref)), cfg.cost.db_floor);
        if (c < best) {
            best = c;
            arg = b;
        }
    }
    std::string bits;
    for (auto x : *rep.best)
        bits += x ? '1' : '0';
    const bool ok = rep.best_cost == best;
    return {ok, fmt("pipeline %s at %.6f dB, enumeration minimum %.6f dB%s", bits.c_str(), rep.best_cost, best,
                    *rep.best == arg ? " (same bitstring)" : " (tie)")};
}

Outcome rectifier_limits()
{
    RectifierSpec ideal;
    ideal.diode.I_s = 1e-9;
    ideal.diode.n = 1.0;
    ideal.diode.temperature = 10.0;
    ideal.diode.R_s = 0.01;
    ideal.diode.C_j0 = 1e-16;
    ideal.L_p = 1e-12;
    ideal.C_p = 1e-16;
    ideal.R_load = 1e6;
    const double v_pk = 2.0;
    const auto d = steady_state_vpk(ideal, 2.5e9, v_pk, cplx(50.0, 0.0));
    const double ratio = d.v_dc / (2 * v_pk);

    const auto spec = sms7621_like();
    const auto pts = impedance_sweep(spec, 2.5e9, power_range(-30, 10, 5), cplx(50.0, 0.0));
    double worst_balance = std::abs(d.energy_imbalance());
    double eta_min = 1.0, eta_max = 0.0;
    for (const auto& p : pts) {
        if (!p.state)
            return {false, "sweep point at " + fmt("%.0f", p.p_dbm) + " dBm failed: " + p.error};
        worst_balance = std::max(worst_balance, std::abs(p.state->energy_imbalance()));
        for (auto basis : {EfficiencyBasis::Delivered, EfficiencyBasis::Available}) {
            const double e = dc_transfer(spec, *p.state, basis).efficiency;
            eta_min = std::min(eta_min, e);
            eta_max = std::max(eta_max, e);
        }
    }
    return {std::abs(ratio - 1) <= 0.02 && worst_balance <= 0.01 && eta_min >= 0 && eta_max <= 1,
            fmt("doubler V_dc / 2V_pk = %.4f, worst energy imbalance %.2e, efficiency in [%.4f, %.4f]", ratio,
                worst_balance, eta_min, eta_max)};
}

Outcome rectifier_shape()
{
    const auto pts = impedance_sweep(sms7621_like(), 2.5e9, power_range(-30, 10, 5), cplx(50.0, 0.0));
    const SteadyState* ref = nullptr;
    for (const auto& p : pts)
        if (p.p_dbm == 0.0 && p.state)
            ref = &*p.state;
    if (!ref)
        return {false, "0 dBm point missing"};
    double spread = 0.0;
    for (const auto& p : pts)
        if (p.state)
            spread = std::max(spread, std::abs(p.state->z_in - ref->z_in) / std::abs(ref->z_in));
    const double x = ref->z_in.imag();
    return {x < 0 && std::abs(x) >= 10 && std::abs(x) <= 120 && spread > 0.01,
            fmt("Z_in(0 dBm) = %.2f %+.2fj ohm, max relative change over the sweep %.1f%%", ref->z_in.real(), x,
                100 * spread)};
}

Outcome friis_check()
{
    const double fspl = free_space_path_loss_db(0.3, 2.5e9);
    LinkSpec link;
    link.g_tx = 4.5;
    link.g_rx = 0.0;
    link.p_tx = 0.0;
    const double delta = friis(link).p_rx_dbm - link.p_tx;
    return {std::abs(fspl - 29.95) <= 0.01 && std::abs(delta + 25.45) <= 0.01,
            fmt("FSPL = %.4f dB, p_rx - p_tx = %.4f dB", fspl, delta)};
}

Outcome determinism(const fs::path& dir)
{
    RunConfig cfg;
    cfg.bpso.iterations = 60;
    const int threads[] = {1, 1, 4};
    std::vector<fs::path> outs;
    for (int i = 0; i < 3; ++i) {
        outs.push_back(dir / ("det_" + std::to_string(i)));
        fs::remove_all(outs.back());
        cfg.output_dir = outs.back().string();
        cfg.threads = threads[i];
        omp_set_num_threads(threads[i]);
        const auto rep = run_pipeline(cfg);
        if (rep.exit_code != kExitOk)
            return {false, fmt("run %d exit code %d", i, rep.exit_code)};
    }
    omp_set_num_threads(1);

    std::istringstream log(slurp(outs[0] / "convergence.csv"));
    std::string line;
    std::getline(log, line);
    int rows = 0;
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    while (std::getline(log, line)) {
        ++rows;
        const double g = std::stod(line.substr(line.find(',') + 1));
        monotone = monotone && g <= prev;
        prev = g;
    }
    std::size_t files = 0;
    bool identical = true;
    for (const auto& e : fs::directory_iterator(outs[0])) {
        ++files;
        for (std::size_t i = 1; i < outs.size(); ++i)
            identical = identical && slurp(e.path()) == slurp(outs[i] / e.path().filename());
    }
    return {rows == 60 && monotone && identical,
            fmt("8x8 grid, %d log rows, %s, %zu files %s across threads 1/1/4, final gbest %.4f dB", rows,
                monotone ? "non-increasing" : "NOT monotone", files, identical ? "byte-identical" : "DIFFER", prev)};
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "pixrect_acceptance";
    fs::create_directories(dir);

    criterion(1, "conjugate-match zero", 1, conjugate_zero);
    criterion(2, "passivity bound", 1, passivity);
    criterion(3, "dipole benchmark", 30, dipole_benchmark);
    criterion(4, "power balance", 60, power_balance);
    criterion(5, "optimizer planted optimum", 30, planted_optimum);
    criterion(6, "2x2 end-to-end oracle", 300, [&] { return toy_end_to_end(dir); });
    criterion(7, "rectifier limits", 120, rectifier_limits);
    criterion(8, "rectifier impedance shape", 120, rectifier_shape);
    criterion(9, "Friis link budget", 1, friis_check);
    criterion(10, "determinism and convergence log", 1800, [&] { return determinism(dir); });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
