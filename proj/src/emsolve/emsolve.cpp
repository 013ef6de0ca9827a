// SPDX-License-Identifier: Apache-2.0

#include "pixrect/emsolve.hpp"

#include "pixrect/errors.hpp"
#include "pixrect/matching.hpp"
#include "pixrect/mom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace pixrect {

void SolveRequest::validate() const
{
    if (frequencies.empty())
        throw ConfigError("solve request has no frequencies");
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (!(frequencies[i] > 0.0))
            throw ConfigError("frequencies must be positive");
        if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
            throw ConfigError("frequencies must be strictly increasing");
    }
    if (!(eps_eff >= 1.0))
        throw ConfigError("eps_eff must be >= 1");
    validate_mesh(mesh, frequencies.back(), eps_eff);
}

namespace {

struct Solution {
    Eigen::VectorXcd currents;
    double condition = 1.0;
};

Solution solve_system(const mom::WireModel& model, double f, double eps_eff,
                      const std::vector<cplx>& port_voltages, const SolverOptions& opts)
{
    const auto med = mom::medium(f, eps_eff);
    const auto rule = mom::gauss_legendre(opts.quadrature_order);
    const Eigen::MatrixXcd Z = opts.parallel ? mom::assemble_parallel(model, med, rule)
                                             : mom::assemble_reference(model, med, rule);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Z);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cond) || cond > opts.max_condition) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "impedance matrix is singular or ill-conditioned at %.6g Hz (condition ~ %.3g)",
                      f, cond);
        throw NumericalError(buf, cond);
    }
    Eigen::VectorXcd V = Eigen::VectorXcd::Zero(Z.rows());
    for (std::size_t p = 0; p < model.port_basis.size(); ++p)
        V(static_cast<Eigen::Index>(model.port_basis[p])) = port_voltages[p];
    Solution s;
    s.currents = lu.solve(V);
    s.condition = cond;
    if (!s.currents.allFinite())
        throw NumericalError("solver produced non-finite currents", cond);
    return s;
}

} // namespace

std::vector<ComplexImpedance> solve(const SolveRequest& req, const SolverOptions& opts)
{
    req.validate();
    const auto model = mom::build_model(req.mesh, {req.mesh.feed});
    std::vector<ComplexImpedance> out;
    out.reserve(req.frequencies.size());
    for (double f : req.frequencies) {
        const auto sol = solve_system(model, f, req.eps_eff, {cplx(1.0)}, opts);
        const cplx I = sol.currents(static_cast<Eigen::Index>(model.port_basis[0]));
        ComplexImpedance z;
        z.frequency = f;
        z.value = 1.0 / I;
        z.condition = sol.condition;
        z.accuracy_warning = z.value.real() < 0.0 || sol.condition > opts.warn_condition;
        out.push_back(z);
    }
    return out;
}

std::vector<SweepPoint> reflection_sweep(const SolveRequest& req, const std::vector<cplx>& z_ref,
                                         const SolverOptions& opts, double db_floor)
{
    if (z_ref.size() != 1 && z_ref.size() != req.frequencies.size())
        throw ConfigError("reflection sweep needs one reference impedance or one per frequency");
    for (const auto& z : z_ref) {
        if (!(z.real() > 0.0))
            throw ConfigError("reference impedance must have a positive real part");
    }
    const auto zs = solve(req, opts);
    std::vector<SweepPoint> out;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const cplx ref = z_ref.size() == 1 ? z_ref[0] : z_ref[i];
        out.push_back({zs[i].frequency, zs[i].value, to_db(std::abs(gamma(zs[i].value, ref)), db_floor)});
    }
    return out;
}

FarField far_field(const SolveRequest& req, double f, double angular_step, const SolverOptions& opts)
{
    if (!(angular_step > 0.0))
        throw ConfigError("angular step must be positive");
    const double per_quadrant = 90.0 / angular_step;
    if (std::abs(per_quadrant - std::round(per_quadrant)) > 1e-9)
        throw ConfigError("angular step must divide 90 degrees");

    SolveRequest one = req;
    one.frequencies = {f};
    one.validate();
    const auto model = mom::build_model(one.mesh, {one.mesh.feed});
    const auto sol = solve_system(model, f, one.eps_eff, {cplx(1.0)}, opts);
    const auto med = mom::medium(f, one.eps_eff);
    const auto J = mom::piece_currents(model, sol.currents);

    const int n_q = static_cast<int>(std::lround(per_quadrant));
    std::vector<double> th, ph;
    for (int i = 0; i <= 2 * n_q; ++i)
        th.push_back(i * angular_step * kPi / 180.0);
    for (int j = 0; j < 4 * n_q; ++j)
        ph.push_back(j * angular_step * kPi / 180.0);

    const auto grid = opts.parallel ? mom::radiate_parallel(model, J, med, th, ph)
                                    : mom::radiate_reference(model, J, med, th, ph);

    FarField ff;
    ff.frequency = f;
    ff.angular_step = angular_step;
    for (double t : th)
        ff.theta.push_back(t * 180.0 / kPi);
    for (double p : ph)
        ff.phi.push_back(p * 180.0 / kPi);
    ff.e_theta = grid.e_theta;
    ff.e_phi = grid.e_phi;

    // Radiation intensity r^2 |E|^2 / (2 eta); trapezoid in theta, uniform in phi.
    const double eta = std::sqrt(med.mu / med.eps);
    const double d = angular_step * kPi / 180.0;
    std::vector<double> U(th.size() * ph.size());
    double P = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
        const double w = (i == 0 || i + 1 == th.size()) ? 0.5 : 1.0;
        double ring = 0.0;
        for (std::size_t j = 0; j < ph.size(); ++j) {
            const auto idx = i * ph.size() + j;
            U[idx] = (std::norm(grid.e_theta[idx]) + std::norm(grid.e_phi[idx])) / (2.0 * eta);
            ring += U[idx];
        }
        P += w * std::sin(th[i]) * ring * d * d;
    }
    ff.radiated_power = P;
    const cplx I = sol.currents(static_cast<Eigen::Index>(model.port_basis[0]));
    ff.impedance = 1.0 / I;
    ff.input_power = 0.5 * std::real(cplx(1.0) * std::conj(I));
    if (!(P > 0.0))
        throw NumericalError("far field carries no radiated power");

    ff.gain_dbi.resize(U.size());
    double peak = 0.0;
    for (std::size_t idx = 0; idx < U.size(); ++idx) {
        const double g = 4.0 * kPi * U[idx] / P;
        peak = std::max(peak, g);
        ff.gain_dbi[idx] = to_db(std::sqrt(g), -100.0);
    }
    ff.peak_gain_dbi = 10.0 * std::log10(peak);
    return ff;
}

std::vector<CutSample> principal_cuts(const FarField& ff)
{
    std::vector<CutSample> out;
    const std::size_t quarter = ff.phi.size() / 4;
    for (std::size_t plane : {std::size_t{0}, quarter}) {
        for (std::size_t j : {plane, plane + 2 * quarter}) {
            for (std::size_t i = 0; i < ff.theta.size(); ++i)
                out.push_back({ff.theta[i], ff.phi[j], ff.gain_at(i, j)});
        }
    }
    return out;
}

std::array<std::array<cplx, 2>, 2> two_port(const WireMesh& mesh, std::size_t seg_a, std::size_t seg_b,
                                            double f, double eps_eff, const SolverOptions& opts)
{
    if (seg_a == seg_b)
        throw ConfigError("two-port needs two distinct segments");
    validate_mesh({mesh.segments, seg_a}, f, eps_eff);
    const auto model = mom::build_model(mesh, {seg_a, seg_b});
    // Short-circuit admittances from unit excitation of each port in turn.
    const auto s1 = solve_system(model, f, eps_eff, {cplx(1.0), cplx(0.0)}, opts);
    const auto s2 = solve_system(model, f, eps_eff, {cplx(0.0), cplx(1.0)}, opts);
    const auto p1 = static_cast<Eigen::Index>(model.port_basis[0]);
    const auto p2 = static_cast<Eigen::Index>(model.port_basis[1]);
    Eigen::Matrix2cd Y;
    Y << s1.currents(p1), s2.currents(p1), s1.currents(p2), s2.currents(p2);
    const Eigen::Matrix2cd Z = Y.inverse();
    return {{{Z(0, 0), Z(0, 1)}, {Z(1, 0), Z(1, 1)}}};
}

WireMesh straight_dipole(double length_mm, double radius_mm, int segments)
{
    if (segments < 1 || segments % 2 == 0)
        throw ConfigError("dipole needs an odd segment count");
    if (!(length_mm > 0.0) || !(radius_mm > 0.0))
        throw ConfigError("dipole dimensions must be positive");
    WireMesh m;
    const double dz = length_mm / segments;
    for (int i = 0; i < segments; ++i) {
        const double z0 = -0.5 * length_mm + i * dz;
        const double z1 = i + 1 == segments ? 0.5 * length_mm : z0 + dz;
        m.segments.push_back({{0.0, 0.0, z0}, {0.0, 0.0, z1}, radius_mm});
    }
    m.feed = static_cast<std::size_t>(segments / 2);
    return m;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& pts)
{
    os << "freq_hz,R_ohm,X_ohm,gamma_db\n";
    char buf[160];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", p.frequency, p.impedance.real(),
                      p.impedance.imag(), p.gamma_db);
        os << buf;
    }
}

void write_cuts_csv(std::ostream& os, const std::vector<CutSample>& cuts)
{
    os << "theta_deg,phi_deg,gain_dbi\n";
    char buf[128];
    for (const auto& c : cuts) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", c.theta_deg, c.phi_deg, c.gain_dbi);
        os << buf;
    }
}

} // namespace pixrect
