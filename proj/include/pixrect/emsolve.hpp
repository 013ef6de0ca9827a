// SPDX-License-Identifier: Apache-2.0
//
// Thin-wire moment-method solver for WireMesh geometries.
#pragma once

#include "pixrect/constants.hpp"
#include "pixrect/geometry.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace pixrect {

struct SolverOptions {
    int quadrature_order = 8;
    double warn_condition = 1e8;
    double max_condition = 1e13;
    bool parallel = true;
};

struct ComplexImpedance {
    double frequency = 0.0; // Hz
    cplx value;             // ohm
    double condition = 1.0; // estimated 1-norm condition number of the system
    bool accuracy_warning = false; // negative input resistance or high condition

    double R() const { return value.real(); }
    double X() const { return value.imag(); }
};

/// Unit delta-gap excitation at mesh.feed, one solve per frequency. The
/// surrounding medium has relative permittivity eps_eff.
struct SolveRequest {
    WireMesh mesh;
    std::vector<double> frequencies;
    double eps_eff = 1.0;

    void validate() const;
};

std::vector<ComplexImpedance> solve(const SolveRequest& req, const SolverOptions& opts = {});

struct SweepPoint {
    double frequency = 0.0;
    cplx impedance;
    double gamma_db = 0.0;
};

/// Power-wave reflection of the antenna against z_ref, one reference per
/// frequency (or a single reference broadcast over the sweep).
std::vector<SweepPoint> reflection_sweep(const SolveRequest& req, const std::vector<cplx>& z_ref,
                                         const SolverOptions& opts = {}, double db_floor = -100.0);

struct FarField {
    double frequency = 0.0;
    double angular_step = 0.0;       // degrees
    std::vector<double> theta;       // degrees, 0..180 inclusive
    std::vector<double> phi;         // degrees, 0..360 exclusive
    std::vector<cplx> e_theta;       // V at r = 1 m, phase reference removed; [i_theta * n_phi + i_phi]
    std::vector<cplx> e_phi;
    std::vector<double> gain_dbi;    // lossless: gain equals directivity
    double radiated_power = 0.0;     // W, sphere-integrated
    double input_power = 0.0;        // W, Re{V I*}/2 at the feed
    double peak_gain_dbi = 0.0;
    cplx impedance;

    double gain_at(std::size_t i_theta, std::size_t i_phi) const
    {
        return gain_dbi[i_theta * phi.size() + i_phi];
    }
};

/// Far-field pattern at f on a regular (theta, phi) grid. angular_step must
/// divide 90 degrees.
FarField far_field(const SolveRequest& req, double f, double angular_step,
                   const SolverOptions& opts = {});

struct CutSample {
    double theta_deg;
    double phi_deg;
    double gain_dbi;
};

/// xz-plane (phi = 0/180) followed by yz-plane (phi = 90/270) gain cuts.
std::vector<CutSample> principal_cuts(const FarField& ff);

/// Open-circuit impedance matrix of a two-port formed by delta gaps on
/// segments a and b of the mesh (mesh.feed is ignored).
std::array<std::array<cplx, 2>, 2> two_port(const WireMesh& mesh, std::size_t seg_a, std::size_t seg_b,
                                            double f, double eps_eff = 1.0,
                                            const SolverOptions& opts = {});

/// Straight wire along z centred on the origin, fed at the middle segment.
/// Dimensions in millimetres; `segments` must be odd.
WireMesh straight_dipole(double length_mm, double radius_mm, int segments);

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& pts);
void write_cuts_csv(std::ostream& os, const std::vector<CutSample>& cuts);

} // namespace pixrect
