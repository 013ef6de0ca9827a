// SPDX-License-Identifier: Apache-2.0
//
// Moment-method internals: wire topology, basis functions and the
// impedance-matrix kernels. Exposed for tests and benchmarks.
//
// Currents are piecewise constant on half segments. Each basis function is a
// pulse that runs from the midpoint of one segment, through a shared node, to
// the midpoint of another; a node joining d segments carries d - 1 of them.
// The continuity charge of a basis sits uniformly on its two segments. Testing
// integrates the field along the same path, which makes the matrix
// complex-symmetric.
#pragma once

#include "pixrect/constants.hpp"
#include "pixrect/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace pixrect::mom {

struct Segment {
    Vec3 a, b, mid, u; // metres
    double length = 0.0;
    double radius = 0.0;
    int node_a = -1;
    int node_b = -1;
};

/// Half segment: piece 2s runs a -> mid of segment s, piece 2s + 1 mid -> b.
struct Piece {
    Vec3 a, center, u;
    double length = 0.0;
    double radius = 0.0;
};

struct Basis {
    std::array<std::size_t, 2> piece{};  // inflow piece, outflow piece
    std::array<double, 2> sign{};        // +1 when the current runs along piece.u
    std::array<std::size_t, 2> segment{}; // carry charge -1, +1 (per unit j*omega)
};

struct WireModel {
    std::vector<Segment> segments;
    std::vector<Piece> pieces;
    std::vector<Basis> bases;
    std::vector<std::size_t> port_basis; // one per requested port, same order
    int node_count = 0;
};

/// Builds the solver model from a millimetre mesh. Each port segment is split
/// at its midpoint; the basis crossing the split carries that port's gap.
WireModel build_model(const WireMesh& mesh, const std::vector<std::size_t>& port_segments);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
GaussRule gauss_legendre(int order);

/// Integral over a straight source wire of exp(-jkR) / (4 pi R) with the
/// reduced kernel R = sqrt(|r - r'|^2 + radius^2). The 1/R part is integrated
/// in closed form, the remainder with `rule`.
cplx wire_potential(const Vec3& obs, const Vec3& start, const Vec3& u, double length,
                    double radius, double k, const GaussRule& rule);

struct MediumAt {
    double omega = 0.0;
    double k = 0.0;
    double mu = kMu0;
    double eps = kEps0;
};
MediumAt medium(double f, double eps_eff);

/// One impedance-matrix entry. Summation order is fixed, so the value does
/// not depend on the caller's threading.
cplx matrix_entry(const WireModel& model, std::size_t m, std::size_t n, const MediumAt& med,
                  const GaussRule& rule);

/// Symmetric piece-piece (vector potential) and segment-segment (scalar
/// potential) couplings; every matrix entry is a signed sum of these.
struct Couplings {
    Eigen::MatrixXcd piece;
    Eigen::MatrixXcd segment;
};

/// Serial tabulation, upper triangles filled row by row then mirrored.
Couplings couplings_reference(const WireModel& model, const MediumAt& med, const GaussRule& rule);
/// OpenMP tabulation; bit-identical to the serial one.
Couplings couplings_parallel(const WireModel& model, const MediumAt& med, const GaussRule& rule);

/// Matrix from tabulated couplings, same summation order as matrix_entry.
Eigen::MatrixXcd assemble(const WireModel& model, const Couplings& c, const MediumAt& med);

/// Serial tabulation followed by assembly.
Eigen::MatrixXcd assemble_reference(const WireModel& model, const MediumAt& med, const GaussRule& rule);

/// OpenMP tabulation followed by assembly.
Eigen::MatrixXcd assemble_parallel(const WireModel& model, const MediumAt& med, const GaussRule& rule);

/// Current on every piece for the given basis amplitudes.
std::vector<cplx> piece_currents(const WireModel& model, const Eigen::VectorXcd& basis_currents);

struct RadiationGrid {
    std::vector<double> theta; // radians
    std::vector<double> phi;
    std::vector<cplx> e_theta;
    std::vector<cplx> e_phi;
};

/// Far-zone fields of the piece currents, serial reference and OpenMP.
RadiationGrid radiate_reference(const WireModel& model, const std::vector<cplx>& currents,
                                const MediumAt& med, const std::vector<double>& theta,
                                const std::vector<double>& phi);
RadiationGrid radiate_parallel(const WireModel& model, const std::vector<cplx>& currents,
                               const MediumAt& med, const std::vector<double>& theta,
                               const std::vector<double>& phi);

} // namespace pixrect::mom
