// SPDX-License-Identifier: Apache-2.0

#include "pixrect/mom.hpp"

#include "pixrect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pixrect::mom {

namespace {

// Merges endpoints closer than tol into shared nodes. Cells of size tol are
// hashed; the 27-cell neighbourhood is searched so points straddling a cell
// boundary still meet.
class NodeIndex {
public:
    explicit NodeIndex(double tol) : tol_(tol) {}

    int find_or_add(const Vec3& p)
    {
        const auto key = cell(p);
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find({std::get<0>(key) + dx, std::get<1>(key) + dy,
                                           std::get<2>(key) + dz});
                    if (it == cells_.end())
                        continue;
                    for (int id : it->second) {
                        if (norm(points_[static_cast<std::size_t>(id)] - p) <= tol_)
                            return id;
                    }
                }
            }
        }
        const int id = static_cast<int>(points_.size());
        points_.push_back(p);
        cells_[key].push_back(id);
        return id;
    }

    int size() const { return static_cast<int>(points_.size()); }

private:
    using Key = std::tuple<long long, long long, long long>;

    Key cell(const Vec3& p) const
    {
        return {std::llround(p.x / tol_), std::llround(p.y / tol_), std::llround(p.z / tol_)};
    }

    double tol_;
    std::vector<Vec3> points_;
    std::map<Key, std::vector<int>> cells_;
};

Segment make_segment(const Vec3& a, const Vec3& b, double radius)
{
    Segment s;
    s.a = a;
    s.b = b;
    s.mid = (a + b) * 0.5;
    s.length = norm(b - a);
    s.u = (b - a) * (1.0 / s.length);
    s.radius = radius;
    return s;
}

} // namespace

WireModel build_model(const WireMesh& mesh, const std::vector<std::size_t>& port_segments)
{
    WireModel model;
    const double mm = 1e-3;
    double min_len = std::numeric_limits<double>::infinity();
    for (const auto& s : mesh.segments) {
        const double len = s.length();
        if (!(len > 0.0))
            throw ConfigError("wire mesh contains a zero-length segment");
        min_len = std::min(min_len, len * mm);
        model.segments.push_back(make_segment(s.a * mm, s.b * mm, s.radius * mm));
    }
    for (auto p : port_segments) {
        if (p >= mesh.segments.size())
            throw ConfigError("port segment index out of range");
    }

    // Ports are split in two: the first half keeps the index, the second half
    // is appended, so the split node pairs exactly these two pieces.
    std::vector<std::size_t> port_second;
    for (auto p : port_segments) {
        const Segment orig = model.segments[p];
        model.segments[p] = make_segment(orig.a, orig.mid, orig.radius);
        port_second.push_back(model.segments.size());
        model.segments.push_back(make_segment(orig.mid, orig.b, orig.radius));
        min_len = std::min(min_len, 0.5 * orig.length);
    }

    NodeIndex nodes(1e-6 * min_len);
    for (auto& s : model.segments) {
        s.node_a = nodes.find_or_add(s.a);
        s.node_b = nodes.find_or_add(s.b);
        if (s.node_a == s.node_b)
            throw ConfigError("wire segment shorter than the node merge tolerance");
    }
    model.node_count = nodes.size();

    model.pieces.reserve(2 * model.segments.size());
    for (const auto& s : model.segments) {
        const double h = 0.5 * s.length;
        model.pieces.push_back({s.a, s.a + s.u * (0.5 * h), s.u, h, s.radius});
        model.pieces.push_back({s.mid, s.mid + s.u * (0.5 * h), s.u, h, s.radius});
    }

    // Attachments per node in ascending (segment, end) order.
    struct Attachment {
        std::size_t segment;
        bool at_b; // node is the segment's end point
    };
    std::vector<std::vector<Attachment>> attached(static_cast<std::size_t>(model.node_count));
    for (std::size_t i = 0; i < model.segments.size(); ++i) {
        attached[static_cast<std::size_t>(model.segments[i].node_a)].push_back({i, false});
        attached[static_cast<std::size_t>(model.segments[i].node_b)].push_back({i, true});
    }

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> basis_of_pair;
    for (const auto& list : attached) {
        if (list.size() < 2)
            continue;
        const auto& ref = list.front();
        for (std::size_t k = 1; k < list.size(); ++k) {
            const auto& out = list[k];
            Basis b;
            // Inflow runs toward the node, outflow away from it.
            b.piece[0] = 2 * ref.segment + (ref.at_b ? 1 : 0);
            b.sign[0] = ref.at_b ? 1.0 : -1.0;
            b.piece[1] = 2 * out.segment + (out.at_b ? 1 : 0);
            b.sign[1] = out.at_b ? -1.0 : 1.0;
            b.segment = {ref.segment, out.segment};
            basis_of_pair[{ref.segment, out.segment}] = model.bases.size();
            model.bases.push_back(b);
        }
    }

    for (std::size_t k = 0; k < port_segments.size(); ++k) {
        auto it = basis_of_pair.find({port_segments[k], port_second[k]});
        if (it == basis_of_pair.end())
            throw ConfigError("port segment split node is shared with another wire");
        model.port_basis.push_back(it->second);
    }
    if (model.bases.empty())
        throw ConfigError("wire mesh carries no current basis");
    return model;
}

GaussRule gauss_legendre(int order)
{
    if (order < 1)
        throw ConfigError("quadrature order must be >= 1");
    const auto n = static_cast<std::size_t>(order);
    GaussRule r{std::vector<double>(n), std::vector<double>(n)};
    if (order == 1) {
        r.x[0] = 0.0;
        r.w[0] = 2.0;
        return r;
    }
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15)
                break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    return r;
}

cplx wire_potential(const Vec3& obs, const Vec3& start, const Vec3& u, double length,
                    double radius, double k, const GaussRule& rule)
{
    const Vec3 d = obs - start;
    const double t0 = dot(d, u);
    const double rho2 = std::max(dot(d, d) - t0 * t0, 0.0) + radius * radius;
    const double rho = std::sqrt(rho2);
    const double static_part = std::asinh((length - t0) / rho) - std::asinh(-t0 / rho);

    // (exp(-jkR) - 1) / R, written to avoid cancellation for small kR.
    double re = 0.0, im = 0.0;
    const double half = 0.5 * length;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double t = half * (rule.x[i] + 1.0);
        const double dt = t - t0;
        const double R = std::sqrt(dt * dt + rho2);
        const double s = std::sin(0.5 * k * R);
        re += rule.w[i] * (-2.0 * s * s / R);
        im += rule.w[i] * (-std::sin(k * R) / R);
    }
    return cplx(static_part + half * re, half * im) / (4.0 * kPi);
}

MediumAt medium(double f, double eps_eff)
{
    MediumAt m;
    m.omega = 2.0 * kPi * f;
    m.eps = kEps0 * eps_eff;
    m.mu = kMu0;
    m.k = m.omega * std::sqrt(m.mu * m.eps);
    return m;
}

namespace {

// Symmetrized half-segment vector-potential coupling: Δp ∫q G + Δq ∫p G, halved.
cplx piece_coupling(const WireModel& model, std::size_t p, std::size_t q, double k,
                    const GaussRule& rule)
{
    const auto& P = model.pieces[p];
    const auto& Q = model.pieces[q];
    const cplx pq = P.length * wire_potential(P.center, Q.a, Q.u, Q.length, Q.radius, k, rule);
    const cplx qp = Q.length * wire_potential(Q.center, P.a, P.u, P.length, P.radius, k, rule);
    return 0.5 * (pq + qp);
}

// Symmetrized potential at one segment midpoint due to unit charge on another.
cplx charge_coupling(const WireModel& model, std::size_t s, std::size_t t, double k,
                     const GaussRule& rule)
{
    const auto& S = model.segments[s];
    const auto& T = model.segments[t];
    const cplx st = wire_potential(S.mid, T.a, T.u, T.length, T.radius, k, rule) / T.length;
    const cplx ts = wire_potential(T.mid, S.a, S.u, S.length, S.radius, k, rule) / S.length;
    return 0.5 * (st + ts);
}

} // namespace

namespace {

// Shared by the direct and the tabulated paths so both sum in the same order.
template <class PieceFn, class SegmentFn>
cplx combine(const WireModel& model, std::size_t m, std::size_t n, const MediumAt& med,
             PieceFn&& piece, SegmentFn&& segment)
{
    const auto& bm = model.bases[m];
    const auto& bn = model.bases[n];
    cplx vector_part = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const auto& P = model.pieces[bm.piece[i]];
            const auto& Q = model.pieces[bn.piece[j]];
            const double align = bm.sign[i] * bn.sign[j] * dot(P.u, Q.u);
            if (align == 0.0)
                continue;
            vector_part += align * piece(bm.piece[i], bn.piece[j]);
        }
    }
    cplx scalar_part = 0.0;
    constexpr double charge[2] = {-1.0, 1.0};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j)
            scalar_part += charge[i] * charge[j] * segment(bm.segment[i], bn.segment[j]);
    }
    const cplx jw(0.0, med.omega);
    return jw * med.mu * vector_part + scalar_part / (jw * med.eps);
}

void mirror(Eigen::MatrixXcd& A)
{
    for (Eigen::Index r = 1; r < A.rows(); ++r) {
        for (Eigen::Index c = 0; c < r; ++c)
            A(r, c) = A(c, r);
    }
}

} // namespace

cplx matrix_entry(const WireModel& model, std::size_t m, std::size_t n, const MediumAt& med,
                  const GaussRule& rule)
{
    // Same (upper-triangle) ordering as the tabulated path.
    return combine(
        model, std::min(m, n), std::max(m, n), med,
        [&](std::size_t p, std::size_t q) {
            return piece_coupling(model, std::min(p, q), std::max(p, q), med.k, rule);
        },
        [&](std::size_t s, std::size_t t) {
            return charge_coupling(model, std::min(s, t), std::max(s, t), med.k, rule);
        });
}

Couplings couplings_reference(const WireModel& model, const MediumAt& med, const GaussRule& rule)
{
    const auto np = static_cast<Eigen::Index>(model.pieces.size());
    const auto ns = static_cast<Eigen::Index>(model.segments.size());
    Couplings c{Eigen::MatrixXcd(np, np), Eigen::MatrixXcd(ns, ns)};
    for (Eigen::Index p = 0; p < np; ++p) {
        for (Eigen::Index q = p; q < np; ++q)
            c.piece(p, q) = piece_coupling(model, static_cast<std::size_t>(p), static_cast<std::size_t>(q), med.k, rule);
    }
    for (Eigen::Index s = 0; s < ns; ++s) {
        for (Eigen::Index t = s; t < ns; ++t)
            c.segment(s, t) = charge_coupling(model, static_cast<std::size_t>(s), static_cast<std::size_t>(t), med.k, rule);
    }
    mirror(c.piece);
    mirror(c.segment);
    return c;
}

Couplings couplings_parallel(const WireModel& model, const MediumAt& med, const GaussRule& rule)
{
    const auto np = static_cast<Eigen::Index>(model.pieces.size());
    const auto ns = static_cast<Eigen::Index>(model.segments.size());
    Couplings c{Eigen::MatrixXcd(np, np), Eigen::MatrixXcd(ns, ns)};
#pragma omp parallel
    {
#pragma omp for schedule(dynamic, 4) nowait
        for (Eigen::Index p = 0; p < np; ++p) {
            for (Eigen::Index q = p; q < np; ++q)
                c.piece(p, q) = piece_coupling(model, static_cast<std::size_t>(p), static_cast<std::size_t>(q), med.k, rule);
        }
#pragma omp for schedule(dynamic, 4)
        for (Eigen::Index s = 0; s < ns; ++s) {
            for (Eigen::Index t = s; t < ns; ++t)
                c.segment(s, t) = charge_coupling(model, static_cast<std::size_t>(s), static_cast<std::size_t>(t), med.k, rule);
        }
    }
    mirror(c.piece);
    mirror(c.segment);
    return c;
}

Eigen::MatrixXcd assemble(const WireModel& model, const Couplings& c, const MediumAt& med)
{
    const auto n = static_cast<Eigen::Index>(model.bases.size());
    Eigen::MatrixXcd Z(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = m; k < n; ++k) {
            Z(m, k) = combine(
                model, static_cast<std::size_t>(m), static_cast<std::size_t>(k), med,
                [&](std::size_t p, std::size_t q) {
                    return c.piece(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                },
                [&](std::size_t s, std::size_t t) {
                    return c.segment(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
                });
        }
    }
    mirror(Z);
    return Z;
}

Eigen::MatrixXcd assemble_reference(const WireModel& model, const MediumAt& med, const GaussRule& rule)
{
    return assemble(model, couplings_reference(model, med, rule), med);
}

Eigen::MatrixXcd assemble_parallel(const WireModel& model, const MediumAt& med, const GaussRule& rule)
{
    return assemble(model, couplings_parallel(model, med, rule), med);
}

std::vector<cplx> piece_currents(const WireModel& model, const Eigen::VectorXcd& basis_currents)
{
    std::vector<cplx> J(model.pieces.size(), 0.0);
    for (std::size_t n = 0; n < model.bases.size(); ++n) {
        const auto& b = model.bases[n];
        const cplx I = basis_currents(static_cast<Eigen::Index>(n));
        J[b.piece[0]] += b.sign[0] * I;
        J[b.piece[1]] += b.sign[1] * I;
    }
    return J;
}

namespace {

struct Direction {
    Vec3 r, theta, phi;
};

Direction direction(double th, double ph)
{
    const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
    return {{st * cp, st * sp, ct}, {ct * cp, ct * sp, -st}, {-sp, cp, 0.0}};
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

// E = -j omega mu / (4 pi) * N_perp at unit distance, phase reference at origin.
void radiate_point(const WireModel& model, const std::vector<cplx>& J, const MediumAt& med,
                   double th, double ph, cplx& e_th, cplx& e_ph)
{
    const auto d = direction(th, ph);
    cplx n_th = 0.0, n_ph = 0.0;
    for (std::size_t q = 0; q < model.pieces.size(); ++q) {
        if (J[q] == cplx(0.0))
            continue;
        const auto& P = model.pieces[q];
        const double phase = med.k * dot(d.r, P.center);
        const double shape = P.length * sinc(0.5 * med.k * P.length * dot(d.r, P.u));
        const cplx f = J[q] * shape * cplx(std::cos(phase), std::sin(phase));
        n_th += f * dot(P.u, d.theta);
        n_ph += f * dot(P.u, d.phi);
    }
    const cplx scale(0.0, -med.omega * med.mu / (4.0 * kPi));
    e_th = scale * n_th;
    e_ph = scale * n_ph;
}

RadiationGrid make_grid(const std::vector<double>& theta, const std::vector<double>& phi)
{
    RadiationGrid g;
    g.theta = theta;
    g.phi = phi;
    g.e_theta.assign(theta.size() * phi.size(), 0.0);
    g.e_phi.assign(theta.size() * phi.size(), 0.0);
    return g;
}

} // namespace

RadiationGrid radiate_reference(const WireModel& model, const std::vector<cplx>& currents,
                                const MediumAt& med, const std::vector<double>& theta,
                                const std::vector<double>& phi)
{
    auto g = make_grid(theta, phi);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        for (std::size_t j = 0; j < phi.size(); ++j) {
            const auto idx = i * phi.size() + j;
            radiate_point(model, currents, med, theta[i], phi[j], g.e_theta[idx], g.e_phi[idx]);
        }
    }
    return g;
}

RadiationGrid radiate_parallel(const WireModel& model, const std::vector<cplx>& currents,
                               const MediumAt& med, const std::vector<double>& theta,
                               const std::vector<double>& phi)
{
    auto g = make_grid(theta, phi);
    const auto total = static_cast<long long>(theta.size() * phi.size());
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
        const auto i = static_cast<std::size_t>(idx) / phi.size();
        const auto j = static_cast<std::size_t>(idx) % phi.size();
        radiate_point(model, currents, med, theta[i], phi[j], g.e_theta[static_cast<std::size_t>(idx)],
                      g.e_phi[static_cast<std::size_t>(idx)]);
    }
    return g;
}

} // namespace pixrect::mom
