// SPDX-License-Identifier: Apache-2.0

#include "pixrect/geometry.hpp"

#include "pixrect/constants.hpp"
#include "pixrect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace pixrect {

void BoardSpec::validate() const
{
    for (double v : {L_s, W_s, L_p, W_p, L_1, substrate_h}) {
        if (!(v > 0.0))
            throw ConfigError("board dimensions must be strictly positive");
    }
    if (!(L_p < L_s) || !(W_p < W_s))
        throw ConfigError("patch does not fit on the board");
    if (!(eps_eff >= 1.0))
        throw ConfigError("eps_eff must be >= 1");
}

PixelGrid::PixelGrid(int rows, int cols, double cell_size,
                     std::vector<Diagonal> orientation,
                     std::vector<FixedCell> fixed, int feed_col)
    : rows_(rows), cols_(cols), cell_size_(cell_size), feed_col_(feed_col),
      orientation_(std::move(orientation)), fixed_(std::move(fixed))
{
    if (rows < 1 || cols < 1)
        throw ConfigError("pixel grid needs at least one row and one column");
    if (!(cell_size > 0.0))
        throw ConfigError("cell_size must be positive");
    if (feed_col < 0 || feed_col >= cols)
        throw ConfigError("feed column outside the grid");

    const auto cells = static_cast<std::size_t>(rows * cols);
    if (orientation_.empty())
        orientation_.assign(cells, Diagonal::Slash);
    if (orientation_.size() != cells)
        throw ConfigError("orientation must list one diagonal per cell");

    fixed_state_.assign(2 * cells, -1);
    for (const auto& f : fixed_) {
        if (f.triangle >= 2 * cells)
            throw ConfigError("fixed cell index " + std::to_string(f.triangle) + " out of range");
        if (fixed_state_[f.triangle] != -1)
            throw ConfigError("fixed cell index " + std::to_string(f.triangle) + " listed twice");
        fixed_state_[f.triangle] = f.on ? 1 : 0;
    }
    for (std::size_t t = 0; t < 2 * cells; ++t) {
        if (fixed_state_[t] == -1)
            free_to_triangle_.push_back(t);
    }
}

Diagonal PixelGrid::diagonal(int row, int col) const
{
    return orientation_.at(static_cast<std::size_t>(row * cols_ + col));
}

std::optional<bool> PixelGrid::fixed_state(std::size_t t) const
{
    const auto s = fixed_state_.at(t);
    if (s < 0)
        return std::nullopt;
    return s == 1;
}

std::array<LatticePoint, 3> PixelGrid::vertices(std::size_t t) const
{
    const auto cell = static_cast<int>(t / 2);
    const int r = cell / cols_;
    const int c = cell % cols_;
    const bool upper = (t % 2) == 1;
    const LatticePoint bl{c, r}, br{c + 1, r}, tr{c + 1, r + 1}, tl{c, r + 1};
    if (diagonal(r, c) == Diagonal::Slash) {
        if (!upper)
            return {bl, br, tr};
        return {bl, tr, tl};
    }
    if (!upper)
        return {bl, br, tl};
    return {br, tr, tl};
}

std::array<LatticePoint, 2> PixelGrid::feed_edge() const noexcept
{
    return {LatticePoint{feed_col_, 0}, LatticePoint{feed_col_ + 1, 0}};
}

int feed_column(const BoardSpec& board, double cell_size, int cols)
{
    const int c = static_cast<int>(std::floor(board.L_1 / cell_size));
    return std::clamp(c, 0, cols - 1);
}

std::vector<FixedCell> frame_cells(int rows, int cols, int width)
{
    std::vector<FixedCell> out;
    if (width <= 0)
        return out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const bool border = r < width || c < width || r >= rows - width || c >= cols - width;
            if (!border)
                continue;
            const auto cell = static_cast<std::size_t>(r * cols + c);
            out.push_back({2 * cell, true});
            out.push_back({2 * cell + 1, true});
        }
    }
    return out;
}

PixelLayout::PixelLayout(PixelGrid grid, std::vector<std::uint8_t> on)
    : grid_(std::move(grid)), on_(std::move(on))
{
    if (on_.size() != grid_.triangle_count())
        throw DimensionError("layout needs one state per triangle");
}

std::size_t PixelLayout::conductor_count() const
{
    return static_cast<std::size_t>(std::count(on_.begin(), on_.end(), std::uint8_t{1}));
}

PixelLayout decode_layout(const PixelGrid& grid, const BitVector& bits)
{
    if (bits.size() != grid.free_count()) {
        throw DimensionError("bit vector has " + std::to_string(bits.size()) +
                             " entries, grid has " + std::to_string(grid.free_count()) +
                             " free pixels");
    }
    std::vector<std::uint8_t> on(grid.triangle_count(), 0);
    for (std::size_t t = 0; t < on.size(); ++t) {
        if (auto s = grid.fixed_state(t))
            on[t] = *s ? 1 : 0;
    }
    for (std::size_t b = 0; b < bits.size(); ++b)
        on[grid.free_triangle(b)] = bits[b] ? 1 : 0;
    return PixelLayout(grid, std::move(on));
}

BitVector encode_layout(const PixelLayout& layout)
{
    const auto& grid = layout.grid();
    BitVector bits(grid.free_count());
    for (std::size_t b = 0; b < bits.size(); ++b)
        bits[b] = layout.is_on(grid.free_triangle(b)) ? 1 : 0;
    return bits;
}

namespace {

using EdgeKey = std::pair<int, int>;

int vertex_id(const PixelGrid& grid, LatticePoint p)
{
    return p.j * (grid.cols() + 1) + p.i;
}

LatticePoint vertex_point(const PixelGrid& grid, int id)
{
    return {id % (grid.cols() + 1), id / (grid.cols() + 1)};
}

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::array<EdgeKey, 3> triangle_edges(const PixelGrid& grid, std::size_t t)
{
    const auto v = grid.vertices(t);
    const int a = vertex_id(grid, v[0]);
    const int b = vertex_id(grid, v[1]);
    const int c = vertex_id(grid, v[2]);
    return {edge_key(a, b), edge_key(b, c), edge_key(a, c)};
}

} // namespace

Connectivity connectivity(const PixelLayout& layout)
{
    const auto& grid = layout.grid();
    const std::size_t n = grid.triangle_count();

    // Each interior edge is owned by exactly two triangles.
    std::map<EdgeKey, std::vector<std::size_t>> owners;
    for (std::size_t t = 0; t < n; ++t) {
        if (!layout.is_on(t))
            continue;
        for (const auto& e : triangle_edges(grid, t))
            owners[e].push_back(t);
    }

    Connectivity out;
    out.label.assign(n, -1);
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!layout.is_on(seed) || out.label[seed] >= 0)
            continue;
        const int id = out.component_count++;
        out.label[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const auto t = stack.back();
            stack.pop_back();
            for (const auto& e : triangle_edges(grid, t)) {
                for (auto u : owners[e]) {
                    if (out.label[u] < 0) {
                        out.label[u] = id;
                        stack.push_back(u);
                    }
                }
            }
        }
    }

    out.touches_feed.assign(static_cast<std::size_t>(out.component_count), false);
    const auto ft = grid.feed_triangle();
    if (layout.is_on(ft)) {
        out.touches_feed[static_cast<std::size_t>(out.label[ft])] = true;
        out.feed_connected = true;
    }
    return out;
}

WireMesh mesh(const PixelLayout& layout, const BoardSpec& board, double f_max,
              const MeshOptions& options)
{
    board.validate();
    if (!(f_max > 0.0))
        throw ConfigError("f_max must be positive");
    const auto& grid = layout.grid();
    const double cell = grid.cell_size();
    if (grid.cols() * cell > board.W_p * (1.0 + 1e-12) ||
        grid.rows() * cell > board.L_p * (1.0 + 1e-12)) {
        throw ConfigError("pixel grid extends beyond the patch");
    }

    if (!options.allow_disconnected && !connectivity(layout).feed_connected)
        throw ConfigError("layout is not connected to the feed");

    std::map<EdgeKey, bool> edges; // value: is feed edge
    for (std::size_t t = 0; t < grid.triangle_count(); ++t) {
        if (!layout.is_on(t))
            continue;
        for (const auto& e : triangle_edges(grid, t))
            edges.emplace(e, false);
    }
    const auto fe = grid.feed_edge();
    const auto feed_key = edge_key(vertex_id(grid, fe[0]), vertex_id(grid, fe[1]));
    edges[feed_key] = true;

    const double max_len = 1e3 * wavelength(f_max, board.eps_eff) / 10.0; // mm
    const double x0 = -0.5 * board.W_p;
    const double y0 = -0.5 * board.L_p;
    auto to_mm = [&](int id) {
        const auto p = vertex_point(grid, id);
        return Vec3{x0 + p.i * cell, y0 + p.j * cell, 0.0};
    };

    WireMesh out;
    const double radius = options.radius_factor * cell;
    for (const auto& [key, is_feed] : edges) {
        const Vec3 a = to_mm(key.first);
        const Vec3 b = to_mm(key.second);
        auto pieces = static_cast<std::size_t>(std::ceil(norm(b - a) / max_len));
        pieces = std::max<std::size_t>(pieces, 1);
        if (is_feed && pieces % 2 == 0)
            ++pieces;
        if (out.segments.size() + pieces > options.segment_budget) {
            throw ResourceError("wire mesh exceeds the segment budget of " +
                                std::to_string(options.segment_budget));
        }
        for (std::size_t k = 0; k < pieces; ++k) {
            const double s0 = static_cast<double>(k) / static_cast<double>(pieces);
            const double s1 = static_cast<double>(k + 1) / static_cast<double>(pieces);
            const Vec3 p0 = k == 0 ? a : a + (b - a) * s0;
            const Vec3 p1 = k + 1 == pieces ? b : a + (b - a) * s1;
            if (is_feed && k == pieces / 2)
                out.feed = out.segments.size();
            out.segments.push_back({p0, p1, radius});
        }
    }
    return out;
}

void validate_mesh(const WireMesh& m, double f_max, double eps_eff)
{
    if (m.segments.empty())
        throw ConfigError("wire mesh is empty");
    if (m.feed >= m.segments.size())
        throw ConfigError("feed segment index out of range");
    const double max_len = 1e3 * wavelength(f_max, eps_eff) / 10.0;
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        const auto& s = m.segments[i];
        const double len = s.length();
        if (!(len > 0.0))
            throw ConfigError("segment " + std::to_string(i) + " has zero length");
        if (!(s.radius > 0.0))
            throw ConfigError("segment " + std::to_string(i) + " has non-positive radius");
        if (len > max_len * (1.0 + 1e-9)) {
            throw ConfigError("segment " + std::to_string(i) + " is longer than lambda/10 (" +
                              std::to_string(len) + " mm > " + std::to_string(max_len) + " mm)");
        }
    }
}

void write_pixel_map(std::ostream& os, const PixelLayout& layout)
{
    const auto& g = layout.grid();
    char header[96];
    std::snprintf(header, sizeof header, "%d %d %.6f\n", g.rows(), g.cols(), g.cell_size());
    os << header;
    for (int r = 0; r < g.rows(); ++r) {
        std::string line;
        for (int c = 0; c < g.cols(); ++c) {
            const auto t = 2 * static_cast<std::size_t>(r * g.cols() + c);
            line += layout.is_on(t) ? '#' : '.';
            line += layout.is_on(t + 1) ? '#' : '.';
        }
        os << line << '\n';
    }
}

PixelLayout read_pixel_map(std::istream& is, const PixelGrid& grid)
{
    int rows = 0, cols = 0;
    double cell = 0.0;
    if (!(is >> rows >> cols >> cell))
        throw ConfigError("pixel map: missing header");
    if (rows != grid.rows() || cols != grid.cols() || std::abs(cell - grid.cell_size()) > 1e-6)
        throw DimensionError("pixel map header does not match the configured grid");
    std::vector<std::uint8_t> on(grid.triangle_count(), 0);
    for (int r = 0; r < rows; ++r) {
        std::string line;
        if (!(is >> line) || line.size() != static_cast<std::size_t>(2 * cols))
            throw DimensionError("pixel map row " + std::to_string(r) + " malformed");
        for (std::size_t k = 0; k < line.size(); ++k) {
            const char ch = line[k];
            if (ch != '#' && ch != '.')
                throw ConfigError("pixel map: unexpected character");
            on[2 * static_cast<std::size_t>(r * cols) + k] = ch == '#' ? 1 : 0;
        }
    }
    for (std::size_t t = 0; t < on.size(); ++t) {
        auto s = grid.fixed_state(t);
        if (s && (on[t] != 0) != *s)
            throw ConfigError("pixel map disagrees with fixed triangle " + std::to_string(t));
    }
    return PixelLayout(grid, std::move(on));
}

void write_pbm(std::ostream& os, const PixelLayout& layout, int px)
{
    const auto& g = layout.grid();
    const int w = g.cols() * px;
    const int h = g.rows() * px;
    os << "P1\n" << w << ' ' << h << '\n';
    for (int yi = h - 1; yi >= 0; --yi) { // image row 0 is the top of the grid
        std::string line;
        for (int xi = 0; xi < w; ++xi) {
            const int r = yi / px;
            const int c = xi / px;
            const double u = ((xi % px) + 0.5) / px; // position inside the cell
            const double v = ((yi % px) + 0.5) / px;
            bool lower;
            if (g.diagonal(r, c) == Diagonal::Slash)
                lower = v < u;
            else
                lower = u + v < 1.0;
            const auto t = 2 * static_cast<std::size_t>(r * g.cols() + c) + (lower ? 0 : 1);
            if (xi > 0)
                line += ' ';
            line += layout.is_on(t) ? '1' : '0';
        }
        os << line << '\n';
    }
}

void write_mesh(std::ostream& os, const WireMesh& m)
{
    os << "# wiremesh segments=" << m.segments.size() << " feed=" << m.feed << " units=mm\n";
    char buf[256];
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        const auto& s = m.segments[i];
        std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f %.6f %.6f %.6f%s\n", s.a.x, s.a.y,
                      s.a.z, s.b.x, s.b.y, s.b.z, s.radius, i == m.feed ? " feed" : "");
        os << buf;
    }
}

WireMesh read_mesh(std::istream& is)
{
    WireMesh m;
    bool have_feed = false;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        WireMesh::Segment s;
        if (!(ls >> s.a.x >> s.a.y >> s.a.z >> s.b.x >> s.b.y >> s.b.z >> s.radius))
            throw ConfigError("mesh file: malformed segment line");
        std::string flag;
        if (ls >> flag) {
            if (flag != "feed" || have_feed)
                throw ConfigError("mesh file: bad or repeated feed flag");
            have_feed = true;
            m.feed = m.segments.size();
        }
        m.segments.push_back(s);
    }
    if (!have_feed)
        throw ConfigError("mesh file: no feed segment flagged");
    return m;
}

} // namespace pixrect
