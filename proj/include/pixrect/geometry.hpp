// SPDX-License-Identifier: Apache-2.0
//
// Pixelated antenna parameterization: a rectangular grid of square cells,
// each split by one diagonal into a lower and an upper triangle. Optimizer
// bitstrings switch the free triangles between conductor and void; the
// layout is then turned into a thin-wire grid for the moment-method solver.
#pragma once

#include "pixrect/vec3.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pixrect {

using BitVector = std::vector<std::uint8_t>;

/// Board and patch outline, millimetres.
struct BoardSpec {
    double L_s = 26.0;
    double W_s = 24.0;
    double L_p = 22.0;
    double W_p = 20.0;
    double L_1 = 5.2;
    double substrate_h = 1.524;
    double eps_eff = 2.275; // (eps_r + 1) / 2 for RO4003C

    void validate() const;
};

enum class Diagonal : std::uint8_t {
    Slash,     // bottom-left to top-right
    Backslash, // top-left to bottom-right
};

struct FixedCell {
    std::size_t triangle = 0;
    bool on = true;
    bool operator==(const FixedCell&) const = default;
};

/// Integer lattice coordinate of a grid vertex (column, row).
struct LatticePoint {
    int i = 0;
    int j = 0;
    constexpr bool operator==(const LatticePoint&) const = default;
};

/// Triangle t lives in cell (r, c) = ((t/2) / cols, (t/2) % cols); t even is
/// the lower triangle, t odd the upper. Free bits map onto the non-fixed
/// triangles in ascending triangle order.
class PixelGrid {
public:
    PixelGrid(int rows, int cols, double cell_size,
              std::vector<Diagonal> orientation = {},
              std::vector<FixedCell> fixed = {},
              int feed_col = 0);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    double cell_size() const noexcept { return cell_size_; }
    int feed_col() const noexcept { return feed_col_; }
    std::size_t triangle_count() const noexcept { return 2u * static_cast<std::size_t>(rows_ * cols_); }
    std::size_t free_count() const noexcept { return free_to_triangle_.size(); }

    Diagonal diagonal(int row, int col) const;
    const std::vector<Diagonal>& orientation() const noexcept { return orientation_; }
    const std::vector<FixedCell>& fixed_cells() const noexcept { return fixed_; }

    /// Forced state of triangle t, or nullopt if it is optimizable.
    std::optional<bool> fixed_state(std::size_t t) const;
    std::size_t free_triangle(std::size_t bit) const { return free_to_triangle_.at(bit); }

    std::array<LatticePoint, 3> vertices(std::size_t t) const;

    /// The lower triangle of cell (0, feed_col); it owns the feed edge.
    std::size_t feed_triangle() const noexcept { return 2u * static_cast<std::size_t>(feed_col_); }
    /// Bottom edge of cell (0, feed_col), left vertex first.
    std::array<LatticePoint, 2> feed_edge() const noexcept;

    bool operator==(const PixelGrid&) const = default;

private:
    int rows_;
    int cols_;
    double cell_size_;
    int feed_col_;
    std::vector<Diagonal> orientation_;
    std::vector<FixedCell> fixed_;
    std::vector<std::int8_t> fixed_state_; // -1 free, 0 off, 1 on
    std::vector<std::size_t> free_to_triangle_;
};

/// Column of the cell whose bottom edge carries the feed, from the L_1 offset.
int feed_column(const BoardSpec& board, double cell_size, int cols);

/// Fixed-ON triangles for a frame `width` cells wide around the grid border.
std::vector<FixedCell> frame_cells(int rows, int cols, int width);

class PixelLayout {
public:
    PixelLayout(PixelGrid grid, std::vector<std::uint8_t> on);

    const PixelGrid& grid() const noexcept { return grid_; }
    bool is_on(std::size_t t) const { return on_.at(t) != 0; }
    const std::vector<std::uint8_t>& triangles() const noexcept { return on_; }
    std::size_t conductor_count() const;

    bool operator==(const PixelLayout&) const = default;

private:
    PixelGrid grid_;
    std::vector<std::uint8_t> on_; // per triangle
};

PixelLayout decode_layout(const PixelGrid& grid, const BitVector& bits);
BitVector encode_layout(const PixelLayout& layout);

struct Connectivity {
    std::vector<int> label;               // per triangle, -1 for void
    int component_count = 0;
    std::vector<bool> touches_feed;       // per component
    bool feed_connected = false;
};

/// Edge-adjacency components of the conductor triangles. Triangles that only
/// share a vertex are not connected.
Connectivity connectivity(const PixelLayout& layout);

/// Straight wire list, millimetres. Segment `feed` carries the source.
struct WireMesh {
    struct Segment {
        Vec3 a;
        Vec3 b;
        double radius = 0.0;
        double length() const { return norm(b - a); }
    };
    std::vector<Segment> segments;
    std::size_t feed = 0;
};

struct MeshOptions {
    double radius_factor = 0.25;    // wire radius as a fraction of cell_size
    std::size_t segment_budget = 2000;
    bool allow_disconnected = false;
};

/// Wire-grid model of a layout. Every conductor triangle contributes its
/// three edges, shared edges once; the feed edge is always present. Edges are
/// emitted in ascending (min vertex id, max vertex id) order, each subdivided
/// into equal pieces no longer than a tenth of the wavelength at f_max.
WireMesh mesh(const PixelLayout& layout, const BoardSpec& board, double f_max,
              const MeshOptions& options = {});

/// Throws ConfigError if any segment is degenerate, longer than lambda/10, or
/// the feed index is out of range.
void validate_mesh(const WireMesh& mesh, double f_max, double eps_eff);

void write_pixel_map(std::ostream& os, const PixelLayout& layout);
PixelLayout read_pixel_map(std::istream& is, const PixelGrid& grid);
void write_pbm(std::ostream& os, const PixelLayout& layout, int px_per_cell = 8);
void write_mesh(std::ostream& os, const WireMesh& mesh);
WireMesh read_mesh(std::istream& is);

} // namespace pixrect
