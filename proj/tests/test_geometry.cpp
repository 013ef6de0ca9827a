// SPDX-License-Identifier: Apache-2.0

#include "pixrect/errors.hpp"
#include "pixrect/geometry.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace pixrect;

namespace {

// Vertex sets written out from the documented cell convention, independent of
// PixelGrid::vertices.
std::set<std::pair<int, int>> oracle_vertices(int cols, std::size_t t, Diagonal d)
{
    const int cell = static_cast<int>(t / 2);
    const int r = cell / cols, c = cell % cols;
    const bool upper = t % 2;
    const std::pair<int, int> bl{c, r}, br{c + 1, r}, tr{c + 1, r + 1}, tl{c, r + 1};
    if (d == Diagonal::Slash)
        return upper ? std::set{bl, tr, tl} : std::set{bl, br, tr};
    return upper ? std::set{br, tr, tl} : std::set{bl, br, tl};
}

// Brute-force flood fill: two triangles touch iff they share two vertices.
int oracle_components(const PixelLayout& layout)
{
    const auto& g = layout.grid();
    const std::size_t n = g.triangle_count();
    std::vector<std::set<std::pair<int, int>>> verts;
    for (std::size_t t = 0; t < n; ++t)
        verts.push_back(oracle_vertices(g.cols(), t, g.diagonal(static_cast<int>(t / 2) / g.cols(), static_cast<int>(t / 2) % g.cols())));
    std::vector<int> label(n, -1);
    int count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (!layout.is_on(s) || label[s] >= 0)
            continue;
        label[s] = count;
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t a = 0; a < n; ++a) {
                if (label[a] != count)
                    continue;
                for (std::size_t b = 0; b < n; ++b) {
                    if (!layout.is_on(b) || label[b] >= 0)
                        continue;
                    int shared = 0;
                    for (const auto& v : verts[a])
                        shared += static_cast<int>(verts[b].count(v));
                    if (shared == 2) {
                        label[b] = count;
                        grew = true;
                    }
                }
            }
        }
        ++count;
    }
    return count;
}

BitVector bits_from(const std::string& s)
{
    BitVector b;
    for (char c : s)
        b.push_back(c == '1' ? 1 : 0);
    return b;
}

} // namespace

TEST_CASE("board defaults validate and bad boards are rejected", "[geometry]")
{
    BoardSpec b;
    REQUIRE_NOTHROW(b.validate());
    b.W_p = 30.0; // wider than the substrate
    REQUIRE_THROWS_AS(b.validate(), ConfigError);
}

TEST_CASE("bit order is row-major, lower triangle first", "[geometry]")
{
    PixelGrid g(2, 2, 2.5);
    const auto layout = decode_layout(g, bits_from("10000001"));
    REQUIRE(layout.is_on(0));
    REQUIRE(layout.is_on(7));
    REQUIRE(layout.conductor_count() == 2);
    REQUIRE(g.vertices(0)[0] == LatticePoint{0, 0});
}

TEST_CASE("decode then encode is the identity on the free bits", "[geometry]")
{
    PixelGrid g(3, 3, 2.0, {}, {{0, true}, {5, false}, {17, true}}, 1);
    REQUIRE(g.free_count() == 15);
    std::uint64_t state = 12345;
    for (int trial = 0; trial < 200; ++trial) {
        BitVector bits(g.free_count());
        for (auto& b : bits) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            b = static_cast<std::uint8_t>((state >> 33) & 1);
        }
        const auto layout = decode_layout(g, bits);
        REQUIRE(encode_layout(layout) == bits);
        REQUIRE(layout.is_on(0));
        REQUIRE_FALSE(layout.is_on(5));
        REQUIRE(layout.is_on(17));
    }
}

TEST_CASE("wrong genome length is a dimension error", "[geometry]")
{
    PixelGrid g(2, 2, 2.5);
    REQUIRE_THROWS_AS(decode_layout(g, BitVector(7, 1)), DimensionError);
}

TEST_CASE("connectivity agrees with the flood-fill oracle on all 2x2 layouts", "[geometry]")
{
    for (auto diag : {Diagonal::Slash, Diagonal::Backslash}) {
        PixelGrid g(2, 2, 2.5, std::vector<Diagonal>(4, diag));
        for (int v = 0; v < 256; ++v) {
            BitVector bits(8);
            for (int i = 0; i < 8; ++i)
                bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (7 - i)) & 1);
            const auto layout = decode_layout(g, bits);
            REQUIRE(connectivity(layout).component_count == oracle_components(layout));
        }
    }
}

TEST_CASE("bits 10110010 on the 2x2 grid", "[geometry]")
{
    PixelGrid g(2, 2, 2.5);
    const auto layout = decode_layout(g, bits_from("10110010"));
    const auto c = connectivity(layout);
    REQUIRE(c.component_count == oracle_components(layout));
    // t0, t2, t3, t6 chain through shared edges
    REQUIRE(c.component_count == 1);
    REQUIRE(c.feed_connected);
}

TEST_CASE("all-one layout is a single feed-connected component", "[geometry]")
{
    PixelGrid g(4, 5, 2.0);
    const auto c = connectivity(decode_layout(g, BitVector(g.free_count(), 1)));
    REQUIRE(c.component_count == 1);
    REQUIRE(c.feed_connected);
}

TEST_CASE("vertex contact does not connect", "[geometry]")
{
    // lower(0,0) = {(0,0),(1,0),(1,1)}, upper(1,1) = {(1,1),(2,2),(1,2)}
    PixelGrid g(2, 2, 2.5);
    const auto c = connectivity(decode_layout(g, bits_from("10000001")));
    REQUIRE(c.component_count == 2);
}

TEST_CASE("mesh edge counts on one cell", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(1, 1, 2.0);
    const auto one = mesh(decode_layout(g, bits_from("10")), board, 3e9);
    REQUIRE(one.segments.size() == 3);
    const auto two = mesh(decode_layout(g, bits_from("11")), board, 3e9);
    REQUIRE(two.segments.size() == 5);
}

TEST_CASE("shared edges are emitted once", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(4, 4, 2.5);
    const auto m = mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, 3e9);
    // 5 horizontal lines x 4 + 5 vertical lines x 4 + 16 diagonals
    REQUIRE(m.segments.size() == 56);
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        for (std::size_t j = i + 1; j < m.segments.size(); ++j) {
            const auto& a = m.segments[i];
            const auto& b = m.segments[j];
            const bool same = (a.a == b.a && a.b == b.b) || (a.a == b.b && a.b == b.a);
            REQUIRE_FALSE(same);
        }
    }
}

TEST_CASE("segments respect lambda/10 at f_max", "[geometry]")
{
    BoardSpec board;
    board.eps_eff = 1.0;
    PixelGrid g(2, 2, 10.0); // 14.1 mm diagonals need splitting
    const auto m = mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, 3e9);
    constexpr double kLambda10 = 9.993081933333333; // mm, c / 3 GHz / 10
    for (const auto& s : m.segments)
        REQUIRE(s.length() <= kLambda10 + 1e-9);
    REQUIRE_NOTHROW(validate_mesh(m, 3e9, 1.0));
    REQUIRE(m.segments.size() > 16);
}

TEST_CASE("feed segment sits at the middle of the feed edge", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(2, 3, 6.0, {}, {}, feed_column(board, 6.0, 3));
    REQUIRE(g.feed_col() == 0); // floor(5.2 / 6)
    const auto m = mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, 3e9);
    const auto& s = m.segments[m.feed];
    const double cx = -0.5 * board.W_p + 0.5 * 6.0;
    REQUIRE(std::abs(0.5 * (s.a.x + s.b.x) - cx) < 1e-9);
    REQUIRE(std::abs(s.a.y + 0.5 * board.L_p) < 1e-9);
}

TEST_CASE("mesh is deterministic and feed-isolated layouts need opting in", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(2, 2, 2.5);
    REQUIRE_NOTHROW(mesh(decode_layout(g, bits_from("10000001")), board, 3e9));
    const auto layout = decode_layout(g, bits_from("00000001"));
    REQUIRE_THROWS_AS(mesh(layout, board, 3e9), ConfigError);
    MeshOptions mo;
    mo.allow_disconnected = true;
    std::ostringstream a, b;
    write_mesh(a, mesh(layout, board, 3e9, mo));
    write_mesh(b, mesh(layout, board, 3e9, mo));
    REQUIRE(a.str() == b.str());
}

TEST_CASE("segment budget is enforced", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(8, 8, 2.5);
    MeshOptions mo;
    mo.segment_budget = 50;
    REQUIRE_THROWS_AS(mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, 3e9, mo), ResourceError);
}

TEST_CASE("pixel map and mesh files round-trip", "[geometry]")
{
    BoardSpec board;
    PixelGrid g(3, 2, 2.5, {}, {{1, true}});
    BitVector bits{1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1};
    const auto layout = decode_layout(g, bits);
    std::stringstream ss;
    write_pixel_map(ss, layout);
    REQUIRE(ss.str().substr(0, 15) == "3 2 2.500000\n##");
    REQUIRE(read_pixel_map(ss, g) == layout);

    MeshOptions mo;
    mo.allow_disconnected = true;
    const auto m = mesh(layout, board, 3e9, mo);
    std::stringstream ms;
    write_mesh(ms, m);
    const auto back = read_mesh(ms);
    REQUIRE(back.segments.size() == m.segments.size());
    REQUIRE(back.feed == m.feed);
    std::stringstream again;
    write_mesh(again, back);
    std::stringstream first;
    write_mesh(first, m);
    REQUIRE(again.str() == first.str());

    std::stringstream pbm;
    write_pbm(pbm, layout, 4);
    std::string magic;
    int w = 0, h = 0;
    pbm >> magic >> w >> h;
    REQUIRE(magic == "P1");
    REQUIRE(w == 8);
    REQUIRE(h == 12);
}

TEST_CASE("pixel map header must match the grid", "[geometry]")
{
    PixelGrid g(2, 2, 2.5);
    std::istringstream bad("2 3 2.500000\n......\n......\n");
    REQUIRE_THROWS_AS(read_pixel_map(bad, g), DimensionError);
}
