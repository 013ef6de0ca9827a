// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: everything a pipeline run needs, loaded from a JSON
// document. Unknown keys are rejected so typos surface as configuration
// errors instead of silently falling back to defaults.
#pragma once

#include "pixrect/constants.hpp"
#include "pixrect/emsolve.hpp"
#include "pixrect/geometry.hpp"
#include "pixrect/matching.hpp"
#include "pixrect/optimizer.hpp"
#include "pixrect/rectifier.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pixrect {

inline constexpr const char* kVersion = "0.1.0";

enum class DiagonalPattern { Slash, Backslash, Alternate };

struct GridConfig {
    int rows = 8;
    int cols = 8;
    double cell_size = 0.0; // mm; 0 fits the grid inside the patch outline
    DiagonalPattern diagonals = DiagonalPattern::Slash;
    int frame_width = 0;    // fixed-ON border, in cells
    int feed_col = -1;      // -1 derives it from L_1
    std::vector<FixedCell> fixed;
};

struct SweepConfig {
    double f_start = 2.0e9;
    double f_stop = 3.0e9;
    int f_points = 21;
    double p_start = -30.0; // dBm
    double p_stop = 10.0;
    double p_step = 5.0;
    double design_power = 0.0; // dBm, where z_ref is taken from the rectifier sweep
    double pattern_step = 5.0; // degrees

    std::vector<double> frequencies() const;
    std::vector<double> powers() const;
};

struct RunConfig {
    BoardSpec board;
    GridConfig grid;
    std::string rectifier_profile = "sms7621-like";
    RectifierSpec rectifier;
    SteadyStateOptions steady;
    BpsoConfig bpso;
    CostSpec cost;
    std::optional<cplx> fixed_zref; // bypasses rectifier characterization
    std::optional<LinkSpec> link = LinkSpec{};
    SweepConfig sweeps;
    MeshOptions mesh;
    SolverOptions solver;
    EfficiencyBasis efficiency_basis = EfficiencyBasis::Delivered;
    std::string output_dir = "out";
    int threads = 0; // 0 keeps the OpenMP default; never affects results

    void validate() const;
    PixelGrid make_grid() const;
    /// Mesh refinement frequency: the top of the verification sweep.
    double f_max() const;
};

/// Named rectifier profile; throws ConfigError for unknown names.
RectifierSpec rectifier_profile(const std::string& name);

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Canonical JSON form (sorted keys) of every field, output_dir and threads included.
std::string to_json(const RunConfig& cfg, int indent = 2);

/// FNV-1a 64-bit hash of the canonical semantic fields, as 16 hex digits.
/// output_dir and threads are excluded because they cannot change results.
std::string config_hash(const RunConfig& cfg);

} // namespace pixrect
