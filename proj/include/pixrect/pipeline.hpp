// SPDX-License-Identifier: Apache-2.0
//
// End-to-end workflow: rectifier characterization, antenna synthesis,
// verification sweeps and the rectenna efficiency report. Every stage writes
// its artifacts into the run directory and records them in report.json.
#pragma once

#include "pixrect/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pixrect {

struct Characterization {
    cplx z_ref;
    bool simulated = true; // false when a fixed z_ref was supplied
    std::vector<ImpedancePoint> sweep;
};

/// Runs the rectifier impedance sweep (50 ohm source) and picks Z_in at the
/// design power. With cfg.fixed_zref set the simulation is skipped.
Characterization characterize_rectifier(const RunConfig& cfg);

struct Synthesis {
    RunResult run;
    PixelLayout layout;
    std::size_t memo_size = 0;
};

Synthesis synthesize(const RunConfig& cfg, cplx z_ref, const RunOptions& options = {});

struct Verification {
    std::vector<SweepPoint> sweep;
    FarField pattern;
};

Verification verify_layout(const RunConfig& cfg, const PixelLayout& layout, cplx z_ref,
                           bool with_pattern = true);

struct EfficiencyRow {
    double p_tx_dbm = 0.0; // link mode only
    double p_in_dbm = 0.0; // available power at the antenna port
    std::optional<SteadyState> state;
    DcTransfer dc;
    std::string error;
};

struct EfficiencyReport {
    cplx z_antenna;                    // rectifier source impedance
    std::vector<EfficiencyRow> port;   // powers are port powers
    std::vector<EfficiencyRow> link;   // powers are transmit powers; empty without a link
    LinkResult link_at_0dbm;
};

/// Drives the rectifier from the antenna impedance at f_r over the configured
/// power range, directly at the port and, if a link is configured, through the
/// free-space budget.
EfficiencyReport report_efficiency(const RunConfig& cfg, const PixelLayout& layout);

struct Stages {
    bool rectifier = true;
    bool optimize = true;
    bool sweep = true;
    bool pattern = true;
    bool efficiency = true;
};

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitPartial = 3 };

struct StageRecord {
    std::string name;
    bool ok = false;
    std::string error;
    std::vector<std::string> files;
    std::size_t point_failures = 0;
};

struct RunReport {
    std::vector<StageRecord> stages;
    std::optional<cplx> z_ref;
    std::optional<BitVector> best;
    double best_cost = kUnsetCost;
    int exit_code = kExitOk;
    std::string index_path;
};

struct PipelineInputs {
    Stages stages;
    std::optional<PixelLayout> layout; // used instead of synthesizing one
    RunOptions run;
};

/// Runs the selected stages in order into cfg.output_dir. Stage failures are
/// recorded (error.json plus the stage entry in report.json); earlier
/// artifacts are kept. Configuration errors propagate as ConfigError.
RunReport run_pipeline(const RunConfig& cfg, const PipelineInputs& inputs = {});

/// Checks that every file listed in a report index exists and is non-empty.
std::vector<std::string> missing_report_files(const std::string& index_path);

} // namespace pixrect
