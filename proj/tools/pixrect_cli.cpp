// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every verb runs a subset of the pipeline stages
// into the output directory and exits with the pipeline's status code.

#include "pixrect/errors.hpp"
#include "pixrect/pipeline.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <fstream>
#include <iostream>
#include <vector>

using namespace pixrect;

namespace {

PixelLayout load_layout(const std::string& path, const RunConfig& cfg)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open layout file " + path);
    return read_pixel_map(in, cfg.make_grid());
}

void print_summary(const RunReport& rep)
{
    for (const auto& s : rep.stages) {
        std::cout << s.name << ": " << (s.ok ? "ok" : "FAILED");
        if (s.point_failures)
            std::cout << " (" << s.point_failures << " failed points)";
        if (!s.ok)
            std::cout << " - " << s.error;
        std::cout << '\n';
        for (const auto& f : s.files)
            std::cout << "  " << f << '\n';
    }
    if (rep.z_ref)
        std::cout << "z_ref = " << rep.z_ref->real() << (rep.z_ref->imag() < 0 ? " - " : " + ")
                  << std::abs(rep.z_ref->imag()) << "j ohm\n";
    if (rep.best)
        std::cout << "best cost = " << rep.best_cost << " dB\n";
    std::cout << "report: " << rep.index_path << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pixelated rectenna synthesis toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int threads = 0;
    std::vector<double> fixed_zref;
    std::string basis;
    app.add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "optimizer seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "OpenMP threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
    app.add_option("--fixed-zref", fixed_zref, "use this rectifier impedance instead of simulating it")
        ->expected(2)
        ->type_name("R X");
    app.add_option("--efficiency-basis", basis, "efficiency denominator")
        ->check(CLI::IsMember({"delivered", "available"}));

    Stages none{false, false, false, false, false};
    PipelineInputs inputs;
    std::string layout_path;
    std::string checkpoint_path;
    std::size_t checkpoint_every = 0;

    auto* rect = app.add_subcommand("rectifier", "rectifier impedance sweep");
    auto* opt = app.add_subcommand("optimize", "antenna synthesis");
    opt->add_option("--checkpoint", checkpoint_path, "swarm checkpoint file");
    opt->add_option("--checkpoint-every", checkpoint_every, "iterations between checkpoints");
    auto* sweep = app.add_subcommand("sweep", "reflection and impedance of a layout");
    auto* pattern = app.add_subcommand("pattern", "far-field pattern of a layout");
    auto* eff = app.add_subcommand("efficiency", "RF-DC curves for a layout");
    for (auto* sc : {sweep, pattern, eff})
        sc->add_option("--layout", layout_path, "pixel map file")->required()->check(CLI::ExistingFile);
    auto* pipe = app.add_subcommand("pipeline", "all stages");
    pipe->add_option("--checkpoint", checkpoint_path, "swarm checkpoint file");
    pipe->add_option("--checkpoint-every", checkpoint_every, "iterations between checkpoints");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed)
            cfg.bpso.seed = *seed;
        if (!out_dir.empty())
            cfg.output_dir = out_dir;
        if (threads > 0)
            cfg.threads = threads;
        if (fixed_zref.size() == 2)
            cfg.fixed_zref = cplx(fixed_zref[0], fixed_zref[1]);
        if (basis == "available")
            cfg.efficiency_basis = EfficiencyBasis::Available;
        else if (basis == "delivered")
            cfg.efficiency_basis = EfficiencyBasis::Delivered;
        cfg.validate();
        if (cfg.threads > 0)
            omp_set_num_threads(cfg.threads);

        inputs.stages = none;
        if (rect->parsed()) {
            inputs.stages.rectifier = true;
        } else if (opt->parsed()) {
            inputs.stages.rectifier = true;
            inputs.stages.optimize = true;
        } else if (sweep->parsed()) {
            inputs.stages.sweep = true;
        } else if (pattern->parsed()) {
            inputs.stages.pattern = true;
        } else if (eff->parsed()) {
            inputs.stages.efficiency = true;
        } else {
            inputs.stages = Stages{};
        }
        if (!layout_path.empty())
            inputs.layout = load_layout(layout_path, cfg);
        inputs.run.checkpoint_path = checkpoint_path;
        inputs.run.checkpoint_every = checkpoint_every;

        const auto rep = run_pipeline(cfg, inputs);
        print_summary(rep);
        return rep.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
