// SPDX-License-Identifier: Apache-2.0

#include "pixrect/pipeline.hpp"

#include "pixrect/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace pixrect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHardwareEfficiency0dBm = 0.37;
constexpr double kHardwareVdc0dBm = 0.815;

json number(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

json complex_json(cplx z) { return json::array({number(z.real()), number(z.imag())}); }

std::string bit_string(const BitVector& bits)
{
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        s[i] = bits[i] ? '1' : '0';
    return s;
}

AntennaCost::Context cost_context(const RunConfig& cfg)
{
    return {cfg.make_grid(), cfg.board, cfg.mesh, cfg.solver, cfg.f_max(), cfg.bpso.penalty_disconnected};
}

SolveRequest layout_request(const RunConfig& cfg, const PixelLayout& layout, std::vector<double> freqs)
{
    MeshOptions mo = cfg.mesh;
    mo.allow_disconnected = true;
    return {mesh(layout, cfg.board, cfg.f_max(), mo), std::move(freqs), cfg.board.eps_eff};
}

// Writes a file atomically enough for our purposes: to a temporary, then renamed.
template <class Fn>
void write_file(const fs::path& path, Fn&& fn)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os)
            throw ResourceError("cannot write " + tmp.string());
        fn(os);
        if (!os)
            throw ResourceError("error while writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<ImpedancePoint> as_points(const std::vector<EfficiencyRow>& rows)
{
    std::vector<ImpedancePoint> pts;
    for (const auto& r : rows)
        pts.push_back({r.p_in_dbm, r.state, r.error});
    return pts;
}

} // namespace

Characterization characterize_rectifier(const RunConfig& cfg)
{
    Characterization c;
    if (cfg.fixed_zref) {
        c.z_ref = *cfg.fixed_zref;
        c.simulated = false;
        return c;
    }
    const auto powers = cfg.sweeps.powers();
    const cplx z50{50.0, 0.0};
    c.sweep = impedance_sweep(cfg.rectifier, cfg.cost.f_r, powers, z50, cfg.steady);

    const ImpedancePoint* design = nullptr;
    for (const auto& p : c.sweep) {
        if (std::abs(p.p_dbm - cfg.sweeps.design_power) <= 1e-9)
            design = &p;
    }
    if (design) {
        if (!design->state)
            throw NumericalError("rectifier failed at the design power: " + design->error);
        c.z_ref = design->state->z_in;
    } else {
        c.z_ref = steady_state(cfg.rectifier, cfg.cost.f_r, cfg.sweeps.design_power, z50, cfg.steady).z_in;
    }
    if (!(c.z_ref.real() > 0.0) || !std::isfinite(c.z_ref.imag()))
        throw NumericalError("rectifier input impedance at the design power has no positive resistance");
    return c;
}

Synthesis synthesize(const RunConfig& cfg, cplx z_ref, const RunOptions& options)
{
    CostSpec spec = cfg.cost;
    spec.z_ref = z_ref;
    const AntennaCost cost(cost_context(cfg), spec);
    const auto& grid = cost.context().grid;
    Synthesis s{run(cfg.bpso, cost, grid.free_count(), options), PixelLayout(grid, std::vector<std::uint8_t>(grid.triangle_count(), 0)), 0};
    if (s.run.best.empty())
        throw NumericalError("optimizer produced no finite-cost layout");
    s.layout = decode_layout(grid, s.run.best);
    s.memo_size = cost.memo_size();
    return s;
}

Verification verify_layout(const RunConfig& cfg, const PixelLayout& layout, cplx z_ref, bool with_pattern)
{
    Verification v;
    const auto req = layout_request(cfg, layout, cfg.sweeps.frequencies());
    v.sweep = reflection_sweep(req, {z_ref}, cfg.solver, cfg.cost.db_floor);
    if (with_pattern)
        v.pattern = far_field(req, cfg.cost.f_r, cfg.sweeps.pattern_step, cfg.solver);
    return v;
}

EfficiencyReport report_efficiency(const RunConfig& cfg, const PixelLayout& layout)
{
    EfficiencyReport r;
    const auto req = layout_request(cfg, layout, {cfg.cost.f_r});
    r.z_antenna = solve(req, cfg.solver).front().value;
    if (!(r.z_antenna.real() > 0.0))
        throw NumericalError("antenna resistance at f_r is not positive; cannot drive the rectifier");

    const auto powers = cfg.sweeps.powers();
    const auto drive = [&](double p_in) {
        EfficiencyRow row;
        row.p_in_dbm = p_in;
        try {
            row.state = steady_state(cfg.rectifier, cfg.cost.f_r, p_in, r.z_antenna, cfg.steady);
            row.dc = dc_transfer(cfg.rectifier, *row.state, cfg.efficiency_basis);
        } catch (const NumericalError& e) {
            row.error = e.what();
        }
        return row;
    };

    r.port.resize(powers.size());
    const auto n = static_cast<long long>(powers.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i)
        r.port[static_cast<std::size_t>(i)] = drive(powers[static_cast<std::size_t>(i)]);

    if (cfg.link) {
        LinkSpec l = *cfg.link;
        l.f = cfg.cost.f_r;
        r.link.resize(powers.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < n; ++i) {
            LinkSpec li = l;
            li.p_tx = powers[static_cast<std::size_t>(i)];
            auto row = drive(friis(li).p_rx_dbm);
            row.p_tx_dbm = li.p_tx;
            r.link[static_cast<std::size_t>(i)] = std::move(row);
        }
        l.p_tx = 0.0;
        r.link_at_0dbm = friis(l);
    }
    return r;
}

RunReport run_pipeline(const RunConfig& cfg, const PipelineInputs& inputs)
{
    cfg.validate();
    const fs::path out(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec)
        throw ResourceError("cannot create output directory " + out.string() + ": " + ec.message());
    fs::remove(out / "error.json", ec);

    RunReport rep;
    json extra = json::object();
    std::optional<PixelLayout> layout = inputs.layout;
    if (layout && !(layout->grid() == cfg.make_grid()))
        throw ConfigError("supplied layout does not match the configured grid");
    int failure_code = kExitOk;

    // Runs one stage; returns false (and stops the pipeline) on failure.
    const auto stage = [&](const std::string& name, auto&& body) {
        StageRecord rec;
        rec.name = name;
        try {
            body(rec);
            rec.ok = true;
        } catch (const ConfigError& e) {
            rec.error = e.what();
            failure_code = kExitConfig;
        } catch (const std::exception& e) {
            rec.error = e.what();
            failure_code = kExitNumerical;
        }
        rep.stages.push_back(rec);
        if (!rec.ok) {
            json err = {{"stage", name}, {"error", rec.error},
                        {"kind", failure_code == kExitConfig ? "configuration" : "numerical"}};
            write_file(out / "error.json", [&](std::ostream& os) { os << err.dump(2) << '\n'; });
        }
        return rec.ok;
    };
    const auto emit = [&](StageRecord& rec, const std::string& file, auto&& writer) {
        write_file(out / file, writer);
        rec.files.push_back(file);
    };

    const bool need_zref = inputs.stages.optimize || inputs.stages.sweep;
    const bool need_layout = inputs.stages.sweep || inputs.stages.pattern || inputs.stages.efficiency;
    bool ok = true;

    if (inputs.stages.rectifier || (need_zref && !cfg.fixed_zref)) {
        ok = stage("rectifier", [&](StageRecord& rec) {
            const auto c = characterize_rectifier(cfg);
            rep.z_ref = c.z_ref;
            extra["z_ref_source"] = c.simulated ? "rectifier sweep" : "fixed";
            if (c.simulated) {
                for (const auto& p : c.sweep)
                    rec.point_failures += p.state ? 0 : 1;
                emit(rec, "rectifier_sweep.csv", [&](std::ostream& os) {
                    write_rectifier_csv(os, cfg.rectifier, c.sweep, cfg.efficiency_basis);
                });
            }
        });
    } else if (cfg.fixed_zref) {
        rep.z_ref = cfg.fixed_zref;
        extra["z_ref_source"] = "fixed";
    }

    if (ok && inputs.stages.optimize) {
        ok = stage("optimize", [&](StageRecord& rec) {
            const auto s = synthesize(cfg, *rep.z_ref, inputs.run);
            rep.best = s.run.best;
            rep.best_cost = s.run.best_cost;
            layout = s.layout;
            extra["evaluations"] = {{"distinct_layouts", s.memo_size},
                                    {"failures", s.run.state.failures.size()}};
            emit(rec, "convergence.csv", [&](std::ostream& os) { write_convergence_csv(os, s.run.log); });
            emit(rec, "best_layout.txt", [&](std::ostream& os) { write_pixel_map(os, s.layout); });
            emit(rec, "best_layout.pbm", [&](std::ostream& os) { write_pbm(os, s.layout); });
            emit(rec, "swarm_checkpoint.txt", [&](std::ostream& os) { save_checkpoint(os, s.run.state); });
            MeshOptions mo = cfg.mesh;
            mo.allow_disconnected = true;
            const auto m = mesh(s.layout, cfg.board, cfg.f_max(), mo);
            emit(rec, "best_mesh.txt", [&](std::ostream& os) { write_mesh(os, m); });
        });
    }

    if (ok && need_layout && !layout) {
        ok = stage("layout", [&](StageRecord&) {
            throw ConfigError("no layout available: enable the optimize stage or supply a layout file");
        });
    }

    if (ok && (inputs.stages.sweep || inputs.stages.pattern)) {
        ok = stage("verify", [&](StageRecord& rec) {
            const cplx zr = rep.z_ref.value_or(cfg.cost.z_ref);
            const auto v = verify_layout(cfg, *layout, zr, inputs.stages.pattern);
            if (inputs.stages.sweep) {
                emit(rec, "antenna_sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, v.sweep); });
                for (const auto& p : v.sweep) {
                    if (std::abs(p.frequency - cfg.cost.f_r) <= 1e-6 * cfg.cost.f_r) {
                        extra["antenna"]["z_at_f_r"] = complex_json(p.impedance);
                        extra["antenna"]["gamma_db_at_f_r"] = number(p.gamma_db);
                    }
                }
            }
            if (inputs.stages.pattern) {
                emit(rec, "pattern_cuts.csv", [&](std::ostream& os) { write_cuts_csv(os, principal_cuts(v.pattern)); });
                extra["antenna"]["peak_gain_dbi"] = number(v.pattern.peak_gain_dbi);
                extra["antenna"]["radiated_over_input"] =
                    number(v.pattern.radiated_power / v.pattern.input_power);
            }
        });
    }

    if (ok && inputs.stages.efficiency) {
        ok = stage("efficiency", [&](StageRecord& rec) {
            const auto r = report_efficiency(cfg, *layout);
            extra["efficiency"]["source_impedance"] = complex_json(r.z_antenna);
            extra["efficiency"]["denominator"] =
                cfg.efficiency_basis == EfficiencyBasis::Delivered ? "delivered" : "available";
            for (const auto& row : r.port) {
                rec.point_failures += row.state ? 0 : 1;
                if (row.state && row.p_in_dbm == 0.0) {
                    extra["efficiency"]["at_0dbm"] = {{"efficiency", number(row.dc.efficiency)},
                                                      {"v_dc", number(row.dc.v_dc)}};
                }
            }
            extra["efficiency"]["hardware_reference_0dbm"] = {
                {"label", "published hardware measurement, not a pass/fail target"},
                {"efficiency", kHardwareEfficiency0dBm},
                {"v_dc", kHardwareVdc0dBm}};
            emit(rec, "efficiency_port.csv", [&](std::ostream& os) {
                write_rectifier_csv(os, cfg.rectifier, as_points(r.port), cfg.efficiency_basis);
            });
            if (!r.link.empty()) {
                for (const auto& row : r.link)
                    rec.point_failures += row.state ? 0 : 1;
                emit(rec, "efficiency_link.csv", [&](std::ostream& os) {
                    os << "p_tx_dbm,p_in_dbm,vdc_v,pdc_w,eff\n";
                    char buf[160];
                    for (const auto& row : r.link) {
                        if (row.state)
                            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g\n", row.p_tx_dbm,
                                          row.p_in_dbm, row.dc.v_dc, row.dc.p_dc, row.dc.efficiency);
                        else
                            std::snprintf(buf, sizeof buf, "%.9g,%.9g,,,\n", row.p_tx_dbm, row.p_in_dbm);
                        os << buf;
                    }
                });
                emit(rec, "link_budget.csv", [&](std::ostream& os) {
                    os << "p_tx_dbm,fspl_db,p_rx_dbm\n";
                    char buf[96];
                    for (const auto& row : r.link) {
                        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", row.p_tx_dbm,
                                      r.link_at_0dbm.fspl_db, row.p_in_dbm);
                        os << buf;
                    }
                });
                extra["link"] = {{"fspl_db", number(r.link_at_0dbm.fspl_db)},
                                 {"p_rx_at_0dbm_tx", number(r.link_at_0dbm.p_rx_dbm)},
                                 {"far_field_ok", r.link_at_0dbm.far_field_ok}};
            }
        });
    }

    std::size_t point_failures = 0;
    bool any_ok = false;
    for (const auto& s : rep.stages) {
        point_failures += s.point_failures;
        any_ok = any_ok || s.ok;
    }
    if (!ok)
        rep.exit_code = failure_code == kExitConfig ? kExitConfig : (any_ok ? kExitPartial : kExitNumerical);
    else
        rep.exit_code = point_failures > 0 ? kExitPartial : kExitOk;

    json cfg_json = json::parse(to_json(cfg));
    cfg_json.erase("output_dir");
    cfg_json.erase("threads");
    json index = {{"tool", "pixrect"},
                  {"provenance", {{"config_hash", config_hash(cfg)}, {"seed", cfg.bpso.seed}, {"version", kVersion}}},
                  {"config", cfg_json},
                  {"exit_code", rep.exit_code}};
    if (rep.z_ref)
        index["z_ref"] = complex_json(*rep.z_ref);
    if (rep.best) {
        index["best"] = {{"bits", bit_string(*rep.best)}, {"cost_db", number(rep.best_cost)}};
    }
    for (const auto& [k, v] : extra.items())
        index[k] = v;
    json stages = json::array();
    for (const auto& s : rep.stages) {
        stages.push_back({{"name", s.name}, {"ok", s.ok}, {"error", s.error}, {"files", s.files},
                          {"point_failures", s.point_failures}});
    }
    index["stages"] = stages;
    rep.index_path = (out / "report.json").string();
    write_file(out / "report.json", [&](std::ostream& os) { os << index.dump(2) << '\n'; });
    return rep;
}

std::vector<std::string> missing_report_files(const std::string& index_path)
{
    std::ifstream in(index_path);
    if (!in)
        return {index_path};
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return {index_path};
    }
    std::vector<std::string> missing;
    const fs::path dir = fs::path(index_path).parent_path();
    for (const auto& s : j.value("stages", json::array())) {
        for (const auto& f : s.value("files", json::array())) {
            const fs::path p = dir / f.get<std::string>();
            std::error_code ec;
            if (!fs::exists(p, ec) || fs::file_size(p, ec) == 0)
                missing.push_back(p.string());
        }
    }
    return missing;
}

} // namespace pixrect
