// SPDX-License-Identifier: Apache-2.0

#include "pixrect/config.hpp"

#include "pixrect/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pixrect {

using nlohmann::json;

std::vector<double> SweepConfig::frequencies() const
{
    std::vector<double> out;
    if (f_points == 1) {
        out.push_back(f_start);
        return out;
    }
    for (int i = 0; i < f_points; ++i)
        out.push_back(f_start + (f_stop - f_start) * i / (f_points - 1));
    return out;
}

std::vector<double> SweepConfig::powers() const { return power_range(p_start, p_stop, p_step); }

RectifierSpec rectifier_profile(const std::string& name)
{
    if (name == "sms7621-like")
        return sms7621_like();
    throw ConfigError("unknown rectifier profile '" + name + "'");
}

PixelGrid RunConfig::make_grid() const
{
    const double cell = grid.cell_size > 0.0
        ? grid.cell_size
        : std::min(board.W_p / grid.cols, board.L_p / grid.rows);
    std::vector<Diagonal> orientation(static_cast<std::size_t>(std::max(grid.rows * grid.cols, 0)));
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            Diagonal d = Diagonal::Slash;
            if (grid.diagonals == DiagonalPattern::Backslash ||
                (grid.diagonals == DiagonalPattern::Alternate && (r + c) % 2 == 1))
                d = Diagonal::Backslash;
            orientation[static_cast<std::size_t>(r * grid.cols + c)] = d;
        }
    }
    // user entries override the frame
    std::map<std::size_t, bool> fixed;
    for (const auto& f : frame_cells(grid.rows, grid.cols, grid.frame_width))
        fixed[f.triangle] = f.on;
    for (const auto& f : grid.fixed)
        fixed[f.triangle] = f.on;
    std::vector<FixedCell> list;
    for (const auto& [t, on] : fixed)
        list.push_back({t, on});
    const int feed = grid.feed_col >= 0 ? grid.feed_col : feed_column(board, cell, grid.cols);
    return PixelGrid(grid.rows, grid.cols, cell, std::move(orientation), std::move(list), feed);
}

double RunConfig::f_max() const { return std::max(sweeps.f_stop, cost.f_r); }

void RunConfig::validate() const
{
    board.validate();
    if (grid.rows < 1 || grid.cols < 1)
        throw ConfigError("grid: rows and cols must be >= 1");
    if (grid.cell_size < 0.0)
        throw ConfigError("grid: cell_size must be >= 0");
    if (grid.frame_width < 0)
        throw ConfigError("grid: frame_width must be >= 0");
    const PixelGrid g = make_grid();
    const double tol = 1e-9 * std::max(board.W_p, board.L_p);
    if (g.cols() * g.cell_size() > board.W_p + tol || g.rows() * g.cell_size() > board.L_p + tol)
        throw ConfigError("grid: pixel grid does not fit inside the patch outline");
    if (g.free_count() == 0)
        throw ConfigError("grid: every triangle is fixed, nothing to optimize");

    rectifier.validate();
    if (steady.steps_per_period < 16 || steady.warmup_periods < 0 || steady.max_shooting_iterations < 0 ||
        steady.max_periods < 0 || !(steady.rel_tol > 0.0) || steady.max_step_halvings < 0)
        throw ConfigError("rectifier: invalid steady-state options");
    bpso.validate();
    cost.validate();
    if (fixed_zref && !(fixed_zref->real() > 0.0))
        throw ConfigError("cost: fixed z_ref must have a positive real part");
    if (link)
        link->validate();

    const auto& s = sweeps;
    if (!(s.f_start > 0.0) || s.f_stop < s.f_start || s.f_points < 1)
        throw ConfigError("sweeps: need 0 < f_start <= f_stop and f_points >= 1");
    if (s.f_points == 1 && s.f_stop != s.f_start)
        throw ConfigError("sweeps: a single-point sweep needs f_start == f_stop");
    if (s.f_points > 1 && s.f_stop == s.f_start)
        throw ConfigError("sweeps: frequencies must be strictly increasing");
    if (cost.f_r < s.f_start || cost.f_r > s.f_stop)
        throw ConfigError("cost: f_r lies outside the frequency sweep");
    (void)s.powers();
    if (s.design_power < s.p_start || s.design_power > s.p_stop)
        throw ConfigError("sweeps: design power lies outside the power sweep");
    if (!(s.pattern_step > 0.0) || std::abs(90.0 / s.pattern_step - std::round(90.0 / s.pattern_step)) > 1e-9)
        throw ConfigError("sweeps: pattern_step must divide 90 degrees");

    if (!(mesh.radius_factor > 0.0) || mesh.radius_factor >= 0.5 || mesh.segment_budget == 0)
        throw ConfigError("mesh: radius_factor must be in (0, 0.5) and segment_budget > 0");
    if (solver.quadrature_order < 1 || solver.quadrature_order > 64)
        throw ConfigError("solver: quadrature_order must be in [1, 64]");
    if (!(solver.max_condition > 0.0) || !(solver.warn_condition > 0.0))
        throw ConfigError("solver: condition thresholds must be positive");
    if (threads < 0)
        throw ConfigError("threads must be >= 0");
}

namespace {

// Reads the members of one JSON object, rejecting keys nobody asked for.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object())
            throw ConfigError(where_ + ": expected an object");
    }

    ~Reader() noexcept(false)
    {
        if (std::uncaught_exceptions() > 0)
            return;
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key))
                throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null())
            return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + ": wrong type");
        }
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return nullptr;
        return &*it;
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

cplx read_complex(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(where + ": expected [real, imag]");
    return {j[0].get<double>(), j[1].get<double>()};
}

DiagonalPattern parse_diagonals(const std::string& s)
{
    if (s == "slash")
        return DiagonalPattern::Slash;
    if (s == "backslash")
        return DiagonalPattern::Backslash;
    if (s == "alternate")
        return DiagonalPattern::Alternate;
    throw ConfigError("grid.diagonals: expected slash, backslash or alternate");
}

const char* to_string(DiagonalPattern p)
{
    switch (p) {
    case DiagonalPattern::Slash: return "slash";
    case DiagonalPattern::Backslash: return "backslash";
    case DiagonalPattern::Alternate: return "alternate";
    }
    return "slash";
}

void read_board(const json& j, BoardSpec& b)
{
    Reader r(j, "board");
    r.get("L_s_mm", b.L_s);
    r.get("W_s_mm", b.W_s);
    r.get("L_p_mm", b.L_p);
    r.get("W_p_mm", b.W_p);
    r.get("L_1_mm", b.L_1);
    r.get("substrate_h_mm", b.substrate_h);
    r.get("eps_eff", b.eps_eff);
}

void read_grid(const json& j, GridConfig& g)
{
    Reader r(j, "grid");
    r.get("rows", g.rows);
    r.get("cols", g.cols);
    r.get("cell_size_mm", g.cell_size);
    std::string diag = to_string(g.diagonals);
    r.get("diagonals", diag);
    g.diagonals = parse_diagonals(diag);
    r.get("frame_width", g.frame_width);
    r.get("feed_col", g.feed_col);
    if (const json* f = r.child("fixed"); f && !f->is_null()) {
        if (!f->is_array())
            throw ConfigError("grid.fixed: expected a list of {triangle, on}");
        g.fixed.clear();
        for (const auto& e : *f) {
            Reader fr(e, "grid.fixed[]");
            long long t = -1;
            bool on = true;
            fr.get("triangle", t);
            fr.get("on", on);
            if (t < 0)
                throw ConfigError("grid.fixed[]: triangle must be >= 0");
            g.fixed.push_back({static_cast<std::size_t>(t), on});
        }
    }
}

void read_rectifier(const json& j, RunConfig& cfg)
{
    Reader r(j, "rectifier");
    r.get("profile", cfg.rectifier_profile);
    cfg.rectifier = rectifier_profile(cfg.rectifier_profile);
    auto& s = cfg.rectifier;
    if (const json* d = r.child("diode"); d && !d->is_null()) {
        Reader dr(*d, "rectifier.diode");
        dr.get("I_s", s.diode.I_s);
        dr.get("n", s.diode.n);
        dr.get("R_s", s.diode.R_s);
        dr.get("C_j0", s.diode.C_j0);
        dr.get("V_j", s.diode.V_j);
        dr.get("m", s.diode.m);
        dr.get("temperature", s.diode.temperature);
        dr.get("fc", s.diode.fc);
    }
    r.get("C_in", s.C_in);
    r.get("C_out", s.C_out);
    r.get("L_p", s.L_p);
    r.get("C_p", s.C_p);
    r.get("R_load", s.R_load);
    auto& o = cfg.steady;
    r.get("steps_per_period", o.steps_per_period);
    r.get("start_phase", o.start_phase);
    r.get("warmup_periods", o.warmup_periods);
    r.get("max_shooting_iterations", o.max_shooting_iterations);
    r.get("max_periods", o.max_periods);
    r.get("rel_tol", o.rel_tol);
    r.get("max_step_halvings", o.max_step_halvings);
}

void read_bpso(const json& j, BpsoConfig& b)
{
    Reader r(j, "bpso");
    r.get("population", b.population);
    r.get("iterations", b.iterations);
    r.get("w_start", b.w_start);
    r.get("w_end", b.w_end);
    r.get("c1", b.c1);
    r.get("c2", b.c2);
    r.get("v_max", b.v_max);
    std::string t = to_string(b.transfer);
    r.get("transfer", t);
    try {
        b.transfer = parse_transfer(t);
    } catch (const std::exception&) {
        throw ConfigError("bpso.transfer: unknown transfer function '" + t + "'");
    }
    r.get("init_density", b.init_density);
    r.get("penalty_disconnected", b.penalty_disconnected);
    r.get("seed", b.seed);
}

void read_cost(const json& j, RunConfig& cfg)
{
    Reader r(j, "cost");
    r.get("f_r_hz", cfg.cost.f_r);
    r.get("db_floor", cfg.cost.db_floor);
    if (const json* z = r.child("fixed_zref")) {
        if (z->is_null())
            cfg.fixed_zref.reset();
        else
            cfg.fixed_zref = read_complex(*z, "cost.fixed_zref");
    }
}

void read_link(const json& j, RunConfig& cfg)
{
    if (j.is_null()) {
        cfg.link.reset();
        return;
    }
    LinkSpec l = cfg.link.value_or(LinkSpec{});
    Reader r(j, "link");
    r.get("distance_m", l.distance);
    r.get("g_tx_dbi", l.g_tx);
    r.get("g_rx_dbi", l.g_rx);
    r.get("f_hz", l.f);
    r.get("max_dimension_m", l.max_dimension);
    cfg.link = l;
}

void read_sweeps(const json& j, SweepConfig& s)
{
    Reader r(j, "sweeps");
    r.get("f_start_hz", s.f_start);
    r.get("f_stop_hz", s.f_stop);
    r.get("f_points", s.f_points);
    r.get("p_start_dbm", s.p_start);
    r.get("p_stop_dbm", s.p_stop);
    r.get("p_step_db", s.p_step);
    r.get("design_power_dbm", s.design_power);
    r.get("pattern_step_deg", s.pattern_step);
}

void read_mesh(const json& j, MeshOptions& m)
{
    Reader r(j, "mesh");
    r.get("radius_factor", m.radius_factor);
    r.get("segment_budget", m.segment_budget);
    r.get("allow_disconnected", m.allow_disconnected);
}

void read_solver(const json& j, SolverOptions& s)
{
    Reader r(j, "solver");
    r.get("quadrature_order", s.quadrature_order);
    r.get("warn_condition", s.warn_condition);
    r.get("max_condition", s.max_condition);
    r.get("parallel", s.parallel);
}

json semantic_json(const RunConfig& c)
{
    json j;
    const auto& b = c.board;
    j["board"] = {{"L_s_mm", b.L_s}, {"W_s_mm", b.W_s}, {"L_p_mm", b.L_p}, {"W_p_mm", b.W_p},
                  {"L_1_mm", b.L_1}, {"substrate_h_mm", b.substrate_h}, {"eps_eff", b.eps_eff}};
    json fixed = json::array();
    for (const auto& f : c.grid.fixed)
        fixed.push_back({{"triangle", f.triangle}, {"on", f.on}});
    j["grid"] = {{"rows", c.grid.rows}, {"cols", c.grid.cols}, {"cell_size_mm", c.grid.cell_size},
                 {"diagonals", to_string(c.grid.diagonals)}, {"frame_width", c.grid.frame_width},
                 {"feed_col", c.grid.feed_col}, {"fixed", fixed}};
    const auto& d = c.rectifier.diode;
    j["rectifier"] = {
        {"profile", c.rectifier_profile},
        {"diode", {{"I_s", d.I_s}, {"n", d.n}, {"R_s", d.R_s}, {"C_j0", d.C_j0}, {"V_j", d.V_j},
                   {"m", d.m}, {"temperature", d.temperature}, {"fc", d.fc}}},
        {"C_in", c.rectifier.C_in}, {"C_out", c.rectifier.C_out}, {"L_p", c.rectifier.L_p},
        {"C_p", c.rectifier.C_p}, {"R_load", c.rectifier.R_load},
        {"steps_per_period", c.steady.steps_per_period}, {"start_phase", c.steady.start_phase},
        {"warmup_periods", c.steady.warmup_periods},
        {"max_shooting_iterations", c.steady.max_shooting_iterations},
        {"max_periods", c.steady.max_periods}, {"rel_tol", c.steady.rel_tol},
        {"max_step_halvings", c.steady.max_step_halvings}};
    const auto& p = c.bpso;
    j["bpso"] = {{"population", p.population}, {"iterations", p.iterations}, {"w_start", p.w_start},
                 {"w_end", p.w_end}, {"c1", p.c1}, {"c2", p.c2}, {"v_max", p.v_max},
                 {"transfer", to_string(p.transfer)}, {"init_density", p.init_density},
                 {"penalty_disconnected", p.penalty_disconnected}, {"seed", p.seed}};
    j["cost"] = {{"f_r_hz", c.cost.f_r}, {"db_floor", c.cost.db_floor},
                 {"fixed_zref", c.fixed_zref ? json{c.fixed_zref->real(), c.fixed_zref->imag()} : json()}};
    if (c.link) {
        const auto& l = *c.link;
        j["link"] = {{"distance_m", l.distance}, {"g_tx_dbi", l.g_tx}, {"g_rx_dbi", l.g_rx},
                     {"f_hz", l.f}, {"max_dimension_m", l.max_dimension}};
    } else {
        j["link"] = nullptr;
    }
    const auto& s = c.sweeps;
    j["sweeps"] = {{"f_start_hz", s.f_start}, {"f_stop_hz", s.f_stop}, {"f_points", s.f_points},
                   {"p_start_dbm", s.p_start}, {"p_stop_dbm", s.p_stop}, {"p_step_db", s.p_step},
                   {"design_power_dbm", s.design_power}, {"pattern_step_deg", s.pattern_step}};
    j["mesh"] = {{"radius_factor", c.mesh.radius_factor}, {"segment_budget", c.mesh.segment_budget},
                 {"allow_disconnected", c.mesh.allow_disconnected}};
    j["solver"] = {{"quadrature_order", c.solver.quadrature_order},
                   {"warn_condition", c.solver.warn_condition},
                   {"max_condition", c.solver.max_condition}, {"parallel", c.solver.parallel}};
    j["efficiency"] = {{"denominator", c.efficiency_basis == EfficiencyBasis::Delivered ? "delivered" : "available"}};
    return j;
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    {
        Reader r(j, "config");
        if (const json* b = r.child("board"))
            read_board(*b, cfg.board);
        if (const json* g = r.child("grid"))
            read_grid(*g, cfg.grid);
        if (const json* x = r.child("rectifier"))
            read_rectifier(*x, cfg);
        if (const json* x = r.child("bpso"))
            read_bpso(*x, cfg.bpso);
        if (const json* x = r.child("cost"))
            read_cost(*x, cfg);
        if (const json* x = r.child("link"))
            read_link(*x, cfg);
        if (const json* x = r.child("sweeps"))
            read_sweeps(*x, cfg.sweeps);
        if (const json* x = r.child("mesh"))
            read_mesh(*x, cfg.mesh);
        if (const json* x = r.child("solver"))
            read_solver(*x, cfg.solver);
        if (const json* x = r.child("efficiency")) {
            Reader er(*x, "efficiency");
            std::string d = "delivered";
            er.get("denominator", d);
            if (d == "delivered")
                cfg.efficiency_basis = EfficiencyBasis::Delivered;
            else if (d == "available")
                cfg.efficiency_basis = EfficiencyBasis::Available;
            else
                throw ConfigError("efficiency.denominator: expected delivered or available");
        }
        r.get("output_dir", cfg.output_dir);
        r.get("threads", cfg.threads);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const RunConfig& cfg, int indent)
{
    json j = semantic_json(cfg);
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    return j.dump(indent);
}

std::string config_hash(const RunConfig& cfg)
{
    const std::string text = semantic_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pixrect
