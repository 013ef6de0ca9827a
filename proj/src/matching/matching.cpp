// SPDX-License-Identifier: Apache-2.0

#include "pixrect/matching.hpp"

#include "pixrect/errors.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace pixrect {

cplx gamma(cplx z, cplx z_ref)
{
    if (!(z_ref.real() > 0.0))
        throw ConfigError("reference impedance must have a positive real part");
    const cplx den = z + z_ref;
    if (std::abs(den) <= 1e-300 || !std::isfinite(std::abs(den)))
        throw NumericalError("reflection coefficient denominator z + z_ref vanishes");
    return (z - std::conj(z_ref)) / den;
}

double to_db(double magnitude, double floor_db)
{
    if (!(magnitude > 0.0))
        return floor_db;
    return std::max(20.0 * std::log10(magnitude), floor_db);
}

void CostSpec::validate() const
{
    if (!(f_r > 0.0))
        throw ConfigError("cost: f_r must be positive");
    if (!(z_ref.real() > 0.0))
        throw ConfigError("cost: z_ref must have a positive real part");
}

void LinkSpec::validate() const
{
    if (!(distance > 0.0))
        throw ConfigError("link: distance must be positive");
    if (!(f > 0.0))
        throw ConfigError("link: frequency must be positive");
}

double free_space_path_loss_db(double distance_m, double f_hz)
{
    return 20.0 * std::log10(4.0 * kPi * distance_m / wavelength(f_hz));
}

LinkResult friis(const LinkSpec& link)
{
    link.validate();
    LinkResult r;
    r.fspl_db = free_space_path_loss_db(link.distance, link.f);
    r.p_rx_dbm = link.p_tx + link.g_tx + link.g_rx - r.fspl_db;
    r.far_field_ok = link.distance >= 2.0 * link.max_dimension * link.max_dimension / wavelength(link.f);
    return r;
}

AntennaCost::AntennaCost(Context ctx, CostSpec spec) : ctx_(std::move(ctx)), spec_(spec)
{
    spec_.validate();
    ctx_.board.validate();
    if (!(ctx_.penalty_disconnected >= 0.0))
        throw ConfigError("penalty_disconnected must be >= 0");
}

namespace {

std::string memo_key(const BitVector& bits)
{
    std::string k(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        k[i] = bits[i] ? '1' : '0';
    return k;
}

} // namespace

cplx AntennaCost::impedance(const BitVector& bits) const
{
    const auto layout = decode_layout(ctx_.grid, bits);
    MeshOptions mo = ctx_.mesh;
    mo.allow_disconnected = true;
    const double f_max = ctx_.f_max > 0.0 ? ctx_.f_max : spec_.f_r;
    SolveRequest req{mesh(layout, ctx_.board, f_max, mo), {spec_.f_r}, ctx_.board.eps_eff};
    SolverOptions so = ctx_.solver;
    return solve(req, so).front().value;
}

double AntennaCost::compute(const BitVector& bits) const
{
    const cplx z = impedance(bits);
    double c = to_db(std::abs(gamma(z, spec_.z_ref)), spec_.db_floor);
    if (ctx_.penalty_disconnected > 0.0 &&
        !connectivity(decode_layout(ctx_.grid, bits)).feed_connected)
        c += ctx_.penalty_disconnected;
    return c;
}

double AntennaCost::evaluate(const BitVector& bits) const
{
    const auto key = memo_key(bits);
    std::optional<MemoEntry> hit;
    {
        std::shared_lock lock(mutex_);
        if (auto it = memo_.find(key); it != memo_.end())
            hit = it->second;
    }
    if (hit) {
        {
            std::unique_lock lock(mutex_);
            ++hits_;
        }
        if (!hit->error.empty())
            throw NumericalError(hit->error);
        return hit->cost;
    }

    MemoEntry entry;
    try {
        entry.cost = compute(bits);
    } catch (const NumericalError& e) {
        entry.error = e.what();
    } catch (const ResourceError& e) {
        entry.error = e.what();
    }
    {
        std::unique_lock lock(mutex_);
        memo_.emplace(key, entry);
    }
    if (!entry.error.empty())
        throw NumericalError(entry.error);
    return entry.cost;
}

std::size_t AntennaCost::memo_hits() const
{
    std::shared_lock lock(mutex_);
    return hits_;
}

std::size_t AntennaCost::memo_size() const
{
    std::shared_lock lock(mutex_);
    return memo_.size();
}

} // namespace pixrect
