// SPDX-License-Identifier: Apache-2.0
//
// Conjugate-match arithmetic, the antenna cost function and the free-space
// link budget.
#pragma once

#include "pixrect/constants.hpp"
#include "pixrect/emsolve.hpp"
#include "pixrect/geometry.hpp"
#include "pixrect/optimizer.hpp"

#include <cstddef>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace pixrect {

/// Power-wave reflection coefficient (z - conj(z_ref)) / (z + z_ref). Zero at
/// the conjugate match, |gamma| <= 1 for any passive z.
cplx gamma(cplx z, cplx z_ref);

/// 20 log10 |g|, clamped below at floor_db.
double to_db(double magnitude, double floor_db = -100.0);

struct CostSpec {
    double f_r = 2.5e9;
    cplx z_ref{0.3, -37.0};
    double db_floor = -100.0;

    void validate() const;
};

struct LinkSpec {
    double distance = 0.3; // m
    double g_tx = 4.5;     // dBi
    double g_rx = 0.0;     // dBi
    double f = 2.5e9;
    double p_tx = 0.0;     // dBm; -inf means the transmitter is off
    double max_dimension = 0.035; // m, largest antenna dimension for the far-field check

    void validate() const;
};

struct LinkResult {
    double p_rx_dbm = 0.0;
    double fspl_db = 0.0;
    bool far_field_ok = true; // distance >= 2 D^2 / lambda
};

double free_space_path_loss_db(double distance_m, double f_hz);
LinkResult friis(const LinkSpec& link);

/// Reflection cost of a pixel layout: decode, mesh, solve at f_r, then
/// |gamma| in dB against z_ref. Solver and mesh-budget failures are rethrown
/// as NumericalError, which the optimizer scores as +inf. Results, failures
/// included, are memoized by exact bitstring; the memo is safe for
/// concurrent use.
class AntennaCost final : public FitnessEvaluator {
public:
    struct Context {
        PixelGrid grid;
        BoardSpec board;
        MeshOptions mesh;
        SolverOptions solver;
        double f_max = 0.0;            // mesh refinement frequency; 0 uses f_r
        double penalty_disconnected = 0.0;
    };

    AntennaCost(Context ctx, CostSpec spec);

    double evaluate(const BitVector& bits) const override;

    /// Feed-point impedance of a layout at f_r, bypassing the memo.
    cplx impedance(const BitVector& bits) const;

    std::size_t memo_hits() const;
    std::size_t memo_size() const;
    const Context& context() const noexcept { return ctx_; }
    const CostSpec& spec() const noexcept { return spec_; }

private:
    double compute(const BitVector& bits) const;

    Context ctx_;
    CostSpec spec_;
    mutable std::shared_mutex mutex_;
    struct MemoEntry {
        double cost = 0.0;
        std::string error;
    };
    mutable std::unordered_map<std::string, MemoEntry> memo_;
    mutable std::size_t hits_ = 0;
};

} // namespace pixrect
