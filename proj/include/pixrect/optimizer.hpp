// SPDX-License-Identifier: Apache-2.0
//
// Binary particle swarm optimizer with S- and V-shaped transfer functions.
#pragma once

#include "pixrect/geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace pixrect {

enum class Transfer { S1, S2, S3, S4, V1, V2, V3, V4 };

/// Bit probability for velocity v. S-shaped: probability of setting the bit
/// to 1. V-shaped: probability of flipping it.
double transfer(double v, Transfer kind);
bool is_v_shaped(Transfer kind);
Transfer parse_transfer(const std::string& name);
std::string to_string(Transfer kind);

struct BpsoConfig {
    std::size_t population = 30;
    std::size_t iterations = 60;
    double w_start = 0.9;
    double w_end = 0.4;
    double c1 = 2.0;
    double c2 = 2.0;
    double v_max = 6.0;
    Transfer transfer = Transfer::V2;
    double init_density = 0.5;
    double penalty_disconnected = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
    /// Linear decrease from w_start (first iteration) to w_end (last).
    double inertia(std::size_t iteration) const;
};

/// Smaller is better. Implementations must be deterministic and safe to call
/// from several threads at once.
class FitnessEvaluator {
public:
    virtual ~FitnessEvaluator() = default;
    virtual double evaluate(const BitVector& bits) const = 0;
};

class FunctionEvaluator final : public FitnessEvaluator {
public:
    explicit FunctionEvaluator(std::function<double(const BitVector&)> fn) : fn_(std::move(fn)) {}
    double evaluate(const BitVector& bits) const override { return fn_(bits); }

private:
    std::function<double(const BitVector&)> fn_;
};

struct ConvergenceRow {
    std::size_t iteration = 0;
    double gbest_cost = 0.0;
    double mean_cost = 0.0; // over particles with finite cost

    bool operator==(const ConvergenceRow&) const = default;
};

struct EvaluationFailure {
    std::size_t iteration = 0;
    std::size_t particle = 0;
    std::string message;

    bool operator==(const EvaluationFailure&) const = default;
};

inline constexpr double kUnsetCost = std::numeric_limits<double>::infinity();

/// All random draws come from substreams keyed by (seed, iteration, particle),
/// so `seed` and `iteration` are the complete generator state.
struct SwarmState {
    std::size_t genome_len = 0;
    std::size_t iteration = 0;
    std::uint64_t seed = 0;
    std::vector<BitVector> positions;
    std::vector<std::vector<double>> velocities;
    std::vector<BitVector> pbest;
    std::vector<double> pbest_cost;
    BitVector gbest;
    double gbest_cost = kUnsetCost;
    std::vector<ConvergenceRow> log;
    std::vector<EvaluationFailure> failures;

    bool operator==(const SwarmState&) const = default;
};

SwarmState init(const BpsoConfig& config, std::size_t genome_len);

/// Costs for every particle position. Exceptions thrown by the evaluator are
/// turned into +inf and reported through `failures`.
std::vector<double> evaluate_population_reference(const FitnessEvaluator& eval,
                                                  const std::vector<BitVector>& positions,
                                                  std::vector<std::string>& failures);
std::vector<double> evaluate_population_parallel(const FitnessEvaluator& eval,
                                                 const std::vector<BitVector>& positions,
                                                 std::vector<std::string>& failures);

/// One iteration: evaluate, update personal and global bests, log, then move
/// every particle.
SwarmState step(SwarmState state, const BpsoConfig& config, const FitnessEvaluator& eval,
                bool parallel = true);

struct RunOptions {
    bool parallel = true;
    std::size_t stop_after = 0;      // > 0: return early once this many iterations are done
    std::string checkpoint_path;     // written after every `checkpoint_every` iterations
    std::size_t checkpoint_every = 0;
};

struct RunResult {
    BitVector best;
    double best_cost = kUnsetCost;
    std::vector<ConvergenceRow> log;
    SwarmState state;
};

RunResult run(const BpsoConfig& config, const FitnessEvaluator& eval, std::size_t genome_len,
              const RunOptions& options = {});
RunResult resume(SwarmState state, const BpsoConfig& config, const FitnessEvaluator& eval,
                 const RunOptions& options = {});

/// Text checkpoint, first line "pixrect-bpso-checkpoint 1". Reals are stored
/// as hexadecimal floats so a reload is exact.
void save_checkpoint(std::ostream& os, const SwarmState& state);
SwarmState load_checkpoint(std::istream& is);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& log);

} // namespace pixrect
