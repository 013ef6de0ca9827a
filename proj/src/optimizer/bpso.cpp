// SPDX-License-Identifier: Apache-2.0

#include "pixrect/optimizer.hpp"

#include "pixrect/constants.hpp"
#include "pixrect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace pixrect {

double transfer(double v, Transfer kind)
{
    switch (kind) {
    case Transfer::S1: return 1.0 / (1.0 + std::exp(-2.0 * v));
    case Transfer::S2: return 1.0 / (1.0 + std::exp(-v));
    case Transfer::S3: return 1.0 / (1.0 + std::exp(-v / 2.0));
    case Transfer::S4: return 1.0 / (1.0 + std::exp(-v / 3.0));
    case Transfer::V1: return std::abs(std::erf(std::sqrt(kPi) / 2.0 * v));
    case Transfer::V2: return std::abs(std::tanh(v));
    case Transfer::V3: return std::abs(v / std::sqrt(1.0 + v * v));
    case Transfer::V4: return std::abs(2.0 / kPi * std::atan(kPi / 2.0 * v));
    }
    return 0.0;
}

bool is_v_shaped(Transfer kind)
{
    return kind == Transfer::V1 || kind == Transfer::V2 || kind == Transfer::V3 || kind == Transfer::V4;
}

Transfer parse_transfer(const std::string& name)
{
    static const std::pair<const char*, Transfer> table[] = {
        {"S1", Transfer::S1}, {"S2", Transfer::S2}, {"S3", Transfer::S3}, {"S4", Transfer::S4},
        {"V1", Transfer::V1}, {"V2", Transfer::V2}, {"V3", Transfer::V3}, {"V4", Transfer::V4},
    };
    for (const auto& [n, t] : table) {
        if (name == n)
            return t;
    }
    throw ConfigError("unknown transfer function '" + name + "'");
}

std::string to_string(Transfer kind)
{
    static const char* names[] = {"S1", "S2", "S3", "S4", "V1", "V2", "V3", "V4"};
    return names[static_cast<int>(kind)];
}

void BpsoConfig::validate() const
{
    if (population < 2)
        throw ConfigError("population must be >= 2");
    if (iterations < 1)
        throw ConfigError("iterations must be >= 1");
    if (!(v_max > 0.0))
        throw ConfigError("v_max must be positive");
    if (!(init_density >= 0.0 && init_density <= 1.0))
        throw ConfigError("init_density must lie in [0, 1]");
    if (!(penalty_disconnected >= 0.0))
        throw ConfigError("penalty_disconnected must be >= 0");
}

double BpsoConfig::inertia(std::size_t iteration) const
{
    if (iterations <= 1)
        return w_start;
    const double t = static_cast<double>(std::min(iteration, iterations - 1)) /
                     static_cast<double>(iterations - 1);
    return w_start + (w_end - w_start) * t;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t particle)
        : engine_(splitmix64(splitmix64(splitmix64(seed) ^ iteration) ^ (particle * 0xd1b54a32d192ed03ULL)))
    {
    }

    /// Uniform on [0, 1) from the top 53 bits, identical on every platform.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

} // namespace

SwarmState init(const BpsoConfig& config, std::size_t genome_len)
{
    config.validate();
    if (genome_len < 1)
        throw ConfigError("genome length must be >= 1");
    SwarmState s;
    s.genome_len = genome_len;
    s.seed = config.seed;
    s.positions.resize(config.population);
    s.velocities.assign(config.population, std::vector<double>(genome_len, 0.0));
    s.pbest.assign(config.population, BitVector(genome_len, 0));
    s.pbest_cost.assign(config.population, kUnsetCost);
    s.gbest.assign(genome_len, 0);
    for (std::size_t p = 0; p < config.population; ++p) {
        Substream rng(config.seed, 0, p);
        auto& x = s.positions[p];
        x.resize(genome_len);
        for (auto& bit : x)
            bit = rng.uniform() < config.init_density ? 1 : 0;
    }
    return s;
}

namespace {

double checked_evaluate(const FitnessEvaluator& eval, const BitVector& bits, std::string& failure)
{
    try {
        const double c = eval.evaluate(bits);
        if (std::isnan(c)) {
            failure = "evaluator returned NaN";
            return kUnsetCost;
        }
        return c;
    } catch (const std::exception& e) {
        failure = e.what();
    } catch (...) {
        failure = "unknown evaluator failure";
    }
    return kUnsetCost;
}

} // namespace

std::vector<double> evaluate_population_reference(const FitnessEvaluator& eval,
                                                  const std::vector<BitVector>& positions,
                                                  std::vector<std::string>& failures)
{
    std::vector<double> cost(positions.size());
    failures.assign(positions.size(), {});
    for (std::size_t p = 0; p < positions.size(); ++p)
        cost[p] = checked_evaluate(eval, positions[p], failures[p]);
    return cost;
}

std::vector<double> evaluate_population_parallel(const FitnessEvaluator& eval,
                                                 const std::vector<BitVector>& positions,
                                                 std::vector<std::string>& failures)
{
    std::vector<double> cost(positions.size());
    failures.assign(positions.size(), {});
    const auto n = static_cast<long long>(positions.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long long p = 0; p < n; ++p) {
        const auto i = static_cast<std::size_t>(p);
        cost[i] = checked_evaluate(eval, positions[i], failures[i]);
    }
    return cost;
}

SwarmState step(SwarmState s, const BpsoConfig& config, const FitnessEvaluator& eval, bool parallel)
{
    if (s.positions.size() != config.population)
        throw ConfigError("swarm state population does not match the configuration");
    const std::size_t n = s.positions.size();

    std::vector<std::string> failures;
    const auto cost = parallel ? evaluate_population_parallel(eval, s.positions, failures)
                               : evaluate_population_reference(eval, s.positions, failures);

    double sum = 0.0;
    std::size_t finite = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (!failures[p].empty())
            s.failures.push_back({s.iteration + 1, p, failures[p]});
        if (std::isfinite(cost[p])) {
            sum += cost[p];
            ++finite;
        }
        if (cost[p] < s.pbest_cost[p]) {
            s.pbest_cost[p] = cost[p];
            s.pbest[p] = s.positions[p];
        }
        // Strict comparison keeps the first-encountered best on ties.
        if (cost[p] < s.gbest_cost) {
            s.gbest_cost = cost[p];
            s.gbest = s.positions[p];
        }
    }
    // Before any finite evaluation, gbest still points at a real particle.
    if (!std::isfinite(s.gbest_cost) && s.iteration == 0)
        s.gbest = s.positions[0];
    s.log.push_back({s.iteration + 1, s.gbest_cost,
                     finite > 0 ? sum / static_cast<double>(finite) : std::nan("")});

    const double w = config.inertia(s.iteration);
    const bool v_shaped = is_v_shaped(config.transfer);
    for (std::size_t p = 0; p < n; ++p) {
        Substream rng(s.seed, s.iteration + 1, p);
        auto& x = s.positions[p];
        auto& v = s.velocities[p];
        const auto& pb = std::isfinite(s.pbest_cost[p]) ? s.pbest[p] : x;
        for (std::size_t d = 0; d < s.genome_len; ++d) {
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            const double u = rng.uniform();
            double vel = w * v[d] + config.c1 * r1 * (static_cast<double>(pb[d]) - x[d]) +
                         config.c2 * r2 * (static_cast<double>(s.gbest[d]) - x[d]);
            vel = std::clamp(vel, -config.v_max, config.v_max);
            v[d] = vel;
            const double prob = transfer(vel, config.transfer);
            if (v_shaped) {
                if (u < prob)
                    x[d] = x[d] ? 0 : 1;
            } else {
                x[d] = u < prob ? 1 : 0;
            }
        }
    }
    ++s.iteration;
    return s;
}

namespace {

RunResult finish(SwarmState s)
{
    RunResult r;
    r.best = s.gbest;
    r.best_cost = s.gbest_cost;
    r.log = s.log;
    r.state = std::move(s);
    return r;
}

} // namespace

RunResult resume(SwarmState s, const BpsoConfig& config, const FitnessEvaluator& eval,
                 const RunOptions& options)
{
    config.validate();
    while (s.iteration < config.iterations) {
        s = step(std::move(s), config, eval, options.parallel);
        if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
            s.iteration % options.checkpoint_every == 0) {
            std::ofstream os(options.checkpoint_path, std::ios::binary | std::ios::trunc);
            save_checkpoint(os, s);
        }
        if (options.stop_after > 0 && s.iteration >= options.stop_after)
            break;
    }
    return finish(std::move(s));
}

RunResult run(const BpsoConfig& config, const FitnessEvaluator& eval, std::size_t genome_len,
              const RunOptions& options)
{
    return resume(init(config, genome_len), config, eval, options);
}

namespace {

std::string bits_to_string(const BitVector& b)
{
    std::string s(b.size(), '0');
    for (std::size_t i = 0; i < b.size(); ++i)
        s[i] = b[i] ? '1' : '0';
    return s;
}

BitVector string_to_bits(const std::string& s, std::size_t expected)
{
    if (s.size() != expected)
        throw ConfigError("checkpoint: bit string has the wrong length");
    BitVector b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1')
            throw ConfigError("checkpoint: malformed bit string");
        b[i] = s[i] == '1' ? 1 : 0;
    }
    return b;
}

std::string hex(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhex(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("checkpoint: malformed number '" + s + "'");
    return v;
}

void expect(std::istream& is, const std::string& word)
{
    std::string w;
    if (!(is >> w) || w != word)
        throw ConfigError("checkpoint: expected '" + word + "'");
}

template <typename T>
T read_value(std::istream& is, const std::string& key)
{
    expect(is, key);
    T v{};
    if (!(is >> v))
        throw ConfigError("checkpoint: bad value for '" + key + "'");
    return v;
}

} // namespace

void save_checkpoint(std::ostream& os, const SwarmState& s)
{
    os << "pixrect-bpso-checkpoint 1\n";
    os << "genome_len " << s.genome_len << '\n';
    os << "population " << s.positions.size() << '\n';
    os << "iteration " << s.iteration << '\n';
    os << "seed " << s.seed << '\n';
    os << "gbest " << bits_to_string(s.gbest) << ' ' << hex(s.gbest_cost) << '\n';
    for (std::size_t p = 0; p < s.positions.size(); ++p) {
        os << "particle " << p << '\n';
        os << "position " << bits_to_string(s.positions[p]) << '\n';
        os << "velocity";
        for (double v : s.velocities[p])
            os << ' ' << hex(v);
        os << '\n';
        os << "pbest " << bits_to_string(s.pbest[p]) << ' ' << hex(s.pbest_cost[p]) << '\n';
    }
    os << "log " << s.log.size() << '\n';
    for (const auto& r : s.log)
        os << r.iteration << ' ' << hex(r.gbest_cost) << ' ' << hex(r.mean_cost) << '\n';
    os << "failures " << s.failures.size() << '\n';
    for (const auto& f : s.failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << f.iteration << ' ' << f.particle << ' ' << msg << '\n';
    }
}

SwarmState load_checkpoint(std::istream& is)
{
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "pixrect-bpso-checkpoint")
        throw ConfigError("not a BPSO checkpoint");
    if (version != 1)
        throw ConfigError("unsupported checkpoint version " + std::to_string(version));

    SwarmState s;
    s.genome_len = read_value<std::size_t>(is, "genome_len");
    const auto population = read_value<std::size_t>(is, "population");
    s.iteration = read_value<std::size_t>(is, "iteration");
    s.seed = read_value<std::uint64_t>(is, "seed");
    std::string bits, num;
    expect(is, "gbest");
    is >> bits >> num;
    s.gbest = string_to_bits(bits, s.genome_len);
    s.gbest_cost = unhex(num);
    for (std::size_t p = 0; p < population; ++p) {
        if (read_value<std::size_t>(is, "particle") != p)
            throw ConfigError("checkpoint: particles out of order");
        expect(is, "position");
        is >> bits;
        s.positions.push_back(string_to_bits(bits, s.genome_len));
        expect(is, "velocity");
        std::vector<double> v(s.genome_len);
        for (auto& x : v) {
            is >> num;
            x = unhex(num);
        }
        s.velocities.push_back(std::move(v));
        expect(is, "pbest");
        is >> bits >> num;
        s.pbest.push_back(string_to_bits(bits, s.genome_len));
        s.pbest_cost.push_back(unhex(num));
    }
    const auto rows = read_value<std::size_t>(is, "log");
    for (std::size_t i = 0; i < rows; ++i) {
        ConvergenceRow r;
        std::string g, m;
        is >> r.iteration >> g >> m;
        r.gbest_cost = unhex(g);
        r.mean_cost = unhex(m);
        s.log.push_back(r);
    }
    const auto nf = read_value<std::size_t>(is, "failures");
    for (std::size_t i = 0; i < nf; ++i) {
        EvaluationFailure f;
        is >> f.iteration >> f.particle;
        std::getline(is, f.message);
        if (!f.message.empty() && f.message.front() == ' ')
            f.message.erase(0, 1);
        s.failures.push_back(std::move(f));
    }
    if (!is)
        throw ConfigError("checkpoint: truncated file");
    return s;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& log)
{
    os << "iteration,gbest_cost,mean_cost\n";
    char buf[128];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", r.iteration, r.gbest_cost, r.mean_cost);
        os << buf;
    }
}

} // namespace pixrect
