#pragma once

// Gravitational Search Algorithm.
//
// Each particle is a point in the search box. Fitness determines a normalized
// mass; the kbest heaviest particles pull every other particle with a force
// inversely proportional to distance (not distance squared), scaled by a
// gravitational constant that decays over the run. Acceleration is force over
// mass, velocity keeps a random fraction of its previous value, and positions
// are saturated at the box bounds.
//
// Random draw order (fixed, part of the determinism contract):
//   1. initialization: particle i ascending, dimension ascending
//   2. per iteration, forces: attracted i ascending, attractor j ascending, dimension ascending
//   3. per iteration, kinematics: particle i ascending, dimension ascending

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evaluator.hpp"
#include "objectives.hpp"
#include "random.hpp"
#include "search_space.hpp"

namespace gravopt {

class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class GSchedule { linear, power };

inline const char* to_string(GSchedule s) { return s == GSchedule::power ? "power" : "linear"; }

struct GsaConfig {
    std::size_t population = 30;
    std::size_t max_iterations = 15;
    double g0 = 100.0;
    double tau = 1e-10;
    GSchedule g_schedule = GSchedule::linear;
    double beta = 0.5;        // power schedule only
    double t0_gravity = 1.0;  // power schedule only
    std::size_t kbest_final = 1;
    Sense sense = Sense::minimize;
    std::uint64_t seed = 42;

    void validate() const {
        if (population < 1) throw InvalidConfig("population must be >= 1");
        if (max_iterations < 1) throw InvalidConfig("max_iterations must be >= 1");
        if (!(g0 > 0.0) || !std::isfinite(g0)) throw InvalidConfig("g0 must be a positive finite number");
        if (!(tau > 0.0)) throw InvalidConfig("tau must be > 0");
        if (kbest_final < 1 || kbest_final > population)
            throw InvalidConfig("kbest_final must lie in [1, population]");
        if (g_schedule == GSchedule::power) {
            if (!(beta > 0.0 && beta < 1.0)) throw InvalidConfig("power schedule needs 0 < beta < 1");
            if (!(t0_gravity > 0.0)) throw InvalidConfig("power schedule needs t0_gravity > 0");
        }
    }

    bool operator==(const GsaConfig&) const = default;
};

struct Particle {
    Position position;
    Position velocity;
    double fitness = 0.0;
    double mass = 0.0;
};

struct IterationRecord {
    std::size_t t = 0;
    double g = 0.0;
    double best_fitness = 0.0;       // best evaluated so far in the run
    double worst_fitness = 0.0;      // worst of this iteration's swarm
    double iteration_best = 0.0;     // best of this iteration's swarm
    Position best_position;          // position that produced best_fitness
    std::size_t kbest = 0;

    bool operator==(const IterationRecord&) const = default;
};

struct RunResult {
    ParamVector best_params;
    Position best_position;
    double best_fitness = 0.0;
    std::vector<IterationRecord> history;
    std::size_t evaluations = 0;
    std::size_t cache_hits = 0;
    std::size_t failures = 0;
    std::vector<EvalRecord> log;
};

/// Everything except wall-clock durations.
inline bool same_outcome(const RunResult& a, const RunResult& b) {
    if (!(a.best_params == b.best_params && a.best_position == b.best_position &&
          std::bit_cast<std::uint64_t>(a.best_fitness) == std::bit_cast<std::uint64_t>(b.best_fitness) &&
          a.history == b.history && a.evaluations == b.evaluations && a.cache_hits == b.cache_hits &&
          a.failures == b.failures && a.log.size() == b.log.size()))
        return false;
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        const auto& x = a.log[i];
        const auto& y = b.log[i];
        if (!(x.params == y.params) || std::bit_cast<std::uint64_t>(x.fitness) != std::bit_cast<std::uint64_t>(y.fitness) ||
            x.cache_hit != y.cache_hit || x.attempt != y.attempt || x.penalized != y.penalized)
            return false;
    }
    return true;
}

/// Thrown when the failure policy aborts a run; carries everything gathered so far.
class RunAborted : public std::runtime_error {
public:
    RunAborted(const std::string& what, RunResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}

    const RunResult& partial() const { return partial_; }

private:
    RunResult partial_;
};

// ---------------------------------------------------------------------------
// gravitational constant

inline double gravitational_constant_linear(double g0, long long t, long long t_max) {
    if (t_max <= 0) throw InvalidConfig("t_max must be > 0");
    if (t < 0 || t > t_max) throw std::invalid_argument("t must lie in [0, t_max]");
    return g0 * (1.0 - static_cast<double>(t) / static_cast<double>(t_max));
}

inline double gravitational_constant_power(double g_t0, double t0, double t, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidConfig("beta must lie in (0, 1)");
    if (!(t0 > 0.0)) throw InvalidConfig("t0 must be > 0");
    if (t < t0) throw std::invalid_argument("t must be >= t0");
    return g_t0 * std::pow(t0 / t, beta);
}

/// G at iteration t. The power schedule maps iteration t to time t0 + t, so
/// iteration 0 starts at g0.
inline double gravitational_constant(const GsaConfig& cfg, std::size_t t) {
    if (cfg.g_schedule == GSchedule::linear)
        return gravitational_constant_linear(cfg.g0, static_cast<long long>(t),
                                             static_cast<long long>(cfg.max_iterations));
    return gravitational_constant_power(cfg.g0, cfg.t0_gravity, cfg.t0_gravity + static_cast<double>(t), cfg.beta);
}

// ---------------------------------------------------------------------------
// fitness -> mass

struct Extremes {
    double best;
    double worst;
};

inline Extremes best_worst(std::span<const double> fitnesses, Sense sense) {
    if (fitnesses.empty()) throw std::invalid_argument("best_worst: empty fitness list");
    for (double f : fitnesses)
        if (!std::isfinite(f)) throw EvaluationError(FailureKind::non_finite, "non-finite fitness in swarm");
    const auto [lo, hi] = std::minmax_element(fitnesses.begin(), fitnesses.end());
    return sense == Sense::minimize ? Extremes{*lo, *hi} : Extremes{*hi, *lo};
}

/// Normalized masses: best particle heaviest, worst particle zero, sum 1.
/// All-equal fitness gives the uniform 1/N.
inline std::vector<double> compute_masses(std::span<const double> fitnesses, Sense sense) {
    const auto [best, worst] = best_worst(fitnesses, sense);
    const std::size_t n = fitnesses.size();
    std::vector<double> m(n, 1.0 / static_cast<double>(n));
    if (best == worst) return m;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = (fitnesses[i] - worst) / (best - worst);
        sum += m[i];
    }
    for (double& v : m) v /= sum;
    return m;
}

/// Linear decay from `population` at t=0 to `kbest_final` at t=t_max.
inline std::size_t kbest_size(std::size_t t, std::size_t t_max, std::size_t population, std::size_t kbest_final) {
    if (t_max == 0) return kbest_final;
    const double frac = static_cast<double>(std::min(t, t_max)) / static_cast<double>(t_max);
    const double v = static_cast<double>(population) - static_cast<double>(population - std::min(kbest_final, population)) * frac;
    const auto k = static_cast<std::size_t>(std::llround(v));
    return std::clamp(k, std::min(kbest_final, population), population);
}

// ---------------------------------------------------------------------------
// forces and motion

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

/// Force that particle j exerts on particle i, per dimension.
inline std::vector<double> pairwise_force(double g, double mass_passive_i, double mass_active_j,
                                          std::span<const double> pos_i, std::span<const double> pos_j,
                                          double tau) {
    if (pos_i.size() != pos_j.size()) throw DimensionError("pairwise_force: position lengths differ");
    const double scale = g * (mass_passive_i * mass_active_j) / (euclidean_distance(pos_i, pos_j) + tau);
    std::vector<double> f(pos_i.size());
    for (std::size_t d = 0; d < f.size(); ++d) f[d] = scale * (pos_j[d] - pos_i[d]);
    return f;
}

/// Membership mask of the k heaviest particles (ties go to the lower index).
inline std::vector<bool> kbest_members(std::span<const Particle> swarm, std::size_t k) {
    std::vector<std::size_t> order(swarm.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return swarm[a].mass > swarm[b].mass; });
    std::vector<bool> member(swarm.size(), false);
    for (std::size_t r = 0; r < std::min(k, swarm.size()); ++r) member[order[r]] = true;
    return member;
}

template <UnitSource R>
std::vector<Position> total_force(std::span<const Particle> swarm, double g, std::size_t kbest, double tau, R& rng) {
    const std::size_t dim = swarm.empty() ? 0 : swarm.front().position.size();
    std::vector<Position> forces(swarm.size(), Position(dim, 0.0));
    const auto member = kbest_members(swarm, kbest);
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        for (std::size_t j = 0; j < swarm.size(); ++j) {
            if (j == i || !member[j]) continue;
            const auto f = pairwise_force(g, swarm[i].mass, swarm[j].mass, swarm[i].position, swarm[j].position, tau);
            for (std::size_t d = 0; d < dim; ++d) forces[i][d] += static_cast<double>(rng()) * f[d];
        }
    }
    return forces;
}

/// a = F / M (M + tau for massless particles), u <- rand * u + a, p <- clamp(p + u).
template <UnitSource R>
void step_kinematics(std::span<Particle> swarm, const std::vector<Position>& forces, R& rng,
                     const SearchSpace& space, double tau) {
    if (forces.size() != swarm.size()) throw DimensionError("step_kinematics: one force vector per particle required");
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        auto& p = swarm[i];
        const double inertia = p.mass > 0.0 ? p.mass : p.mass + tau;
        for (std::size_t d = 0; d < p.position.size(); ++d) {
            const double a = forces[i][d] / inertia;
            p.velocity[d] = static_cast<double>(rng()) * p.velocity[d] + a;
            p.position[d] += p.velocity[d];
        }
        p.position = clamp(space, p.position);
    }
}

/// One update of a swarm whose fitness values are already set:
/// masses, kbest forces, then kinematics.
template <UnitSource R>
void advance_swarm(std::span<Particle> swarm, Sense sense, double g, std::size_t kbest, double tau, R& rng,
                   const SearchSpace& space) {
    std::vector<double> fit(swarm.size());
    for (std::size_t i = 0; i < swarm.size(); ++i) fit[i] = swarm[i].fitness;
    const auto masses = compute_masses(fit, sense);
    for (std::size_t i = 0; i < swarm.size(); ++i) swarm[i].mass = masses[i];
    const auto forces = total_force(std::span<const Particle>(swarm), g, kbest, tau, rng);
    step_kinematics(swarm, forces, rng, space, tau);
}

// ---------------------------------------------------------------------------
// the optimizer loop

struct RunOptions {
    unsigned parallelism = 1;
    FailurePolicy failure{};
    // called after each iteration's update with that iteration's record and the moved swarm
    std::function<void(const IterationRecord&, std::span<const Particle>)> observer;
};

inline RunResult run(const SearchSpace& space, const Objective& objective, const GsaConfig& config,
                     const RunOptions& options = {}) {
    config.validate();
    if (objective.sense() != config.sense)
        throw InvalidConfig(std::string("objective '") + objective.name() + "' is " + to_string(objective.sense()) +
                            " but the run is configured to " + to_string(config.sense));

    Rng rng(config.seed);
    std::vector<Particle> swarm(config.population);
    for (auto& p : swarm) {
        p.position = sample_uniform(space, rng);
        p.velocity.assign(space.size(), 0.0);
    }

    BatchEvaluator evaluator(objective, options.failure, options.parallelism);
    RunResult result;
    bool have_best = false;

    for (std::size_t t = 0; t < config.max_iterations; ++t) {
        std::vector<ParamVector> batch;
        batch.reserve(swarm.size());
        for (const auto& p : swarm) batch.push_back(decode(space, p.position));

        std::vector<EvalRecord> records;
        try {
            records = evaluator.evaluate(batch);
        } catch (const StrictFailure& e) {
            result.evaluations = evaluator.evaluations();
            result.log.push_back(e.record());
            throw RunAborted(std::string("evaluation failed at iteration ") + std::to_string(t) + ": " + e.what(),
                             std::move(result));
        }

        std::vector<double> fitness(swarm.size());
        for (std::size_t i = 0; i < swarm.size(); ++i) {
            fitness[i] = records[i].fitness;
            swarm[i].fitness = fitness[i];
            if (records[i].cache_hit) ++result.cache_hits;
            if (!have_best || better(config.sense, fitness[i], result.best_fitness)) {
                have_best = true;
                result.best_fitness = fitness[i];
                result.best_params = records[i].params;
                result.best_position = swarm[i].position;
            }
        }
        result.log.insert(result.log.end(), std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));

        const auto [iter_best, iter_worst] = best_worst(fitness, config.sense);
        IterationRecord rec;
        rec.t = t;
        rec.g = gravitational_constant(config, t);
        rec.best_fitness = result.best_fitness;
        rec.worst_fitness = iter_worst;
        rec.iteration_best = iter_best;
        rec.best_position = result.best_position;
        rec.kbest = kbest_size(t, config.max_iterations, config.population, config.kbest_final);

        advance_swarm(std::span<Particle>(swarm), config.sense, rec.g, rec.kbest, config.tau, rng, space);
        result.history.push_back(rec);
        if (options.observer) options.observer(result.history.back(), swarm);
    }

    result.evaluations = evaluator.evaluations();
    result.failures = evaluator.failures();
    return result;
}

}  // namespace gravopt
