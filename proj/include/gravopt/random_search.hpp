#pragma once

#include "evaluator.hpp"
#include "gsa.hpp"

namespace gravopt {

/// Uniform random search baseline. Draws until `budget` distinct (uncached)
/// evaluations were made, or `budget * 20` draws, whichever comes first.
inline RunResult random_search(const SearchSpace& space, const Objective& objective, std::size_t budget,
                               std::uint64_t seed, const RunOptions& options = {}) {
    Rng rng(seed);
    BatchEvaluator evaluator(objective, options.failure, options.parallelism);
    RunResult result;
    bool have_best = false;
    const std::size_t max_draws = budget * 20;
    for (std::size_t draw = 0; draw < max_draws && evaluator.evaluations() < budget; ++draw) {
        const auto pos = sample_uniform(space, rng);
        auto rec = evaluator.evaluate({decode(space, pos)}).front();
        if (rec.cache_hit) ++result.cache_hits;
        if (!have_best || better(objective.sense(), rec.fitness, result.best_fitness)) {
            have_best = true;
            result.best_fitness = rec.fitness;
            result.best_params = rec.params;
            result.best_position = pos;
        }
        result.log.push_back(std::move(rec));
    }
    result.evaluations = evaluator.evaluations();
    result.failures = evaluator.failures();
    return result;
}

}  // namespace gravopt
