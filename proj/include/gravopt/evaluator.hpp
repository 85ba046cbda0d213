#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "objectives.hpp"

namespace gravopt {

/// What to do when an objective call fails: retry, then either abort (strict)
/// or assign a penalty fitness worse than anything observed.
struct FailurePolicy {
    int retries = 1;
    bool strict = false;
    double penalty_margin = 1.0;
    double penalty_default = 1e6;
};

/// Raised when a strict policy gives up on an evaluation.
class StrictFailure : public EvaluationError {
public:
    StrictFailure(FailureKind kind, const std::string& what, EvalRecord record)
        : EvaluationError(kind, what), record_(std::move(record)) {}

    const EvalRecord& record() const { return record_; }

private:
    EvalRecord record_;
};

/// Evaluates batches of decoded parameter vectors against an objective.
///
/// Cache lookups, in-batch de-duplication and penalty assignment all happen on
/// the calling thread in index order; only the objective calls themselves are
/// spread across worker threads. The outcome of a batch therefore does not
/// depend on the parallelism.
class BatchEvaluator {
public:
    BatchEvaluator(const Objective& objective, FailurePolicy policy = {}, unsigned parallelism = 1)
        : objective_(objective), policy_(policy), parallelism_(std::max(1u, parallelism)) {
        if (policy_.retries < 0) throw std::invalid_argument("retries must be >= 0");
    }

    std::vector<EvalRecord> evaluate(const std::vector<ParamVector>& batch) {
        std::vector<EvalRecord> out(batch.size());
        std::vector<std::size_t> jobs;
        std::vector<std::optional<std::size_t>> alias(batch.size());
        std::map<std::vector<std::uint64_t>, std::size_t> first_in_batch;

        for (std::size_t i = 0; i < batch.size(); ++i) {
            out[i].params = batch[i];
            if (auto hit = cache_.find(batch[i])) {
                out[i].fitness = *hit;
                out[i].cache_hit = true;
                continue;
            }
            auto [it, inserted] = first_in_batch.try_emplace(batch[i].key(), i);
            if (inserted)
                jobs.push_back(i);
            else
                alias[i] = it->second;
        }

        std::vector<Outcome> outcomes(jobs.size());
        run_jobs(batch, jobs, outcomes);
        evaluations_ += jobs.size();

        for (std::size_t k = 0; k < jobs.size(); ++k) {
            auto& rec = out[jobs[k]];
            const auto& o = outcomes[k];
            rec.duration = o.duration;
            rec.attempt = o.attempts;
            if (o.ok) {
                rec.fitness = cache_.insert(rec.params, o.fitness);
                note_observed(o.fitness);
            } else {
                rec.error = o.error;
            }
        }
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            const auto& o = outcomes[k];
            if (o.ok) continue;
            auto& rec = out[jobs[k]];
            if (policy_.strict) throw StrictFailure(o.kind, o.error, rec);
            rec.fitness = penalty();
            rec.penalized = true;
            ++failures_;
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!alias[i]) continue;
            const auto& src = out[*alias[i]];
            out[i].fitness = src.fitness;
            out[i].penalized = src.penalized;
            out[i].cache_hit = true;
        }
        return out;
    }

    /// Fitness assigned to a failed evaluation: worst observed plus margin,
    /// or the configured default when nothing finite was observed yet.
    double penalty() const {
        const double sign = objective_.sense() == Sense::minimize ? 1.0 : -1.0;
        if (!worst_observed_) return sign * policy_.penalty_default;
        return *worst_observed_ + sign * policy_.penalty_margin;
    }

    std::size_t evaluations() const { return evaluations_; }
    std::size_t failures() const { return failures_; }
    const FitnessCache& cache() const { return cache_; }

private:
    struct Outcome {
        bool ok = false;
        double fitness = 0.0;
        int attempts = 0;
        double duration = 0.0;
        FailureKind kind = FailureKind::worker_error;
        std::string error;
    };

    Outcome call(const ParamVector& params) const {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        for (int attempt = 1; attempt <= policy_.retries + 1; ++attempt) {
            o.attempts = attempt;
            try {
                const double f = objective_.evaluate(params);
                if (!std::isfinite(f)) throw EvaluationError(FailureKind::non_finite, "objective returned a non-finite fitness");
                o.ok = true;
                o.fitness = f;
                break;
            } catch (const EvaluationError& e) {
                o.kind = e.kind();
                o.error = e.what();
            } catch (const std::exception& e) {
                o.kind = FailureKind::worker_error;
                o.error = e.what();
            }
        }
        o.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return o;
    }

    void run_jobs(const std::vector<ParamVector>& batch, const std::vector<std::size_t>& jobs,
                  std::vector<Outcome>& outcomes) const {
        const std::size_t workers = std::min<std::size_t>(parallelism_, jobs.size());
        if (workers <= 1) {
            for (std::size_t k = 0; k < jobs.size(); ++k) outcomes[k] = call(batch[jobs[k]]);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < jobs.size(); k = next++) outcomes[k] = call(batch[jobs[k]]);
            });
        }
    }

    void note_observed(double f) {
        if (!worst_observed_ || better(objective_.sense(), *worst_observed_, f)) worst_observed_ = f;
    }

    const Objective& objective_;
    FailurePolicy policy_;
    unsigned parallelism_;
    FitnessCache cache_;
    std::optional<double> worst_observed_;
    std::size_t evaluations_ = 0;
    std::size_t failures_ = 0;
};

}  // namespace gravopt
