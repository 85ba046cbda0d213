#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "search_space.hpp"

namespace gravopt {

enum class Sense { minimize, maximize };

inline const char* to_string(Sense s) { return s == Sense::maximize ? "maximize" : "minimize"; }

// true when a is a strictly better fitness than b
inline bool better(Sense s, double a, double b) { return s == Sense::minimize ? a < b : a > b; }

enum class FailureKind { worker_error, timeout, process_exit, protocol, non_finite, invalid_params };

inline const char* to_string(FailureKind k) {
    switch (k) {
        case FailureKind::worker_error: return "worker_error";
        case FailureKind::timeout: return "timeout";
        case FailureKind::process_exit: return "process_exit";
        case FailureKind::protocol: return "protocol";
        case FailureKind::non_finite: return "non_finite";
        case FailureKind::invalid_params: return "invalid_params";
    }
    return "unknown";
}

/// A declared evaluation failure. Handled by the evaluator's retry/penalty policy.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(FailureKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    FailureKind kind() const { return kind_; }

private:
    FailureKind kind_;
};

/// Black-box fitness. Implementations must be callable from several threads
/// at once and deterministic for fixed inputs.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::string name() const = 0;
    virtual Sense sense() const { return Sense::minimize; }
    virtual double evaluate(const ParamVector& params) const = 0;
};

class FunctionObjective final : public Objective {
public:
    using Fn = std::function<double(const ParamVector&)>;

    FunctionObjective(std::string name, Fn fn, Sense sense = Sense::minimize)
        : name_(std::move(name)), fn_(std::move(fn)), sense_(sense) {}

    std::string name() const override { return name_; }
    Sense sense() const override { return sense_; }
    double evaluate(const ParamVector& params) const override { return fn_(params); }

private:
    std::string name_;
    Fn fn_;
    Sense sense_;
};

struct EvalRecord {
    ParamVector params;
    double fitness = 0.0;
    double duration = 0.0;  // seconds
    bool cache_hit = false;
    int attempt = 1;
    bool penalized = false;
    std::string error;  // last failure message, empty on success
};

// ---------------------------------------------------------------------------
// analytic benchmarks; each has global minimum 0

inline double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline double rastrigin(std::span<const double> x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
    return s;
}

inline double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        s += 100.0 * a * a + b * b;
    }
    return s;
}

inline std::vector<std::string> benchmark_names() { return {"sphere", "rastrigin", "rosenbrock"}; }

inline std::optional<double (*)(std::span<const double>)> find_benchmark(std::string_view name) {
    if (name == "sphere") return &sphere;
    if (name == "rastrigin") return &rastrigin;
    if (name == "rosenbrock") return &rosenbrock;
    return std::nullopt;
}

inline std::shared_ptr<Objective> make_benchmark_objective(const std::string& name) {
    auto fn = find_benchmark(name);
    if (!fn) throw std::invalid_argument("unknown benchmark function '" + name + "'");
    return std::make_shared<FunctionObjective>(name, [f = *fn](const ParamVector& params) {
        std::vector<double> x;
        x.reserve(params.size());
        for (const auto& p : params) x.push_back(p.as_double());
        return f(x);
    });
}

// ---------------------------------------------------------------------------
// activations and schedules used by the toy trainer

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

inline double step_decay_lr(double lr0, int epoch, double drop, int period) {
    if (epoch < 0 || period < 1 || !(drop > 0.0 && drop <= 1.0))
        throw std::invalid_argument("step_decay_lr: need epoch >= 0, period >= 1, 0 < drop <= 1");
    return lr0 * std::pow(drop, epoch / period);
}

// ---------------------------------------------------------------------------
// fitness cache keyed on decoded parameters

class FitnessCache {
public:
    std::optional<double> find(const ParamVector& params) const {
        std::shared_lock lock(mutex_);
        auto it = map_.find(params.key());
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    // first writer wins
    double insert(const ParamVector& params, double fitness) {
        std::unique_lock lock(mutex_);
        return map_.try_emplace(params.key(), fitness).first->second;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return map_.size();
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::vector<std::uint64_t>, double> map_;
};

class MemoizedObjective final : public Objective {
public:
    explicit MemoizedObjective(std::shared_ptr<const Objective> inner) : inner_(std::move(inner)) {}

    std::string name() const override { return inner_->name(); }
    Sense sense() const override { return inner_->sense(); }

    double evaluate(const ParamVector& params) const override { return evaluate_recorded(params).fitness; }

    EvalRecord evaluate_recorded(const ParamVector& params) const {
        const auto start = std::chrono::steady_clock::now();
        EvalRecord rec;
        rec.params = params;
        if (auto hit = cache_.find(params)) {
            rec.fitness = *hit;
            rec.cache_hit = true;
        } else {
            underlying_calls_.fetch_add(1, std::memory_order_relaxed);
            rec.fitness = cache_.insert(params, inner_->evaluate(params));
        }
        rec.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return rec;
    }

    std::size_t underlying_calls() const { return underlying_calls_.load(); }
    const FitnessCache& cache() const { return cache_; }

private:
    std::shared_ptr<const Objective> inner_;
    mutable FitnessCache cache_;
    mutable std::atomic<std::size_t> underlying_calls_{0};
};

inline std::shared_ptr<MemoizedObjective> memoize(std::shared_ptr<const Objective> objective) {
    return std::make_shared<MemoizedObjective>(std::move(objective));
}

}  // namespace gravopt
