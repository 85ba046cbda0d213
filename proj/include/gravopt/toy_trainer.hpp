#pragma once

// Small deterministic trainer used as a stand-in hyperparameter-tuning target.
//
// Data: two 2-D unit-variance Gaussian blobs centred at (-1,-1) [label 0] and
// (1,1) [label 1]. Model: 2 -> neurons (relu) -> dropout -> 1 (sigmoid),
// binary cross-entropy, plain mini-batch gradient descent with a step-decay
// learning rate and early stopping on validation loss. The fitness is the best
// validation loss seen during training.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "objectives.hpp"
#include "random.hpp"
#include "search_space.hpp"

namespace gravopt::toy {

struct TrainerConfig {
    std::uint64_t dataset_seed = 2020;
    std::size_t samples_per_class = 100;
    int epochs = 30;
    int patience = 7;
    double lr0 = 0.01;
    double lr_drop = 0.5;
    int lr_period = 10;
    double validation_fraction = 0.3;

    std::size_t validation_per_class() const {
        return static_cast<std::size_t>(std::llround(static_cast<double>(samples_per_class) * validation_fraction));
    }

    void validate() const {
        if (samples_per_class < 2) throw std::invalid_argument("samples_per_class must be >= 2");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (patience < 1) throw std::invalid_argument("patience must be >= 1");
        if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be > 0");
        if (!(lr_drop > 0.0 && lr_drop < 1.0)) throw std::invalid_argument("lr_drop must lie in (0, 1)");
        if (lr_period < 1) throw std::invalid_argument("lr_period must be >= 1");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
            throw std::invalid_argument("validation_fraction must lie in (0, 1)");
        const auto v = validation_per_class();
        if (v < 1 || v >= samples_per_class)
            throw std::invalid_argument("validation_fraction must leave at least one validation and one training sample per class");
    }

    bool operator==(const TrainerConfig&) const = default;
};

struct Sample {
    double x0;
    double x1;
    double y;
};

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> validation;
};

inline Dataset make_dataset(const TrainerConfig& cfg) {
    cfg.validate();
    std::mt19937_64 engine(cfg.dataset_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Sample> neg, pos;
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
        const double a = noise(engine), b = noise(engine);
        neg.push_back({-1.0 + a, -1.0 + b, 0.0});
        const double c = noise(engine), d = noise(engine);
        pos.push_back({1.0 + c, 1.0 + d, 1.0});
    }
    // draws are iid, so a prefix split is already a random split
    const std::size_t v = cfg.validation_per_class();
    Dataset ds;
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i) {
        auto& dst = i < v ? ds.validation : ds.train;
        dst.push_back(neg[i]);
        dst.push_back(pos[i]);
    }
    return ds;
}

/// Numerically stable binary cross-entropy of sigmoid(z) against y in {0,1}.
inline double bce_with_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

struct Network {
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x 2, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    explicit Network(std::size_t h = 0) : hidden(h), w1(2 * h, 0.0), b1(h, 0.0), w2(h, 0.0) {}

    std::size_t parameter_count() const { return 4 * hidden + 1; }

    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        out.insert(out.end(), w1.begin(), w1.end());
        out.insert(out.end(), b1.begin(), b1.end());
        out.insert(out.end(), w2.begin(), w2.end());
        out.push_back(b2);
        return out;
    }

    void assign(std::span<const double> flat) {
        if (flat.size() != parameter_count()) throw std::invalid_argument("Network::assign: wrong parameter count");
        auto it = flat.begin();
        std::copy_n(it, w1.size(), w1.begin()), it += static_cast<std::ptrdiff_t>(w1.size());
        std::copy_n(it, b1.size(), b1.begin()), it += static_cast<std::ptrdiff_t>(b1.size());
        std::copy_n(it, w2.size(), w2.begin()), it += static_cast<std::ptrdiff_t>(w2.size());
        b2 = *it;
    }

    static Network uniform_init(std::size_t hidden, Rng& rng) {
        Network n(hidden);
        for (auto& w : n.w1) w = rng.uniform(-0.5, 0.5);
        for (auto& b : n.b1) b = rng.uniform(-0.5, 0.5);
        for (auto& w : n.w2) w = rng.uniform(-0.5, 0.5);
        n.b2 = rng.uniform(-0.5, 0.5);
        return n;
    }

    // mask: per-hidden-unit multiplier (0 or 1/keep); empty means no dropout
    double logit(const Sample& s, std::span<const double> mask = {}) const {
        double z = b2;
        for (std::size_t k = 0; k < hidden; ++k) {
            double h = relu(w1[2 * k] * s.x0 + w1[2 * k + 1] * s.x1 + b1[k]);
            if (!mask.empty()) h *= mask[k];
            z += w2[k] * h;
        }
        return z;
    }
};

inline double mean_loss(const Network& net, std::span<const Sample> data) {
    double s = 0.0;
    for (const auto& x : data) s += bce_with_logit(net.logit(x), x.y);
    return s / static_cast<double>(data.size());
}

/// Gradient of the mean loss over `batch`. `masks` holds batch.size() * hidden
/// dropout multipliers, or is empty for no dropout.
inline Network loss_gradient(const Network& net, std::span<const Sample> batch, std::span<const double> masks = {}) {
    const std::size_t h = net.hidden;
    Network g(h);
    std::vector<double> pre(h), act(h);
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto& s = batch[n];
        const double* m = masks.empty() ? nullptr : masks.data() + n * h;
        double z = net.b2;
        for (std::size_t k = 0; k < h; ++k) {
            pre[k] = net.w1[2 * k] * s.x0 + net.w1[2 * k + 1] * s.x1 + net.b1[k];
            act[k] = relu(pre[k]) * (m ? m[k] : 1.0);
            z += net.w2[k] * act[k];
        }
        const double dz = sigmoid(z) - s.y;
        g.b2 += dz;
        for (std::size_t k = 0; k < h; ++k) {
            g.w2[k] += dz * act[k];
            if (pre[k] <= 0.0) continue;
            const double da = dz * net.w2[k] * (m ? m[k] : 1.0);
            g.w1[2 * k] += da * s.x0;
            g.w1[2 * k + 1] += da * s.x1;
            g.b1[k] += da;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& v : g.w1) v *= inv;
    for (auto& v : g.b1) v *= inv;
    for (auto& v : g.w2) v *= inv;
    g.b2 *= inv;
    return g;
}

struct HyperParams {
    std::size_t batch_size = 1;
    double dropout_rate = 0.1;
    std::size_t neurons = 1;

    static HyperParams from(const ParamVector& params) {
        auto whole = [&](const char* name) -> std::size_t {
            const auto* p = params.find(name);
            if (!p) throw EvaluationError(FailureKind::invalid_params, std::string("missing parameter '") + name + "'");
            const double v = p->as_double();
            if (!(v >= 1.0) || std::trunc(v) != v)
                throw EvaluationError(FailureKind::invalid_params, std::string("parameter '") + name + "' must be a whole number >= 1");
            return static_cast<std::size_t>(v);
        };
        HyperParams hp;
        hp.batch_size = whole("batch_size");
        hp.neurons = whole("neurons");
        const auto* d = params.find("dropout_rate");
        if (!d) throw EvaluationError(FailureKind::invalid_params, "missing parameter 'dropout_rate'");
        hp.dropout_rate = d->as_double();
        if (!(hp.dropout_rate >= 0.0 && hp.dropout_rate < 1.0))
            throw EvaluationError(FailureKind::invalid_params, "dropout_rate must lie in [0, 1)");
        return hp;
    }
};

inline std::uint64_t derived_seed(const TrainerConfig& cfg, const HyperParams& hp) {
    std::uint64_t s = mix_seed(cfg.dataset_seed);
    s = combine_seed(s, hp.batch_size);
    s = combine_seed(s, std::bit_cast<std::uint64_t>(hp.dropout_rate));
    s = combine_seed(s, hp.neurons);
    return s;
}

/// Weights before any training step for this (config, hyperparameters) pair.
inline Network initial_network(const TrainerConfig& cfg, const HyperParams& hp) {
    Rng rng(derived_seed(cfg, hp));
    return Network::uniform_init(hp.neurons, rng);
}

struct TrainTrace {
    double initial_loss = 0.0;
    std::vector<double> val_losses;  // one per completed epoch
    std::size_t best_epoch = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_run = 0;
};

inline TrainTrace train(const HyperParams& hp, const TrainerConfig& cfg) {
    cfg.validate();
    const Dataset ds = make_dataset(cfg);
    Network net = initial_network(cfg, hp);
    Rng rng(combine_seed(derived_seed(cfg, hp), 1));

    TrainTrace trace;
    trace.initial_loss = mean_loss(net, ds.validation);

    const double keep = 1.0 - hp.dropout_rate;
    const std::size_t bs = std::min(hp.batch_size, ds.train.size());
    std::vector<std::size_t> order(ds.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<Sample> batch;
    std::vector<double> masks;
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = step_decay_lr(cfg.lr0, epoch, cfg.lr_drop, cfg.lr_period);
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t stop = std::min(order.size(), start + bs);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(ds.train[order[i]]);
            masks.assign(batch.size() * hp.neurons, 1.0);
            if (hp.dropout_rate > 0.0)
                for (auto& m : masks) m = rng.uniform01() < keep ? 1.0 / keep : 0.0;
            const Network g = loss_gradient(net, batch, masks);
            for (std::size_t k = 0; k < net.w1.size(); ++k) net.w1[k] -= lr * g.w1[k];
            for (std::size_t k = 0; k < net.hidden; ++k) {
                net.b1[k] -= lr * g.b1[k];
                net.w2[k] -= lr * g.w2[k];
            }
            net.b2 -= lr * g.b2;
        }

        const double v = mean_loss(net, ds.validation);
        if (!std::isfinite(v)) throw EvaluationError(FailureKind::non_finite, "training diverged");
        trace.val_losses.push_back(v);
        trace.epochs_run = static_cast<std::size_t>(epoch) + 1;
        if (v < trace.best_loss) {
            trace.best_loss = v;
            trace.best_epoch = static_cast<std::size_t>(epoch);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return trace;
}

inline double evaluate(const ParamVector& params, const TrainerConfig& cfg) {
    return train(HyperParams::from(params), cfg).best_loss;
}

}  // namespace gravopt::toy

namespace gravopt {

using ToyTrainerConfig = toy::TrainerConfig;

inline double toy_trainer_evaluate(const ParamVector& params, const ToyTrainerConfig& cfg) {
    return toy::evaluate(params, cfg);
}

class ToyTrainerObjective final : public Objective {
public:
    explicit ToyTrainerObjective(ToyTrainerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    std::string name() const override { return "toy-trainer"; }
    double evaluate(const ParamVector& params) const override { return toy_trainer_evaluate(params, cfg_); }
    const ToyTrainerConfig& config() const { return cfg_; }

private:
    ToyTrainerConfig cfg_;
};

}  // namespace gravopt
