#include "curation/proximity_estimator.hpp"

#include <algorithm>
#include <utility>
#include <cmath>

#include "curation/error.hpp"
#include "curation/parallel.hpp"
#include "curation/random.hpp"

namespace curation {

namespace {

enum : std::uint64_t { kStreamPositiveSplit = 1, kStreamNegativeSplit = 2, kStreamBatches = 3 };

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

Split split_rows(std::size_t n, double val_fraction, std::uint64_t seed, const char* role) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = i;
    }
    Rng rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(val_fraction * n)));
    if (n_val >= n) {
        throw Error(ErrorCode::empty_input, std::string("validation split leaves no ") + role + " training samples");
    }
    Split s;
    s.val.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    return s;
}

void check_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0) {
        throw Error(ErrorCode::invalid_argument, "batch_size must be a positive even number");
    }
    if (!(cfg.step_size > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "step_size must be positive");
    }
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "momentum must lie in [0, 1)");
    }
    if (!(cfg.early_stop_accuracy > 0.0 && cfg.early_stop_accuracy <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "early_stop_accuracy must lie in (0, 1]");
    }
    if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "val_fraction must lie in (0, 1)");
    }
    if (cfg.eval_every == 0) {
        throw Error(ErrorCode::invalid_argument, "eval_every must be positive");
    }
}

Standardization fit_standardization(const FeatureStore& target, const std::vector<std::size_t>& target_rows,
                                    const FeatureStore& pool, const std::vector<std::size_t>& pool_rows) {
    const std::size_t dim = target.dim();
    const double n = static_cast<double>(target_rows.size() + pool_rows.size());
    Standardization st{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    auto accumulate = [&](const FeatureStore& store, const std::vector<std::size_t>& rows, auto&& fn) {
        for (std::size_t r : rows) {
            const auto x = store.row(r);
            for (std::size_t d = 0; d < dim; ++d) {
                fn(d, static_cast<double>(x[d]));
            }
        }
    };
    auto add_mean = [&](std::size_t d, double v) { st.mean[d] += v; };
    accumulate(target, target_rows, add_mean);
    accumulate(pool, pool_rows, add_mean);
    for (auto& m : st.mean) {
        m /= n;
    }
    auto add_var = [&](std::size_t d, double v) {
        const double c = v - st.mean[d];
        st.scale[d] += c * c;
    };
    accumulate(target, target_rows, add_var);
    accumulate(pool, pool_rows, add_var);
    for (auto& s : st.scale) {
        s = std::sqrt(s / n);
        if (!(s > 0.0)) {
            s = 1.0;
        }
    }
    return st;
}

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <typename T>
static double score_impl(const ProximityEstimator& est, std::span<const T> x) {
    if (x.size() != est.dim()) {
        throw Error(ErrorCode::dimension_mismatch, "estimator expects dimension " + std::to_string(est.dim()) +
                                                       ", got " + std::to_string(x.size()));
    }
    return sigmoid(est.logit(x));
}

double score_sample(const ProximityEstimator& est, std::span<const double> x) { return score_impl(est, x); }

double score_sample(const ProximityEstimator& est, std::span<const float> x) { return score_impl(est, x); }

double bce_loss(std::span<const double> scores, std::span<const int> labels) {
    if (scores.empty()) {
        throw Error(ErrorCode::empty_input, "bce_loss of an empty batch");
    }
    if (scores.size() != labels.size()) {
        throw Error(ErrorCode::invalid_argument, "bce_loss: scores and labels differ in length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = std::clamp(scores[i], kLossClamp, 1.0 - kLossClamp);
        total -= labels[i] != 0 ? std::log(s) : std::log1p(-s);
    }
    return total / static_cast<double>(scores.size());
}

Gradient bce_gradient(const ProximityEstimator& est, const FeatureMatrix& batch, std::span<const int> labels) {
    if (batch.empty()) {
        throw Error(ErrorCode::empty_input, "bce_gradient of an empty batch");
    }
    if (batch.cols() != est.dim()) {
        throw Error(ErrorCode::dimension_mismatch, "estimator expects dimension " + std::to_string(est.dim()) +
                                                       ", batch has " + std::to_string(batch.cols()));
    }
    if (labels.size() != batch.rows()) {
        throw Error(ErrorCode::invalid_argument, "bce_gradient: batch and labels differ in length");
    }
    Gradient g{std::vector<double>(est.dim(), 0.0), 0.0};
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        const auto x = est.transform(batch.row(i));
        double z = est.bias;
        for (std::size_t d = 0; d < x.size(); ++d) {
            z += est.weights[d] * x[d];
        }
        const double r = sigmoid(z) - (labels[i] != 0 ? 1.0 : 0.0);
        for (std::size_t d = 0; d < x.size(); ++d) {
            g.weights[d] += r * x[d];
        }
        g.bias += r;
    }
    const double inv = 1.0 / static_cast<double>(batch.rows());
    for (auto& w : g.weights) {
        w *= inv;
    }
    g.bias *= inv;
    return g;
}

TrainResult train_estimator(const FeatureStore& target, const FeatureStore& pool, const TrainConfig& cfg,
                            const BatchObserver& observer) {
    check_config(cfg);
    if (target.empty() || pool.empty()) {
        throw Error(ErrorCode::empty_input, target.empty() ? "target store is empty" : "candidate pool is empty");
    }
    if (target.dim() != pool.dim()) {
        throw Error(ErrorCode::dimension_mismatch, "target dimension " + std::to_string(target.dim()) +
                                                       " differs from pool dimension " + std::to_string(pool.dim()));
    }
    const std::size_t dim = target.dim();

    const Split pos = split_rows(target.size(), cfg.val_fraction, derive_seed(cfg.seed, kStreamPositiveSplit), "target");
    const Split neg = split_rows(pool.size(), cfg.val_fraction, derive_seed(cfg.seed, kStreamNegativeSplit), "pool");

    TrainResult result;
    auto& est = result.estimator;
    auto& history = result.history;
    est.weights.assign(dim, 0.0);
    if (cfg.standardize_features) {
        est.standardize = fit_standardization(target, pos.train, pool, neg.train);
    }

    // Balanced evaluation set: equally many held-out rows from each class.
    const std::size_t per_class = std::min(pos.val.size(), neg.val.size());
    FeatureMatrix eval_x(2 * per_class, dim);
    std::vector<int> eval_y(2 * per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
        const auto p = target.row(pos.val[i]);
        const auto q = pool.row(neg.val[i]);
        std::copy(p.begin(), p.end(), eval_x.row(2 * i).begin());
        std::copy(q.begin(), q.end(), eval_x.row(2 * i + 1).begin());
        eval_y[2 * i] = 1;
        eval_y[2 * i + 1] = 0;
    }

    auto evaluate = [&] {
        std::vector<double> scores(eval_x.rows());
        std::size_t correct = 0;
        for (std::size_t i = 0; i < eval_x.rows(); ++i) {
            scores[i] = sigmoid(est.logit(std::as_const(eval_x).row(i)));
            correct += static_cast<std::size_t>((scores[i] >= 0.5) == (eval_y[i] == 1));
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(eval_x.rows());
        history.loss_curve.push_back(bce_loss(scores, eval_y));
        history.val_acc_curve.push_back(acc);
        return acc;
    };

    Rng rng(derive_seed(cfg.seed, kStreamBatches));
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.train.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, neg.train.size() - 1);
    const std::size_t half = cfg.batch_size / 2;
    FeatureMatrix batch(cfg.batch_size, dim);
    std::vector<int> labels(cfg.batch_size);
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        labels[i] = i < half ? 1 : 0;
    }

    std::vector<double> velocity(dim, 0.0);
    double bias_velocity = 0.0;
    bool evaluated_last = false;
    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        for (std::size_t i = 0; i < half; ++i) {
            const auto p = target.row(pos.train[pick_pos(rng)]);
            std::copy(p.begin(), p.end(), batch.row(i).begin());
        }
        for (std::size_t i = 0; i < half; ++i) {
            const auto q = pool.row(neg.train[pick_neg(rng)]);
            std::copy(q.begin(), q.end(), batch.row(half + i).begin());
        }
        if (observer) {
            observer(labels);
        }
        const Gradient g = bce_gradient(est, batch, labels);
        for (std::size_t d = 0; d < dim; ++d) {
            velocity[d] = cfg.momentum * velocity[d] - cfg.step_size * g.weights[d];
            est.weights[d] += velocity[d];
        }
        bias_velocity = cfg.momentum * bias_velocity - cfg.step_size * g.bias;
        est.bias += bias_velocity;
        history.steps_run = step;

        evaluated_last = step % cfg.eval_every == 0;
        if (evaluated_last && evaluate() >= cfg.early_stop_accuracy) {
            history.stopped_early = true;
            return result;
        }
    }
    if (!evaluated_last) {
        evaluate();
    }
    return result;
}

ScoreTable score_store(const ProximityEstimator& est, const FeatureStore& store) {
    if (store.dim() != est.dim() && !store.empty()) {
        throw Error(ErrorCode::dimension_mismatch, "estimator expects dimension " + std::to_string(est.dim()) +
                                                       ", store has " + std::to_string(store.dim()));
    }
    ScoreTable table;
    table.scorer = ScorerKind::learned_estimator;
    table.direction = Direction::higher_is_closer;
    table.entries.resize(store.size());
    if (store.empty()) {
        return table;
    }
    (void)store.dataset(0);  // load labels before fanning out
    parallel::for_blocks(store.size(), 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            table.entries[i] = {store.id(i), store.dataset(i), sigmoid(est.logit(store.row(i)))};
        }
    });
    return table;
}

}  // namespace curation
