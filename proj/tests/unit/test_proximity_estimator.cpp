#include <doctest.h>

#include <cmath>
#include <random>

#include "curation/error.hpp"
#include "curation/feature_store.hpp"
#include "curation/parallel.hpp"
#include "curation/proximity_estimator.hpp"
#include "oracles.hpp"

using namespace curation;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

FeatureStore cloud(std::size_t n, std::vector<double> mean, std::uint64_t seed, std::uint64_t first_id = 0) {
    return FeatureStore::from_records(oracle::gaussian_records(n, mean, 1.0, seed, first_id));
}

double mean_of(const ScoreTable& t) {
    double s = 0.0;
    for (const auto& e : t.entries) {
        s += e.value;
    }
    return s / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("score_sample closed forms") {
    ProximityEstimator zero{{0.0, 0.0, 0.0}, 0.0, std::nullopt};
    CHECK(score_sample(zero, v({5, -3, 1e3})) == 0.5);

    ProximityEstimator e{{1.0, 0.0}, 0.0, std::nullopt};
    CHECK(score_sample(e, v({0, 0})) == 0.5);
    CHECK(score_sample(e, v({std::log(9.0), 0})) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(score_sample(e, v({2.1972, 0})) == doctest::Approx(0.9).epsilon(1e-4));
    CHECK_THROWS_AS(score_sample(e, v({1.0})), Error);
}

TEST_CASE("saturated scores are not clamped, the loss clamps instead") {
    ProximityEstimator e{{1.0}, 0.0, std::nullopt};
    const double low = score_sample(e, v({-1e6}));
    const double high = score_sample(e, v({1e6}));
    CHECK(low >= 0.0);
    CHECK(low < 1e-300);
    CHECK(high == 1.0);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(-800.0)));
    const std::vector<double> s{low};
    CHECK(bce_loss(s, std::vector<int>{0}) <= 1e-11);
    CHECK(bce_loss(s, std::vector<int>{1}) == doctest::Approx(-std::log(kLossClamp)).epsilon(1e-12));
}

TEST_CASE("sigmoid matches the logistic function") {
    for (double z = -30.0; z <= 30.0; z += 0.25) {
        CHECK(sigmoid(z) == doctest::Approx(oracle::logistic(z)).epsilon(1e-14));
        CHECK(sigmoid(z) + sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("bce loss closed forms") {
    CHECK(bce_loss(v({0.5, 0.5}), std::vector<int>{1, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_loss(v({0.5, 0.5}), std::vector<int>{1, 0}) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(bce_loss(v({1.0 - kLossClamp, kLossClamp}), std::vector<int>{1, 0}) <= 1e-11);
    CHECK(bce_loss(v({1.0, 0.0}), std::vector<int>{1, 0}) <= 1e-11);
    CHECK(bce_loss(v({0.9}), std::vector<int>{0}) == doctest::Approx(-std::log(0.1)).epsilon(1e-14));
    CHECK(bce_loss(v({0.9}), std::vector<int>{0}) == doctest::Approx(2.302585).epsilon(1e-6));
    CHECK_THROWS_AS(bce_loss(std::vector<double>{}, std::vector<int>{}), Error);
    CHECK_THROWS_AS(bce_loss(v({0.5}), std::vector<int>{1, 0}), Error);
}

TEST_CASE("gradient closed forms") {
    ProximityEstimator e{{0.0, 0.0}, 0.0, std::nullopt};
    FeatureMatrix x(1, 2);
    x.row(0)[0] = 1.0;
    const auto g = bce_gradient(e, x, std::vector<int>{1});
    CHECK(g.weights == v({-0.5, 0.0}));
    CHECK(g.bias == -0.5);

    // Mean label equals the score: the gradient vanishes.
    FeatureMatrix pair(2, 2);
    pair.row(0)[0] = pair.row(1)[0] = 3.0;
    pair.row(0)[1] = pair.row(1)[1] = -1.0;
    const auto flat = bce_gradient(e, pair, std::vector<int>{1, 0});
    CHECK(flat.weights == v({0.0, 0.0}));
    CHECK(flat.bias == 0.0);

    CHECK_THROWS_AS(bce_gradient(e, FeatureMatrix(1, 3), std::vector<int>{1}), Error);
    CHECK_THROWS_AS(bce_gradient(e, FeatureMatrix(0, 2), std::vector<int>{}), Error);
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 rng(314);
    std::uniform_int_distribution<int> dim_dist(1, 16);
    std::uniform_int_distribution<int> batch_dist(1, 16);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto dim = static_cast<std::size_t>(dim_dist(rng));
        const auto n = static_cast<std::size_t>(trial == 0 ? 8 : batch_dist(rng));
        ProximityEstimator e;
        e.weights.resize(dim);
        for (auto& w : e.weights) {
            w = u(rng);
        }
        e.bias = u(rng);
        if (trial % 3 == 0) {
            Standardization s;
            for (std::size_t d = 0; d < dim; ++d) {
                s.mean.push_back(u(rng));
                s.scale.push_back(0.5 + std::abs(u(rng)));
            }
            e.standardize = s;
        }
        FeatureMatrix x(n, dim);
        std::vector<int> y(n);
        std::vector<std::vector<double>> xt(n, std::vector<double>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = coin(rng) ? 1 : 0;
            for (std::size_t d = 0; d < dim; ++d) {
                x.row(i)[d] = 2.0 * u(rng);
                xt[i][d] = e.standardize ? (x.row(i)[d] - e.standardize->mean[d]) / e.standardize->scale[d]
                                         : x.row(i)[d];
            }
        }
        const auto g = bce_gradient(e, x, y);
        const auto fd = oracle::linear_bce_fd(e.weights, e.bias, xt, y);
        double diff = 0.0, norm_g = 0.0, norm_fd = 0.0;
        for (std::size_t d = 0; d <= dim; ++d) {
            const double gd = d < dim ? g.weights[d] : g.bias;
            diff += (gd - fd[d]) * (gd - fd[d]);
            norm_g += gd * gd;
            norm_fd += fd[d] * fd[d];
        }
        const double rel = std::sqrt(diff) / std::max(std::sqrt(std::max(norm_g, norm_fd)), 1e-12);
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("training separates well-separated clouds") {
    // Bayes error for unit Gaussians at +-(3,3): Phi(-3 sqrt 2).
    const double bayes_error = oracle::normal_cdf(-3.0 * std::sqrt(2.0));
    REQUIRE(bayes_error < 1e-3);

    const auto pos = cloud(500, {3, 3}, 1);
    const auto neg = cloud(500, {-3, -3}, 2, 1000);
    TrainConfig cfg;
    cfg.seed = 17;
    const auto result = train_estimator(pos, neg, cfg);
    const auto& h = result.history;
    CHECK(h.stopped_early);
    CHECK(h.steps_run <= 200);
    REQUIRE_FALSE(h.val_acc_curve.empty());
    CHECK(h.val_acc_curve.back() >= 0.90);
    CHECK(h.loss_curve.size() == h.val_acc_curve.size());

    std::vector<FeatureRecord> centroids{{1, "pos", "", {3.f, 3.f}, {}}, {2, "neg", "", {-3.f, -3.f}, {}}};
    const auto t = score_store(result.estimator, FeatureStore::from_records(centroids));
    CHECK(t.entries[0].value > t.entries[1].value);

    CHECK(mean_of(score_store(result.estimator, pos)) > mean_of(score_store(result.estimator, neg)));
}

TEST_CASE("training on indistinguishable classes does not stop early") {
    const auto a = cloud(2000, {0, 0, 0}, 3);
    const auto b = cloud(2000, {0, 0, 0}, 4, 5000);
    TrainConfig cfg;
    cfg.seed = 9;
    const auto h = train_estimator(a, b, cfg).history;
    CHECK_FALSE(h.stopped_early);
    CHECK(h.steps_run == cfg.max_steps);
    CHECK(h.val_acc_curve.back() >= 0.40);
    CHECK(h.val_acc_curve.back() <= 0.60);
}

TEST_CASE("overlapping clouds: steps until early stop") {
    const auto pos = cloud(5000, {1.5, 1.5}, 5);
    const auto neg = cloud(5000, {-1.5, -1.5}, 6, 10000);
    const auto h = train_estimator(pos, neg, TrainConfig{}).history;
    MESSAGE("early stop after " << h.steps_run << " steps (stopped early: " << h.stopped_early << ")");
    CHECK(h.steps_run >= 1);
    if (h.stopped_early) {
        CHECK(h.val_acc_curve.back() >= 0.90);
    }
}

TEST_CASE("every batch is balanced") {
    const auto pos = cloud(60, {1, 0}, 7);
    const auto neg = cloud(3000, {-1, 0}, 8, 100);
    TrainConfig cfg;
    cfg.max_steps = 40;
    cfg.early_stop_accuracy = 1.0;
    cfg.batch_size = 32;
    std::size_t batches = 0;
    bool balanced = true;
    const auto h = train_estimator(pos, neg, cfg, [&](std::span<const int> labels) {
        ++batches;
        balanced &= labels.size() == 32;
        balanced &= std::count(labels.begin(), labels.end(), 1) == 16;
        balanced &= std::count(labels.begin(), labels.end(), 0) == 16;
    }).history;
    CHECK(balanced);
    CHECK(batches == h.steps_run);
}

TEST_CASE("training is deterministic given the seed") {
    const auto pos = cloud(300, {1, 1, 0, 0}, 11);
    const auto neg = cloud(900, {-1, 0, 1, 0}, 12, 400);
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.max_steps = 60;
    cfg.early_stop_accuracy = 1.0;
    const auto a = train_estimator(pos, neg, cfg);
    const auto b = train_estimator(pos, neg, cfg);
    CHECK(a.estimator.weights == b.estimator.weights);
    CHECK(a.estimator.bias == b.estimator.bias);
    CHECK(a.history.loss_curve == b.history.loss_curve);
    CHECK(a.history.val_acc_curve == b.history.val_acc_curve);
    cfg.seed = 4;
    const auto c = train_estimator(pos, neg, cfg);
    CHECK(c.estimator.weights != a.estimator.weights);
}

TEST_CASE("evaluation cadence and final evaluation") {
    const auto pos = cloud(200, {0.2}, 13);
    const auto neg = cloud(200, {-0.2}, 14, 300);
    TrainConfig cfg;
    cfg.max_steps = 12;
    cfg.eval_every = 5;
    cfg.early_stop_accuracy = 1.0;
    const auto h = train_estimator(pos, neg, cfg).history;
    CHECK(h.steps_run == 12);
    CHECK(h.val_acc_curve.size() == 3);
}

TEST_CASE("standardization statistics are stored and used") {
    const auto pos = FeatureStore::from_records(oracle::gaussian_records(400, {1000, 1}, 5.0, 15));
    const auto neg = FeatureStore::from_records(oracle::gaussian_records(400, {1000, -1}, 5.0, 16, 1000));
    TrainConfig cfg;
    cfg.standardize_features = true;
    cfg.early_stop_accuracy = 1.0;
    cfg.max_steps = 30;
    const auto est = train_estimator(pos, neg, cfg).estimator;
    REQUIRE(est.standardize.has_value());
    CHECK(est.standardize->mean[0] == doctest::Approx(1000.0).epsilon(0.01));
    for (double s : est.standardize->scale) {
        CHECK(s > 0.0);
    }
    const auto x = v({1000.0, 2.0});
    const auto xt = est.transform(std::span<const double>(x));
    double z = est.bias;
    for (std::size_t d = 0; d < 2; ++d) {
        z += est.weights[d] * xt[d];
    }
    CHECK(score_sample(est, x) == doctest::Approx(oracle::logistic(z)).epsilon(1e-14));
}

TEST_CASE("constant feature columns standardize with unit scale") {
    std::vector<FeatureRecord> a, b;
    for (std::uint64_t i = 0; i < 50; ++i) {
        a.push_back({i, "a", "", {1.0f, static_cast<float>(i % 7)}, {}});
        b.push_back({100 + i, "b", "", {1.0f, -static_cast<float>(i % 5)}, {}});
    }
    TrainConfig cfg;
    cfg.standardize_features = true;
    cfg.max_steps = 10;
    const auto est = train_estimator(FeatureStore::from_records(a), FeatureStore::from_records(b), cfg).estimator;
    CHECK(est.standardize->scale[0] == 1.0);
    for (double w : est.weights) {
        CHECK(std::isfinite(w));
    }
}

TEST_CASE("training argument checks") {
    const auto a2 = cloud(20, {0, 0}, 1);
    const auto b2 = cloud(20, {1, 1}, 2, 100);
    const auto b3 = cloud(20, {1, 1, 1}, 3, 200);
    const auto empty = FeatureStore::from_records({}, {}, 2);
    const auto single = cloud(1, {0, 0}, 4, 300);
    CHECK_THROWS_AS(train_estimator(a2, b3, TrainConfig{}), Error);
    CHECK_THROWS_AS(train_estimator(a2, empty, TrainConfig{}), Error);
    CHECK_THROWS_AS(train_estimator(single, b2, TrainConfig{}), Error);
    TrainConfig odd;
    odd.batch_size = 7;
    CHECK_THROWS_AS(train_estimator(a2, b2, odd), Error);
    TrainConfig bad_fraction;
    bad_fraction.val_fraction = 1.0;
    CHECK_THROWS_AS(train_estimator(a2, b2, bad_fraction), Error);
}

TEST_CASE("score_store output") {
    ProximityEstimator e{{0.5, -0.25}, 0.1, std::nullopt};
    const auto recs = oracle::gaussian_records(3000, {0, 0}, 2.0, 21, 40);
    const auto store = FeatureStore::from_records(recs);
    parallel::set_threads(3);
    const auto t = score_store(e, store);
    parallel::set_threads(1);
    CHECK(t.scorer == ScorerKind::learned_estimator);
    CHECK(t.direction == Direction::higher_is_closer);
    REQUIRE(t.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(t.entries[i].id == recs[i].id);
        CHECK(t.entries[i].dataset == "g");
        CHECK(t.entries[i].value > 0.0);
        CHECK(t.entries[i].value < 1.0);
        CHECK(t.entries[i].value == score_sample(e, store.row(i)));
    }
    CHECK(score_store(e, FeatureStore::from_records({}, {}, 2)).entries.empty());
    CHECK_THROWS_AS(score_store(e, cloud(3, {0, 0, 0}, 1)), Error);
}

TEST_CASE("ranking by score equals ranking by logit") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    ProximityEstimator e{{u(rng), u(rng), u(rng)}, u(rng), std::nullopt};
    std::vector<std::vector<double>> xs(400);
    for (auto& x : xs) {
        x = {u(rng), u(rng), u(rng)};
    }
    auto by = [&](auto key) {
        std::vector<std::size_t> order(xs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(xs[a]) < key(xs[b]); });
        return order;
    };
    const auto by_score = by([&](const std::vector<double>& x) { return score_sample(e, x); });
    const auto by_logit = by([&](const std::vector<double>& x) { return e.logit(std::span<const double>(x)); });
    CHECK(by_score == by_logit);
}

TEST_CASE("learned scores recover the density-ratio ordering in 1-D") {
    const auto pos = FeatureStore::from_records(oracle::gaussian_records(5000, {1.0}, 1.0, 41));
    const auto neg = FeatureStore::from_records(oracle::gaussian_records(5000, {-1.0}, 1.0, 42, 10000));
    const auto est = train_estimator(pos, neg, TrainConfig{}).estimator;
    std::vector<double> learned, analytic;
    for (int i = 0; i <= 200; ++i) {
        const double x = -4.0 + 0.04 * i;
        learned.push_back(score_sample(est, v({x})));
        analytic.push_back(oracle::logistic(2.0 * x));
    }
    CHECK(oracle::spearman(learned, analytic) >= 0.99);
}
