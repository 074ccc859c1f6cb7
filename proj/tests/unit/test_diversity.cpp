#include <doctest.h>

#include <cmath>
#include <random>

#include "curation/diversity.hpp"
#include "curation/error.hpp"
#include "curation/parallel.hpp"
#include "oracles.hpp"

using namespace curation;

namespace {

// Direct double loop over ordered pairs u != v.
double reference_diversity(const FeatureMatrix& x, double t) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.rows(); ++j) {
            if (i != j) {
                total += std::exp(-t * squared_distance(x.row(i), x.row(j)));
            }
        }
    }
    const double n = static_cast<double>(x.rows());
    return n * (n - 1.0) / total;
}

FeatureMatrix scaled(FeatureMatrix m, double c) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (auto& v : m.row(i)) {
            v *= c;
        }
    }
    return m;
}

}  // namespace

TEST_CASE("identical points have diversity exactly one") {
    FeatureMatrix m;
    const std::vector<double> p{0.25, -4.0, 3.0};
    for (int i = 0; i < 10; ++i) {
        m.push_back(std::span<const double>(p));
    }
    CHECK(diversity(m, DiversityConfig{}) == 1.0);
    DiversityConfig mc;
    mc.exact_threshold = 2;
    mc.pair_samples = 1000;
    CHECK(diversity(m, mc) == 1.0);
}

TEST_CASE("two points at unit distance") {
    FeatureMatrix m(2, 2);
    m.row(1)[0] = 0.6;
    m.row(1)[1] = 0.8;
    CHECK(std::abs(diversity(m, DiversityConfig{}) - std::exp(2.0)) < 1e-9);
    CHECK(std::abs(diversity(m, DiversityConfig{}) - 7.389056) < 1e-6);
}

TEST_CASE("exact mode matches the ordered-pair definition") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = oracle::gaussian_matrix(150, {0, 0, 0}, 0.4 + 0.2 * static_cast<double>(seed), seed);
        for (double t : {0.5, 2.0}) {
            DiversityConfig cfg;
            cfg.t = t;
            CHECK(diversity(m, cfg) == doctest::Approx(reference_diversity(m, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("diversity is at least one and grows with scale") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> c_dist(1.01, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::gaussian_matrix(40 + static_cast<std::size_t>(trial), {0, 0, 0, 0}, 0.3, rng());
        const double base = diversity(m, DiversityConfig{});
        CHECK(base >= 1.0);
        CHECK(diversity(scaled(m, c_dist(rng)), DiversityConfig{}) >= base);
    }
}

TEST_CASE("Monte-Carlo mode tracks the exact value") {
    const auto m = oracle::gaussian_matrix(3000, {0, 0}, 0.5, 71);
    const double exact = diversity(m, DiversityConfig{});
    DiversityConfig mc;
    mc.exact_threshold = 1000;
    mc.seed = 4;
    const double sampled = diversity(m, mc);
    CHECK(sampled == doctest::Approx(exact).epsilon(0.02));
    CHECK(diversity(m, mc) == sampled);
    parallel::set_threads(3);
    CHECK(diversity(m, mc) == sampled);
    CHECK(diversity(m, DiversityConfig{}) == exact);
    parallel::set_threads(1);
}

TEST_CASE("store rows and matrices give the same value") {
    const auto recs = oracle::gaussian_records(200, {0, 0, 0}, 1.0, 8);
    const auto store = FeatureStore::from_records(recs);
    const std::vector<std::size_t> rows{3, 9, 27, 81, 100, 150, 199};
    CHECK(diversity(store, rows, DiversityConfig{}) ==
          doctest::Approx(diversity(FeatureMatrix::gather(store, rows), DiversityConfig{})).epsilon(1e-15));
}

TEST_CASE("diversity argument checks") {
    CHECK_THROWS_AS(diversity(FeatureMatrix(1, 3), DiversityConfig{}), Error);
    DiversityConfig bad_t;
    bad_t.t = 0.0;
    CHECK_THROWS_AS(diversity(FeatureMatrix(3, 3), bad_t), Error);
    DiversityConfig no_pairs;
    no_pairs.pair_samples = 0;
    CHECK_THROWS_AS(diversity(FeatureMatrix(3, 3), no_pairs), Error);
}
