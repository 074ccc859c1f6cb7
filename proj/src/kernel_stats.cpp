#include "curation/kernel_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curation/error.hpp"
#include "curation/parallel.hpp"
#include "curation/random.hpp"

namespace curation {

namespace {

constexpr std::size_t kRowBlock = 32;

// Sum over i of sum over j of k(a_i, b_j), optionally skipping j == i. Row sums
// are formed serially and then added in row order, so the value does not
// depend on the thread count.
double kernel_sum(const FeatureMatrix& a, const FeatureMatrix& b, double gamma, bool skip_diagonal) {
    std::vector<double> row_sums(a.rows(), 0.0);
    parallel::for_blocks(a.rows(), kRowBlock, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = a.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < b.rows(); ++j) {
                if (skip_diagonal && i == j) {
                    continue;
                }
                s += std::exp(-gamma * squared_distance(x, b.row(j)));
            }
            row_sums[i] = s;
        }
    });
    double total = 0.0;
    for (double s : row_sums) {
        total += s;
    }
    return total;
}

// Strict ordering used to pick a canonical argument order for mmd_squared.
bool canonical_less(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.rows() != b.rows()) {
        return a.rows() < b.rows();
    }
    const auto da = a.data();
    const auto db = b.data();
    return std::lexicographical_compare(da.begin(), da.end(), db.begin(), db.end());
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::invalid_argument, "kernel bandwidth must be positive and finite");
    }
}

}  // namespace

std::string to_string(MmdEstimator kind) {
    return kind == MmdEstimator::biased_v_statistic ? "biased_v_statistic" : "unbiased_u_statistic";
}

MmdEstimator parse_mmd_estimator(const std::string& name) {
    if (name == "biased_v_statistic" || name == "biased") {
        return MmdEstimator::biased_v_statistic;
    }
    if (name == "unbiased_u_statistic" || name == "unbiased") {
        return MmdEstimator::unbiased_u_statistic;
    }
    throw Error(ErrorCode::invalid_argument, "unknown MMD estimator '" + name + "'");
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double sigma) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::dimension_mismatch, "rbf_kernel: vectors of dimension " + std::to_string(x.size()) +
                                                       " and " + std::to_string(y.size()));
    }
    check_sigma(sigma);
    return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

double median_bandwidth(const FeatureMatrix& points, std::size_t cap, std::uint64_t seed) {
    if (cap < 2) {
        throw Error(ErrorCode::invalid_argument, "bandwidth subsample cap must be at least 2");
    }
    Rng rng(seed);
    const auto rows = subsample_indices(points.rows(), cap, rng);

    std::vector<double> distances;
    distances.reserve(rows.size() * (rows.size() - (rows.empty() ? 0 : 1)) / 2);
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            const double d2 = squared_distance(points.row(rows[a]), points.row(rows[b]));
            if (d2 > 0.0) {
                distances.push_back(std::sqrt(d2));
            }
        }
    }
    if (distances.empty()) {
        throw Error(ErrorCode::degenerate_bandwidth, "median heuristic needs at least two distinct points");
    }
    const std::size_t mid = distances.size() / 2;
    std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid), distances.end());
    double median = distances[mid];
    if (distances.size() % 2 == 0) {
        const double lower = *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (lower + median);
    }
    return median;
}

double mmd_squared(const FeatureMatrix& p_in, const FeatureMatrix& q_in, double sigma, MmdEstimator kind) {
    check_sigma(sigma);
    const bool swap = canonical_less(q_in, p_in);
    const FeatureMatrix& p = swap ? q_in : p_in;
    const FeatureMatrix& q = swap ? p_in : q_in;

    const std::size_t min_size = kind == MmdEstimator::unbiased_u_statistic ? 2 : 1;
    if (p.rows() < min_size || q.rows() < min_size) {
        throw Error(ErrorCode::empty_input, "mmd_squared: " + to_string(kind) + " needs at least " +
                                                std::to_string(min_size) + " points per sample");
    }
    if (p.cols() != q.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "mmd_squared: samples of dimension " + std::to_string(p.cols()) +
                                                       " and " + std::to_string(q.cols()));
    }

    const double gamma = 1.0 / (2.0 * sigma * sigma);
    const double m = static_cast<double>(p.rows());
    const double n = static_cast<double>(q.rows());
    const bool unbiased = kind == MmdEstimator::unbiased_u_statistic;

    const double kpp = kernel_sum(p, p, gamma, unbiased) / (unbiased ? m * (m - 1.0) : m * m);
    const double kqq = kernel_sum(q, q, gamma, unbiased) / (unbiased ? n * (n - 1.0) : n * n);
    const double kpq = kernel_sum(p, q, gamma, false) / (m * n);
    const double value = (kpp + kqq) - 2.0 * kpq;
    if (!unbiased) {
        // The V-statistic is a squared RKHS norm; clip rounding noise below zero.
        return std::max(value, 0.0);
    }
    return value;
}

MMDMatrix pairwise_mmd_matrix(std::span<const NamedGroup> groups, const MMDConfig& config) {
    if (groups.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "pairwise MMD needs at least two groups");
    }
    if (config.subsample_cap < 2 || config.bandwidth_cap < 2) {
        throw Error(ErrorCode::invalid_argument, "MMD subsample caps must be at least 2");
    }
    const std::size_t g = groups.size();

    std::vector<FeatureMatrix> samples;
    samples.reserve(g);
    FeatureMatrix pooled;
    for (std::size_t i = 0; i < g; ++i) {
        const auto& points = groups[i].points;
        if (points.empty()) {
            throw Error(ErrorCode::empty_input, "group '" + groups[i].label + "' is empty");
        }
        if (points.cols() != groups[0].points.cols()) {
            throw Error(ErrorCode::dimension_mismatch, "group '" + groups[i].label + "' has dimension " +
                                                           std::to_string(points.cols()));
        }
        Rng rng(derive_seed(config.seed, i));
        const auto rows = subsample_indices(points.rows(), config.subsample_cap, rng);
        FeatureMatrix sample(rows.size(), points.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto src = points.row(rows[r]);
            std::copy(src.begin(), src.end(), sample.row(r).begin());
            pooled.push_back(src);
        }
        samples.push_back(std::move(sample));
    }

    MMDMatrix out;
    out.sigma = median_bandwidth(pooled, config.bandwidth_cap, derive_seed(config.seed, g));
    for (const auto& group : groups) {
        out.labels.push_back(group.label);
    }
    out.raw.assign(g, std::vector<double>(g, 0.0));
    out.normalized.assign(g, std::vector<double>(g, 0.0));

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = i; j < g; ++j) {
            const double v = mmd_squared(samples[i], samples[j], out.sigma, config.estimator);
            out.raw[i][j] = v;
            out.raw[j][i] = v;
            if (i != j) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < g; ++j) {
            if (i != j && range > 0.0) {
                out.normalized[i][j] = (out.raw[i][j] - lo) / range;
            }
        }
    }
    return out;
}

}  // namespace curation
