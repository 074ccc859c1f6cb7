#include "curation/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "curation/error.hpp"
#include "curation/json_io.hpp"
#include "curation/proximity_estimator.hpp"
#include "curation/random.hpp"

namespace curation {

namespace {

std::vector<double> axis(std::size_t dim, std::size_t index, double length) {
    std::vector<double> v(dim, 0.0);
    v[index] = length;
    return v;
}

double log_sum_exp(const std::vector<double>& terms) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double t : terms) {
        peak = std::max(peak, t);
    }
    double s = 0.0;
    for (double t : terms) {
        s += std::exp(t - peak);
    }
    return peak + std::log(s);
}

}  // namespace

void check_spec(const MixtureSpec& spec) {
    if (spec.dim == 0) {
        throw Error(ErrorCode::invalid_argument, "mixture spec needs a positive dimension");
    }
    if (spec.components.empty()) {
        throw Error(ErrorCode::invalid_argument, "mixture spec has no components");
    }
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const auto& comp = spec.components[c];
        const std::string where = "component " + std::to_string(c);
        if (comp.mean.size() != spec.dim) {
            throw Error(ErrorCode::dimension_mismatch, where + " mean has dimension " +
                                                           std::to_string(comp.mean.size()) + ", spec has " +
                                                           std::to_string(spec.dim));
        }
        if (!(comp.std > 0.0) || !std::isfinite(comp.std)) {
            throw Error(ErrorCode::invalid_argument, where + " needs a positive std");
        }
        if (comp.count == 0) {
            throw Error(ErrorCode::invalid_argument, where + " needs a positive count");
        }
        for (double m : comp.mean) {
            if (!std::isfinite(m)) {
                throw Error(ErrorCode::non_finite, where + " mean is not finite");
            }
        }
    }
}

SyntheticSet gen_mixture(const MixtureSpec& spec) {
    check_spec(spec);
    SyntheticSet out;
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uint64_t next_id = spec.id_offset;
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const auto& comp = spec.components[c];
        for (std::size_t i = 0; i < comp.count; ++i) {
            FeatureRecord r;
            r.id = next_id++;
            r.dataset = comp.dataset;
            r.key = comp.dataset + "/" + std::to_string(i);
            r.vector.resize(spec.dim);
            for (std::size_t d = 0; d < spec.dim; ++d) {
                r.vector[d] = static_cast<float>(comp.mean[d] + comp.std * normal(rng));
            }
            out.truth.push_back({r.id, comp.aligned, c});
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

std::filesystem::path truth_path_for(const std::filesystem::path& store_path) {
    auto p = store_path;
    p.replace_extension(".truth.jsonl");
    return p;
}

void write_truth(std::span<const TruthEntry> truth, const std::filesystem::path& path) {
    std::string text;
    for (const auto& t : truth) {
        text += io::json{{"id", t.id}, {"aligned", t.aligned}, {"component", t.component}}.dump();
        text += '\n';
    }
    io::write_atomic(path, text);
}

std::vector<TruthEntry> read_truth(const std::filesystem::path& path) {
    std::istringstream in(io::read_file(path));
    std::vector<TruthEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = io::json::parse(line);
            out.push_back({j.at("id").get<std::uint64_t>(), j.at("aligned").get<bool>(),
                           j.at("component").get<std::size_t>()});
        } catch (const io::json::exception& e) {
            throw Error(ErrorCode::parse, path.string() + ": " + e.what());
        }
    }
    return out;
}

StoreSummary write_synthetic(const SyntheticSet& set, const std::filesystem::path& store_path) {
    const auto summary = write_store(set.records, store_path);
    write_truth(set.truth, truth_path_for(store_path));
    return summary;
}

double mixture_log_density(std::span<const double> x, const MixtureSpec& spec) {
    check_spec(spec);
    if (x.size() != spec.dim) {
        throw Error(ErrorCode::dimension_mismatch, "point dimension " + std::to_string(x.size()) +
                                                       " differs from spec dimension " + std::to_string(spec.dim));
    }
    double total = 0.0;
    for (const auto& c : spec.components) {
        total += static_cast<double>(c.count);
    }
    const double d = static_cast<double>(spec.dim);
    std::vector<double> terms;
    terms.reserve(spec.components.size());
    for (const auto& c : spec.components) {
        const double var = c.std * c.std;
        const double d2 = squared_distance(x, std::span<const double>(c.mean));
        terms.push_back(std::log(static_cast<double>(c.count) / total) -
                        0.5 * d * std::log(2.0 * std::numbers::pi * var) - d2 / (2.0 * var));
    }
    return log_sum_exp(terms);
}

double analytic_posterior(std::span<const double> x, const MixtureSpec& target, const MixtureSpec& pool) {
    return sigmoid(mixture_log_density(x, target) - mixture_log_density(x, pool));
}

RecoveryReport recovery_eval(const SelectionManifest& manifest, std::span<const TruthEntry> truth) {
    std::unordered_map<std::uint64_t, bool> aligned;
    aligned.reserve(truth.size());
    RecoveryReport report;
    for (const auto& t : truth) {
        aligned.emplace(t.id, t.aligned);
        report.planted_count += static_cast<std::size_t>(t.aligned);
    }
    report.k = manifest.entries.size();
    for (const auto& e : manifest.entries) {
        const auto it = aligned.find(e.id);
        if (it == aligned.end()) {
            throw Error(ErrorCode::unknown_id, "manifest id " + std::to_string(e.id) + " has no ground truth");
        }
        report.hits += static_cast<std::size_t>(it->second);
    }
    if (report.k > 0) {
        report.precision_at_k = static_cast<double>(report.hits) / static_cast<double>(report.k);
    }
    if (report.planted_count > 0) {
        report.recall_at_k = static_cast<double>(report.hits) / static_cast<double>(report.planted_count);
    }
    return report;
}

Benchmark standard_benchmark(std::uint64_t seed) {
    constexpr std::size_t dim = 32;
    Benchmark b;
    b.k = 2000;

    b.target.dim = dim;
    b.target.seed = derive_seed(seed, 0);
    b.target.id_offset = 1'000'000;
    b.target.components.push_back({std::vector<double>(dim, 0.0), 0.5, 2000, "target", true});

    b.pool.dim = dim;
    b.pool.seed = derive_seed(seed, 1);
    for (std::size_t c = 0; c < 4; ++c) {
        b.pool.components.push_back({axis(dim, c, 8.0), 1.0, 4500, "far_" + std::to_string(c), false});
    }
    b.pool.components.push_back({axis(dim, 4, 1.0), 0.5, 2000, "planted", true});
    return b;
}

Benchmark multimode_benchmark(std::uint64_t seed) {
    Benchmark b = standard_benchmark(seed);
    b.pool.components.pop_back();
    for (std::size_t m = 0; m < 4; ++m) {
        b.pool.components.push_back(
            {axis(b.pool.dim, 4 + m, 1.0), 0.25, 500, "planted_" + std::to_string(m), true});
    }
    return b;
}

}  // namespace curation
