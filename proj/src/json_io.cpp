#include "curation/json_io.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "curation/error.hpp"

namespace curation::io {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

template <typename J = json>
J parse_line(const std::string& line, const std::filesystem::path& origin, std::size_t lineno) {
    try {
        return J::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, origin.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
}

json config_object(const std::string& text) {
    return text.empty() ? json::object() : json::parse(text);
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::io, "cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorCode::io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json to_json(const TrainConfig& cfg) {
    return {{"batch_size", cfg.batch_size},
            {"max_steps", cfg.max_steps},
            {"step_size", cfg.step_size},
            {"momentum", cfg.momentum},
            {"early_stop_accuracy", cfg.early_stop_accuracy},
            {"val_fraction", cfg.val_fraction},
            {"eval_every", cfg.eval_every},
            {"standardize_features", cfg.standardize_features},
            {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.step_size = j.value("step_size", cfg.step_size);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.early_stop_accuracy = j.value("early_stop_accuracy", cfg.early_stop_accuracy);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.standardize_features = j.value("standardize_features", cfg.standardize_features);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

json to_json(const TrainHistory& history) {
    return {{"steps_run", history.steps_run},
            {"loss_curve", history.loss_curve},
            {"val_acc_curve", history.val_acc_curve},
            {"stopped_early", history.stopped_early}};
}

json estimator_to_json(const ProximityEstimator& est, const TrainConfig& cfg, const TrainHistory& history) {
    json j = {{"dim", est.dim()}, {"bias", est.bias}, {"weights", est.weights}};
    if (est.standardize) {
        j["standardize"] = {{"mean", est.standardize->mean}, {"scale", est.standardize->scale}};
    } else {
        j["standardize"] = nullptr;
    }
    j["train_config"] = to_json(cfg);
    j["history"] = to_json(history);
    return j;
}

ProximityEstimator estimator_from_json(const json& j) {
    ProximityEstimator est;
    try {
        est.weights = j.at("weights").get<std::vector<double>>();
        est.bias = j.at("bias").get<double>();
        if (j.at("dim").get<std::size_t>() != est.weights.size()) {
            throw Error(ErrorCode::parse, "estimator 'dim' disagrees with the weight count");
        }
        if (const auto& st = j.value("standardize", json()); !st.is_null()) {
            est.standardize = Standardization{st.at("mean").get<std::vector<double>>(),
                                              st.at("scale").get<std::vector<double>>()};
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("malformed estimator: ") + e.what());
    }
    for (double w : est.weights) {
        if (!std::isfinite(w)) {
            throw Error(ErrorCode::non_finite, "estimator weights must be finite");
        }
    }
    if (!std::isfinite(est.bias)) {
        throw Error(ErrorCode::non_finite, "estimator bias must be finite");
    }
    if (est.standardize) {
        if (est.standardize->mean.size() != est.dim() || est.standardize->scale.size() != est.dim()) {
            throw Error(ErrorCode::dimension_mismatch, "standardization statistics do not match the estimator dimension");
        }
        for (double s : est.standardize->scale) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw Error(ErrorCode::invalid_argument, "standardization scales must be positive");
            }
        }
    }
    return est;
}

std::string score_table_to_jsonl(const ScoreTable& table, const json& config) {
    check_finite(table);
    std::string out = json{{"scorer", to_string(table.scorer)},
                           {"direction", to_string(table.direction)},
                           {"config", config}}
                          .dump();
    out += '\n';
    for (const auto& e : table.entries) {
        out += json{{"id", e.id}, {"dataset", e.dataset}, {"value", e.value}}.dump();
        out += '\n';
    }
    return out;
}

ScoreTable read_score_table(const std::filesystem::path& path, json* header_config) {
    const auto lines = split_lines(read_file(path));
    if (lines.empty()) {
        throw Error(ErrorCode::parse, path.string() + ": missing score table header");
    }
    ScoreTable table;
    try {
        const auto header = parse_line(lines[0], path, 1);
        table.scorer = parse_scorer_kind(header.at("scorer").get<std::string>());
        table.direction = parse_direction(header.at("direction").get<std::string>());
        if (header_config != nullptr) {
            *header_config = header.value("config", json::object());
        }
        table.entries.reserve(lines.size() - 1);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto j = parse_line(lines[i], path, i + 1);
            table.entries.push_back(
                {j.at("id").get<std::uint64_t>(), j.value("dataset", std::string{}), j.at("value").get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
    check_finite(table);
    return table;
}

std::string manifest_to_jsonl(const SelectionManifest& manifest) {
    std::string out = json{{"k", manifest.k_requested},
                           {"scorer", to_string(manifest.scorer)},
                           {"direction", to_string(manifest.direction)},
                           {"pool_size", manifest.pool_size},
                           {"truncated", manifest.truncated()},
                           {"config", config_object(manifest.config_json)}}
                          .dump();
    out += '\n';
    for (const auto& e : manifest.entries) {
        out += json{{"rank", e.rank}, {"id", e.id}, {"dataset", e.dataset}, {"value", e.value}}.dump();
        out += '\n';
    }
    return out;
}

SelectionManifest read_manifest(const std::filesystem::path& path) {
    const auto lines = split_lines(read_file(path));
    if (lines.empty()) {
        throw Error(ErrorCode::parse, path.string() + ": missing manifest header");
    }
    SelectionManifest m;
    try {
        const auto header = parse_line(lines[0], path, 1);
        m.k_requested = header.at("k").get<std::size_t>();
        m.scorer = parse_scorer_kind(header.at("scorer").get<std::string>());
        m.direction = parse_direction(header.at("direction").get<std::string>());
        m.pool_size = header.value("pool_size", std::size_t{0});
        if (header.contains("config")) {
            m.config_json = header.at("config").dump();
        }
        m.entries.reserve(lines.size() - 1);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto j = parse_line(lines[i], path, i + 1);
            m.entries.push_back({j.at("rank").get<std::size_t>(), j.at("id").get<std::uint64_t>(),
                                 j.value("dataset", std::string{}), j.at("value").get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
    return m;
}

json to_json(const MMDConfig& cfg) {
    return {{"estimator", to_string(cfg.estimator)},
            {"subsample_cap", cfg.subsample_cap},
            {"bandwidth_cap", cfg.bandwidth_cap},
            {"seed", cfg.seed}};
}

json to_json(const MMDMatrix& matrix, const MMDConfig& cfg) {
    return {{"labels", matrix.labels},
            {"sigma", matrix.sigma},
            {"raw", matrix.raw},
            {"normalized", matrix.normalized},
            {"config", to_json(cfg)}};
}

json to_json(const CompositionReport& report) {
    json shares = json::array();
    for (const auto& s : report.shares) {
        shares.push_back({{"dataset", s.dataset}, {"count", s.count}, {"percentage", s.percentage}});
    }
    return {{"total", report.total}, {"shares", shares}};
}

json to_json(const Histogram& histogram) {
    return {{"lo", histogram.lo}, {"hi", histogram.hi}, {"counts", histogram.counts}};
}

json to_json(const HistogramReport& report) {
    json by_dataset = json::object();
    for (const auto& [name, h] : report.by_dataset) {
        by_dataset[name] = to_json(h);
    }
    return {{"overall", to_json(report.overall)}, {"by_dataset", by_dataset}};
}

json to_json(const SummaryStats& stats) {
    return {{"count", stats.count}, {"mean", stats.mean}, {"median", stats.median}, {"p10", stats.p10},
            {"p25", stats.p25},     {"p75", stats.p75},   {"p90", stats.p90}};
}

json to_json(const ShiftReport& report) {
    return {{"pool", to_json(report.pool)},
            {"selected", to_json(report.selected)},
            {"pool_histogram", to_json(report.pool_histogram)},
            {"selected_histogram", to_json(report.selected_histogram)},
            {"selected_beyond_pool_p90", report.selected_beyond_pool_p90}};
}

json to_json(const RecoveryReport& report) {
    return {{"precision_at_k", report.precision_at_k},
            {"recall_at_k", report.recall_at_k},
            {"k", report.k},
            {"planted_count", report.planted_count},
            {"hits", report.hits}};
}

json to_json(const ValidationReport& report) {
    json issues = json::array();
    for (const auto& i : report.issues) {
        std::string kind;
        switch (i.kind) {
            case StoreIssue::Kind::non_finite_vector: kind = "non_finite_vector"; break;
            case StoreIssue::Kind::non_finite_aux: kind = "non_finite_aux"; break;
            case StoreIssue::Kind::duplicate_id: kind = "duplicate_id"; break;
        }
        issues.push_back({{"kind", kind}, {"id", i.id}, {"row", i.row}, {"message", i.message}});
    }
    return {{"ok", report.ok}, {"issues", issues}};
}

json to_json(const DiversityConfig& cfg) {
    return {{"t", cfg.t},
            {"exact_threshold", cfg.exact_threshold},
            {"pair_samples", cfg.pair_samples},
            {"seed", cfg.seed}};
}

json to_json(const MixtureSpec& spec) {
    json components = json::array();
    for (const auto& c : spec.components) {
        components.push_back({{"mean", c.mean},
                              {"std", c.std},
                              {"count", c.count},
                              {"dataset", c.dataset},
                              {"aligned", c.aligned}});
    }
    return {{"dim", spec.dim}, {"seed", spec.seed}, {"id_offset", spec.id_offset}, {"components", components}};
}

MixtureSpec mixture_spec_from_json(const json& j) {
    MixtureSpec spec;
    try {
        spec.dim = j.at("dim").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.id_offset = j.value("id_offset", std::uint64_t{0});
        for (const auto& c : j.at("components")) {
            spec.components.push_back({c.at("mean").get<std::vector<double>>(), c.at("std").get<double>(),
                                       c.at("count").get<std::size_t>(), c.value("dataset", std::string{}),
                                       c.value("aligned", false)});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse, std::string("malformed mixture spec: ") + e.what());
    }
    check_spec(spec);
    return spec;
}

IngestResult read_ingest_jsonl(const std::filesystem::path& path) {
    IngestResult result;
    const auto lines = split_lines(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto j = parse_line<nlohmann::ordered_json>(lines[i], path, i + 1);
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        FeatureRecord r;
        try {
            r.id = j.at("id").get<std::uint64_t>();
            r.dataset = j.value("dataset", std::string{});
            r.key = j.value("key", std::string{});
            for (const auto& v : j.at("vector")) {
                r.vector.push_back(static_cast<float>(v.get<double>()));
            }
            std::vector<std::string> names;
            if (j.contains("aux")) {
                for (const auto& [name, value] : j.at("aux").items()) {
                    names.push_back(name);
                    r.aux.push_back(static_cast<float>(value.get<double>()));
                }
            }
            if (i == 0) {
                result.aux_names = names;
            } else if (names != result.aux_names) {
                throw Error(ErrorCode::invalid_argument, where + ": aux channels differ from the first record");
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, where + ": " + e.what());
        }
        result.records.push_back(std::move(r));
    }
    return result;
}

}  // namespace curation::io
