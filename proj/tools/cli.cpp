#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "curation/baseline_scorers.hpp"
#include "curation/diversity.hpp"
#include "curation/error.hpp"
#include "curation/feature_store.hpp"
#include "curation/json_io.hpp"
#include "curation/kernel_stats.hpp"
#include "curation/parallel.hpp"
#include "curation/proximity_estimator.hpp"
#include "curation/random.hpp"
#include "curation/selection.hpp"
#include "curation/synthetic.hpp"

namespace curation::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

// Reads CLI defaults from a JSON object. Top-level keys set global options;
// an object under a subcommand name sets that subcommand's options.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) {
                continue;
            }
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0) {
                j[name] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        if (!j.is_object()) {
            throw CLI::ConfigError("JSON config must be an object");
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

  private:
    static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

    static void flatten(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                flatten(value, nested, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(scalar(v));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }
};

struct Options {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string log_level = "warn";
    std::string out;

    // ingest
    std::string in;
    // validate / diversity / mmd
    std::vector<std::string> stores;
    bool by_dataset = false;
    std::string estimator = "biased";
    std::size_t subsample_cap = 2000;
    std::size_t bandwidth_cap = 1000;
    // train
    std::string target;
    std::string pool;
    TrainConfig train;
    // score
    std::string method = "learned";
    std::string est;
    std::size_t target_cap = 2000;
    // select / report
    std::string scores;
    std::size_t k = 0;
    std::string manifest;
    std::string truth;
    std::string report_type;
    std::size_t bins = 50;
    // diversity
    DiversityConfig diversity;
    // synth
    std::string spec;
    std::string preset;
    std::string target_out;
};

std::string file_label(const std::string& path) { return fs::path(path).filename().string(); }

json base_config(const std::string& command, const Options& o) { return {{"command", command}, {"seed", o.seed}}; }

void emit(const json& doc, const std::string& out) {
    const auto text = doc.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        io::write_atomic(out, text);
    }
}

int cmd_ingest(const Options& o) {
    const auto dump = io::read_ingest_jsonl(o.in);
    const auto summary = write_store(dump.records, o.out, dump.aux_names);
    spdlog::info("ingested {} records of dimension {} into {}", summary.count, summary.dim, o.out);
    emit({{"count", summary.count}, {"dim", summary.dim}, {"aux_names", dump.aux_names}}, "");
    return 0;
}

int cmd_validate(const Options& o) {
    const auto store = FeatureStore::open(o.stores.front());
    const auto report = validate_store(store);
    auto doc = io::to_json(report);
    doc["count"] = store.size();
    doc["dim"] = store.dim();
    emit(doc, o.out);
    if (!report.ok) {
        spdlog::error("{}: {} issue(s)", o.stores.front(), report.issues.size());
        return 1;
    }
    return 0;
}

int cmd_mmd(const Options& o) {
    MMDConfig cfg;
    cfg.estimator = parse_mmd_estimator(o.estimator);
    cfg.subsample_cap = o.subsample_cap;
    cfg.bandwidth_cap = o.bandwidth_cap;
    cfg.seed = o.seed;

    std::vector<NamedGroup> groups;
    std::uint64_t stream = 1000;
    auto add_group = [&](std::string label, const FeatureStore& store, const std::vector<std::size_t>& rows) {
        // Pre-subsample so large stores are never copied whole.
        Rng rng(derive_seed(o.seed, stream++));
        const auto pick = subsample_indices(rows.size(), cfg.subsample_cap, rng);
        std::vector<std::size_t> chosen;
        chosen.reserve(pick.size());
        for (std::size_t p : pick) {
            chosen.push_back(rows[p]);
        }
        groups.push_back({std::move(label), FeatureMatrix::gather(store, chosen)});
    };

    std::vector<FeatureStore> stores;
    for (const auto& path : o.stores) {
        stores.push_back(FeatureStore::open(path));
    }
    if (o.by_dataset) {
        std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> members;
        for (std::size_t s = 0; s < stores.size(); ++s) {
            for (std::size_t i = 0; i < stores[s].size(); ++i) {
                members[stores[s].dataset(i)].emplace_back(s, i);
            }
        }
        for (const auto& [label, rows] : members) {
            // Groups spanning several stores are gathered store by store.
            std::map<std::size_t, std::vector<std::size_t>> per_store;
            for (const auto& [s, i] : rows) {
                per_store[s].push_back(i);
            }
            if (per_store.size() == 1) {
                add_group(label, stores[per_store.begin()->first], per_store.begin()->second);
            } else {
                FeatureMatrix merged;
                for (const auto& [s, idx] : per_store) {
                    const auto part = FeatureMatrix::gather(stores[s], idx);
                    for (std::size_t r = 0; r < part.rows(); ++r) {
                        merged.push_back(part.row(r));
                    }
                }
                groups.push_back({label, std::move(merged)});
            }
        }
    } else {
        for (std::size_t s = 0; s < stores.size(); ++s) {
            std::vector<std::size_t> rows(stores[s].size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                rows[i] = i;
            }
            add_group(fs::path(o.stores[s]).stem().string(), stores[s], rows);
        }
    }

    const auto matrix = pairwise_mmd_matrix(groups, cfg);
    auto doc = io::to_json(matrix, cfg);
    auto provenance = base_config("mmd", o);
    provenance["stores"] = json::array();
    for (const auto& s : o.stores) {
        provenance["stores"].push_back(file_label(s));
    }
    provenance["by_dataset"] = o.by_dataset;
    doc["config"]["provenance"] = provenance;
    emit(doc, o.out);
    return 0;
}

int cmd_train(const Options& o) {
    const auto target = FeatureStore::open(o.target);
    const auto pool = FeatureStore::open(o.pool);
    TrainConfig cfg = o.train;
    cfg.seed = o.seed;
    const auto result = train_estimator(target, pool, cfg);
    const auto& h = result.history;
    spdlog::info("trained for {} steps (stopped early: {}), final validation accuracy {:.4f}", h.steps_run,
                 h.stopped_early, h.val_acc_curve.empty() ? 0.0 : h.val_acc_curve.back());

    auto doc = io::estimator_to_json(result.estimator, cfg, h);
    auto provenance = base_config("train", o);
    provenance["target"] = file_label(o.target);
    provenance["pool"] = file_label(o.pool);
    doc["provenance"] = provenance;
    io::write_atomic(o.out, doc.dump() + "\n");
    return 0;
}

int cmd_score(const Options& o) {
    const ScorerKind kind = parse_scorer_kind(o.method);
    const auto pool = FeatureStore::open(o.pool);
    auto provenance = base_config("score", o);
    provenance["method"] = to_string(kind);
    provenance["pool"] = file_label(o.pool);

    ScoreTable table;
    if (kind == ScorerKind::learned_estimator) {
        if (o.est.empty()) {
            throw Error(ErrorCode::invalid_argument, "--est is required for the learned scorer");
        }
        const auto est_doc = json::parse(io::read_file(o.est));
        const auto est = io::estimator_from_json(est_doc);
        if (est.dim() != pool.dim()) {
            throw Error(ErrorCode::dimension_mismatch, "dimension mismatch: estimator has dimension " +
                                                           std::to_string(est.dim()) + ", store " + o.pool +
                                                           " has dimension " + std::to_string(pool.dim()));
        }
        table = score_store(est, pool);
        provenance["est"] = file_label(o.est);
        provenance["train_config"] = est_doc.value("train_config", json::object());
    } else {
        std::optional<FeatureStore> target;
        if (!o.target.empty()) {
            target = FeatureStore::open(o.target);
            provenance["target"] = file_label(o.target);
        }
        BaselineConfig cfg{o.target_cap, o.seed};
        provenance["target_cap"] = o.target_cap;
        table = score_store_baseline(pool, kind, target ? &*target : nullptr, cfg);
    }
    io::write_atomic(o.out, io::score_table_to_jsonl(table, provenance));
    spdlog::info("scored {} samples with {}", table.size(), to_string(kind));
    return 0;
}

int cmd_select(const Options& o) {
    json score_config;
    const auto table = io::read_score_table(o.scores, &score_config);
    auto manifest = top_k_select(table, o.k);
    auto provenance = base_config("select", o);
    provenance["k"] = o.k;
    provenance["scores"] = file_label(o.scores);
    provenance["score_config"] = score_config;
    manifest.config_json = provenance.dump();
    io::write_atomic(o.out, io::manifest_to_jsonl(manifest));
    if (manifest.truncated()) {
        spdlog::warn("k = {} exceeds the pool size {}; kept every sample", o.k, table.size());
    }
    return 0;
}

int cmd_report(const Options& o) {
    auto provenance = base_config("report", o);
    provenance["type"] = o.report_type;
    json body;
    auto need = [&](const std::string& value, const char* flag) {
        if (value.empty()) {
            throw Error(ErrorCode::invalid_argument, std::string(flag) + " is required for report type " + o.report_type);
        }
        provenance[std::string(flag).substr(2)] = file_label(value);
    };
    if (o.report_type == "composition") {
        need(o.manifest, "--manifest");
        body = io::to_json(mixture_composition(io::read_manifest(o.manifest)));
    } else if (o.report_type == "histogram") {
        need(o.scores, "--scores");
        provenance["bins"] = o.bins;
        provenance["by_dataset"] = o.by_dataset;
        body = io::to_json(score_histogram(io::read_score_table(o.scores), o.bins, o.by_dataset));
    } else if (o.report_type == "shift") {
        need(o.scores, "--scores");
        need(o.manifest, "--manifest");
        provenance["bins"] = o.bins;
        body = io::to_json(selection_shift_report(io::read_score_table(o.scores), io::read_manifest(o.manifest), o.bins));
    } else if (o.report_type == "recovery") {
        need(o.manifest, "--manifest");
        need(o.truth, "--truth");
        body = io::to_json(recovery_eval(io::read_manifest(o.manifest), read_truth(o.truth)));
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown report type '" + o.report_type + "'");
    }
    emit({{"type", o.report_type}, {"config", provenance}, {"report", body}}, o.out);
    return 0;
}

int cmd_diversity(const Options& o) {
    const auto store = FeatureStore::open(o.stores.front());
    std::vector<std::size_t> rows;
    if (!o.manifest.empty()) {
        std::unordered_map<std::uint64_t, std::size_t> row_of;
        row_of.reserve(store.size());
        for (std::size_t i = 0; i < store.size(); ++i) {
            row_of.emplace(store.id(i), i);
        }
        for (const auto& e : io::read_manifest(o.manifest).entries) {
            const auto it = row_of.find(e.id);
            if (it == row_of.end()) {
                throw Error(ErrorCode::unknown_id, "manifest id " + std::to_string(e.id) + " is not in " + o.stores.front());
            }
            rows.push_back(it->second);
        }
    } else {
        rows.resize(store.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i] = i;
        }
    }
    DiversityConfig cfg = o.diversity;
    cfg.seed = o.seed;
    const double value = diversity(store, rows, cfg);

    auto provenance = base_config("diversity", o);
    provenance["store"] = file_label(o.stores.front());
    if (!o.manifest.empty()) {
        provenance["manifest"] = file_label(o.manifest);
    }
    provenance["diversity"] = io::to_json(cfg);
    emit({{"diversity", value},
          {"n", rows.size()},
          {"mode", rows.size() <= cfg.exact_threshold ? "exact" : "monte_carlo"},
          {"config", provenance}},
         o.out);
    return 0;
}

int cmd_synth(const Options& o) {
    json summary = json::object();
    if (!o.preset.empty()) {
        Benchmark b;
        if (o.preset == "standard") {
            b = standard_benchmark(o.seed);
        } else if (o.preset == "multimode") {
            b = multimode_benchmark(o.seed);
        } else {
            throw Error(ErrorCode::invalid_argument, "unknown preset '" + o.preset + "'");
        }
        const auto pool = write_synthetic(gen_mixture(b.pool), o.out);
        summary["pool"] = {{"path", o.out}, {"count", pool.count}, {"dim", pool.dim}};
        if (!o.target_out.empty()) {
            const auto target = write_synthetic(gen_mixture(b.target), o.target_out);
            summary["target"] = {{"path", o.target_out}, {"count", target.count}, {"dim", target.dim}};
        }
        summary["k"] = b.k;
    } else if (!o.spec.empty()) {
        const auto spec = io::mixture_spec_from_json(json::parse(io::read_file(o.spec)));
        const auto pool = write_synthetic(gen_mixture(spec), o.out);
        summary["pool"] = {{"path", o.out}, {"count", pool.count}, {"dim", pool.dim}};
    } else {
        throw Error(ErrorCode::invalid_argument, "synth needs --spec or --preset");
    }
    emit(summary, "");
    return 0;
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
    Options o;
    CLI::App app{
        "Proximity-based data curation: score a candidate feature pool against a target feature set and emit a "
        "ranked top-K training manifest, with MMD, diversity, and composition diagnostics.",
        "curate"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with option defaults; command-line flags take precedence");
    app.require_subcommand(1);
    app.add_option("--seed", o.seed, "Seed for every random choice (splits, batches, subsamples)")->capture_default_str();
    app.add_option("--threads", o.threads, "Worker threads; results do not depend on this")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error, or off")
        ->capture_default_str()
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    auto* ingest = app.add_subcommand("ingest", "Convert a JSON-lines vector dump into a feature store");
    ingest->add_option("--in", o.in, "JSON lines: {id, dataset, vector, [key], [aux: {name: value}]}")->required();
    ingest->add_option("--out", o.out, "Output .fst path")->required();

    auto* validate = app.add_subcommand("validate", "Scan a feature store for non-finite values and duplicate ids");
    validate->add_option("--store", o.stores, "Feature store")->required()->expected(1);
    validate->add_option("--out", o.out, "Report path (default: stdout)");

    auto* mmd = app.add_subcommand("mmd", "Pairwise squared-MMD matrix between stores or dataset labels");
    mmd->add_option("--store", o.stores, "Feature store; repeat for several")->required();
    mmd->add_flag("--by-dataset", o.by_dataset, "Group rows by dataset label instead of by store");
    mmd->add_option("--estimator", o.estimator, "biased (V-statistic) or unbiased (U-statistic)")
        ->capture_default_str()
        ->check(CLI::IsMember({"biased", "unbiased", "biased_v_statistic", "unbiased_u_statistic"}));
    mmd->add_option("--subsample-cap", o.subsample_cap, "Points per group")->capture_default_str()->check(CLI::Range(2, 1 << 30));
    mmd->add_option("--bandwidth-cap", o.bandwidth_cap, "Points used by the median heuristic")
        ->capture_default_str()
        ->check(CLI::Range(2, 1 << 30));
    mmd->add_option("--out", o.out, "Output JSON (default: stdout)");

    auto* train = app.add_subcommand("train", "Train the proximity estimator (target = positives, pool = negatives)");
    train->add_option("--target", o.target, "Target-domain feature store")->required();
    train->add_option("--pool", o.pool, "Candidate pool feature store")->required();
    train->add_option("--out", o.out, "Estimator JSON path")->required();
    train->add_flag("--standardize", o.train.standardize_features, "Standardize features with training statistics");
    train->add_option("--batch-size", o.train.batch_size, "Balanced batch size (even)")->capture_default_str();
    train->add_option("--max-steps", o.train.max_steps, "Step budget")->capture_default_str();
    train->add_option("--step-size", o.train.step_size, "SGD step size")->capture_default_str();
    train->add_option("--momentum", o.train.momentum, "SGD momentum")->capture_default_str();
    train->add_option("--early-stop", o.train.early_stop_accuracy,
                      "Validation accuracy that stops training (default 0.90, the reference protocol)")
        ->capture_default_str();
    train->add_option("--val-fraction", o.train.val_fraction, "Held-out fraction per class")->capture_default_str();
    train->add_option("--eval-every", o.train.eval_every, "Steps between validation checks")->capture_default_str();

    auto* score = app.add_subcommand("score", "Score every sample of a pool");
    score->add_option("--method", o.method, "learned, avgdist, ppl, or dppl")
        ->capture_default_str()
        ->check(CLI::IsMember({"learned", "avgdist", "ppl", "dppl", "learned_estimator", "avg_distance", "target_ppl",
                               "delta_ppl"}));
    score->add_option("--est", o.est, "Estimator JSON (learned)");
    score->add_option("--pool", o.pool, "Pool feature store")->required();
    score->add_option("--target", o.target, "Target feature store (avgdist)");
    score->add_option("--target-cap", o.target_cap, "Target subsample size for avgdist")->capture_default_str();
    score->add_option("--out", o.out, "Score table (JSON lines)")->required();

    auto* select = app.add_subcommand("select", "Keep the top-K samples of a score table");
    select->add_option("--scores", o.scores, "Score table (JSON lines)")->required();
    select->add_option("--k", o.k,
                       "Number of samples to keep. Required; the reference curation run kept 1,200,000")
        ->required();
    select->add_option("--out", o.out, "Manifest (JSON lines)")->required();

    auto* report = app.add_subcommand("report", "Composition, histogram, shift, or recovery report");
    report->add_option("--type", o.report_type, "composition, histogram, shift, or recovery")
        ->required()
        ->check(CLI::IsMember({"composition", "histogram", "shift", "recovery"}));
    report->add_option("--manifest", o.manifest, "Selection manifest");
    report->add_option("--scores", o.scores, "Score table of the whole pool");
    report->add_option("--truth", o.truth, "Ground-truth sidecar of a synthetic pool");
    report->add_option("--bins", o.bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
    report->add_flag("--by-dataset", o.by_dataset, "Per-dataset histogram series");
    report->add_option("--out", o.out, "Output JSON (default: stdout)");

    auto* div = app.add_subcommand("diversity", "Uniformity-based diversity of a store or of a manifest's samples");
    div->add_option("--store", o.stores, "Feature store")->required()->expected(1);
    div->add_option("--manifest", o.manifest, "Restrict to the samples of this manifest");
    div->add_option("--t", o.diversity.t, "Kernel temperature")->capture_default_str();
    div->add_option("--exact-threshold", o.diversity.exact_threshold, "Largest N computed exactly")->capture_default_str();
    div->add_option("--pair-samples", o.diversity.pair_samples, "Sampled pairs above the threshold")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    div->add_option("--out", o.out, "Output JSON (default: stdout)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic Gaussian-mixture pool with ground truth");
    auto* spec_opt = synth->add_option("--spec", o.spec, "Mixture spec JSON");
    synth->add_option("--preset", o.preset, "standard or multimode planted-subset benchmark")
        ->check(CLI::IsMember({"standard", "multimode"}))
        ->excludes(spec_opt);
    synth->add_option("--out", o.out, "Pool .fst path")->required();
    synth->add_option("--target-out", o.target_out, "Target .fst path (presets only)");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, std::cout, std::cerr);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, std::cout, std::cerr);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    auto logger = std::make_shared<spdlog::logger>("curate", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_level(spdlog::level::from_str(o.log_level));
    spdlog::set_default_logger(logger);
    parallel::set_threads(o.threads);

    try {
        if (ingest->parsed()) return cmd_ingest(o);
        if (validate->parsed()) return cmd_validate(o);
        if (mmd->parsed()) return cmd_mmd(o);
        if (train->parsed()) return cmd_train(o);
        if (score->parsed()) return cmd_score(o);
        if (select->parsed()) return cmd_select(o);
        if (report->parsed()) return cmd_report(o);
        if (div->parsed()) return cmd_diversity(o);
        if (synth->parsed()) return cmd_synth(o);
    } catch (const Error& e) {
        print_error(std::string(to_string(e.code())), e.what());
        return 1;
    } catch (const json::exception& e) {
        print_error("parse", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    print_error("usage", "no subcommand given");
    return 2;
}

}  // namespace curation::cli
