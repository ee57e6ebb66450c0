#include "scogen/pipeline.hpp"

#include "scogen/graph.hpp"
#include "scogen/hashing.hpp"
#include "scogen/jsonl.hpp"
#include "scogen/log.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>

namespace fs = std::filesystem;

namespace scogen {

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Curate: return "curate";
        case Stage::Extract: return "extract";
        case Stage::BuildGraph: return "build-graph";
        case Stage::Sample: return "sample";
        case Stage::Synthesize: return "synthesize";
    }
    return "curate";
}

std::optional<Stage> stage_from_string(std::string_view s) {
    for (Stage st : kAllStages) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

std::string_view to_string(StageStatus s) {
    switch (s) {
        case StageStatus::Ran: return "ran";
        case StageStatus::Skipped: return "skipped (up to date)";
        case StageStatus::Failed: return "failed";
        case StageStatus::WouldRun: return "would run";
        case StageStatus::WouldSkip: return "would skip (up to date)";
    }
    return "failed";
}

std::vector<Stage> PipelineConfig::default_stages() const {
    std::vector<Stage> out;
    for (Stage s : kAllStages) {
        auto it = enabled.find(s);
        if (it == enabled.end() || it->second) out.push_back(s);
    }
    return out;
}

ArtifactPaths::ArtifactPaths(const fs::path& work_dir)
    : curated(work_dir / "curated.jsonl"),
      curation_report(work_dir / "curation_report.json"),
      elements(work_dir / "elements.jsonl"),
      extraction_skips(work_dir / "extraction_skips.jsonl"),
      graph(work_dir / "graph.json"),
      features(work_dir / "features.jsonl"),
      records(work_dir / "records.jsonl"),
      sft(work_dir / "sft.jsonl"),
      manifests(work_dir / "manifests") {}

// ---------------------------------------------------------------------------
// Config

namespace {

const char* const kTopLevelKeys[] = {"seed",     "work_dir", "input",     "workers",  "curation", "backend",
                                     "extraction", "sampling", "synthesis", "stages"};

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return (base / p).lexically_normal();
}

template <typename Fn>
void section(const nlohmann::json& j, const char* key, std::vector<std::string>& errors, Fn&& fn) {
    if (!j.contains(key)) return;
    try {
        fn(j.at(key));
    } catch (const std::exception& e) {
        errors.push_back(std::string(key) + ": " + e.what());
    }
}

void check_unsigned(const nlohmann::json& j, const char* section_name, const char* key, std::uint64_t min,
                    std::vector<std::string>& errors) {
    if (!j.is_object() || !j.contains(key)) return;
    const auto& v = j.at(key);
    const std::string name = std::string(section_name) + "." + key;
    if (!v.is_number_integer()) {
        errors.push_back(name + " must be an integer");
    } else if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        errors.push_back(name + " must be >= " + std::to_string(min) + ", got " + v.dump());
    }
}

}  // namespace

ConfigLoad load_config(const fs::path& path) {
    ConfigLoad load;
    auto& errors = load.errors;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jsonl::read_text(path));
    } catch (const std::exception& e) {
        errors.push_back("cannot read config " + path.string() + ": " + e.what());
        return load;
    }
    if (!j.is_object()) {
        errors.push_back("config must be a JSON object");
        return load;
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(kTopLevelKeys), std::end(kTopLevelKeys), key) == std::end(kTopLevelKeys)) {
            errors.push_back("unknown config key '" + key + "'");
        }
    }

    const fs::path base = fs::absolute(path).parent_path();
    PipelineConfig cfg;
    section(j, "seed", errors, [&](const auto& v) { cfg.seed = v.template get<std::uint64_t>(); });
    section(j, "workers", errors, [&](const auto& v) { cfg.workers = v.template get<std::size_t>(); });
    if (!j.contains("work_dir")) errors.push_back("work_dir is required");
    section(j, "work_dir", errors,
                  [&](const auto& v) { cfg.work_dir = resolve(base, v.template get<std::string>()); });
    section(j, "input", errors, [&](const auto& v) { cfg.input = resolve(base, v.template get<std::string>()); });
    section(j, "curation", errors, [&](const auto& v) { cfg.curation = v.template get<CurationConfig>(); });
    section(j, "backend", errors, [&](const auto& v) {
        cfg.backend = v.template get<BackendConfig>();
        cfg.backend.fixtures = resolve(base, cfg.backend.fixtures);
    });
    section(j, "extraction", errors, [&](const auto& v) {
        cfg.extraction.max_attempts = v.value("max_attempts", cfg.extraction.max_attempts);
    });
    cfg.sampling.rng_seed = cfg.seed;
    section(j, "sampling", errors, [&](const auto& v) {
        check_unsigned(v, "sampling", "complexity", 1, errors);
        check_unsigned(v, "sampling", "count", 1, errors);
        check_unsigned(v, "sampling", "max_resample_attempts", 0, errors);
        nlohmann::json s = v;
        if (!s.contains("rng_seed")) s["rng_seed"] = cfg.seed;
        cfg.sampling = s.template get<SamplerConfig>();
        cfg.strategy = strategy_from_string(v.value("strategy", std::string("random")));
        cfg.feature_sets = v.value("count", cfg.feature_sets);
    });
    section(j, "synthesis", errors, [&](const auto& v) {
        cfg.synthesis.record_timestamps = v.value("record_timestamps", false);
        cfg.export_options.dedup_problems = v.value("dedup_problems", false);
    });
    section(j, "stages", errors, [&](const auto& v) {
        for (const auto& [name, on] : v.items()) {
            auto st = stage_from_string(name);
            if (!st) {
                errors.push_back("stages: unknown stage '" + name + "'");
                continue;
            }
            cfg.enabled[*st] = on.template get<bool>();
        }
    });

    for (auto& e : validate(cfg)) errors.push_back(std::move(e));
    std::sort(errors.begin(), errors.end());
    errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
    if (errors.empty()) load.config = std::move(cfg);
    return load;
}

std::vector<std::string> validate_config(const fs::path& path) { return load_config(path).errors; }

std::vector<std::string> validate(const PipelineConfig& cfg) {
    std::vector<std::string> errors;
    if (cfg.work_dir.empty()) errors.push_back("work_dir is required");
    if (cfg.workers < 1) errors.push_back("workers must be >= 1");
    const auto stages = cfg.default_stages();
    const bool curate = std::find(stages.begin(), stages.end(), Stage::Curate) != stages.end();
    if (curate) {
        if (cfg.input.empty()) {
            errors.push_back("input is required for the curate stage");
        } else if (!fs::is_regular_file(cfg.input)) {
            errors.push_back("input file not found: " + cfg.input.string());
        }
    }
    const auto& c = cfg.curation;
    if (c.min_chars > c.max_chars) errors.push_back("curation.min_chars must not exceed curation.max_chars");
    if (!(c.garbled_max >= 0.0 && c.garbled_max <= 1.0)) errors.push_back("curation.garbled_max must lie in [0, 1]");
    if (!(c.script_min >= 0.0 && c.script_min <= 1.0)) errors.push_back("curation.script_min must lie in [0, 1]");
    const auto& m = c.minhash;
    if (m.permutation_count < 1) errors.push_back("curation.minhash.permutations must be >= 1");
    if (m.shingle_width < 1) errors.push_back("curation.minhash.shingle_width must be >= 1");
    if (m.bands * m.rows != m.permutation_count) {
        errors.push_back("curation.minhash.bands * rows must equal permutations");
    }
    if (!(m.threshold > 0.0 && m.threshold <= 1.0)) errors.push_back("curation.minhash.threshold must lie in (0, 1]");
    for (auto& e : cfg.backend.validate()) errors.push_back(std::move(e));
    if (cfg.backend.mode == BackendMode::Mock && !cfg.backend.fixtures.empty() &&
        !fs::is_directory(cfg.backend.fixtures)) {
        errors.push_back("backend.fixtures directory not found: " + cfg.backend.fixtures.string());
    }
    if (cfg.extraction.max_attempts < 1) errors.push_back("extraction.max_attempts must be >= 1");
    for (auto& e : cfg.sampling.validate()) errors.push_back(std::move(e));
    if (cfg.feature_sets < 1) errors.push_back("sampling.count must be >= 1");
    return errors;
}

// ---------------------------------------------------------------------------
// Manifests

void to_json(nlohmann::json& j, const StageManifest& m) {
    j = {{"stage", m.stage},         {"status", m.status},           {"inputs", m.inputs},
         {"outputs", m.outputs},     {"counts", m.counts},           {"config_hash", m.config_hash},
         {"wall_seconds", m.wall_seconds}};
}

void from_json(const nlohmann::json& j, StageManifest& m) {
    m.stage = j.at("stage").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.counts = j.value("counts", std::map<std::string, std::size_t>{});
    m.config_hash = j.at("config_hash").get<std::string>();
    m.wall_seconds = j.value("wall_seconds", 0.0);
}

std::string sha256_directory(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) {
        acc += fs::relative(f, dir).generic_string();
        acc += '\0';
        acc += sha256_file(f);
        acc += '\n';
    }
    return sha256_hex(acc);
}

namespace {

struct StagePlan {
    Stage stage;
    std::vector<std::pair<std::string, fs::path>> inputs;  // name -> file (or directory)
    std::vector<fs::path> outputs;
    nlohmann::json config;
    std::function<std::map<std::string, std::size_t>()> body;
};

struct InputDigests {
    std::map<std::string, std::string> digests;
    std::string missing;  // first missing input, if any
};

InputDigests digest_inputs(const StagePlan& plan) {
    InputDigests d;
    for (const auto& [name, path] : plan.inputs) {
        if (fs::is_directory(path)) {
            d.digests[name] = sha256_directory(path);
        } else if (fs::is_regular_file(path)) {
            d.digests[name] = sha256_file(path);
        } else if (d.missing.empty()) {
            d.missing = path.string();
        }
    }
    return d;
}

std::string config_hash(const StagePlan& plan) {
    return sha256_hex(jsonl::dump({{"stage", to_string(plan.stage)}, {"config", plan.config}}));
}

fs::path manifest_path(const ArtifactPaths& paths, Stage s) {
    return paths.manifests / (std::string(to_string(s)) + ".json");
}

fs::path partial_path(const ArtifactPaths& paths, Stage s) {
    return paths.manifests / (std::string(to_string(s)) + ".partial");
}

bool up_to_date(const ArtifactPaths& paths, const fs::path& work_dir, const StagePlan& plan,
                const InputDigests& inputs) {
    const fs::path mp = manifest_path(paths, plan.stage);
    if (!inputs.missing.empty() || !fs::is_regular_file(mp) || fs::exists(partial_path(paths, plan.stage))) {
        return false;
    }
    StageManifest m;
    try {
        m = nlohmann::json::parse(jsonl::read_text(mp)).get<StageManifest>();
    } catch (const std::exception&) {
        return false;
    }
    if (m.status != "complete" || m.config_hash != config_hash(plan) || m.inputs != inputs.digests) return false;
    if (m.outputs.size() != plan.outputs.size()) return false;
    for (const auto& out : plan.outputs) {
        const std::string rel = fs::relative(out, work_dir).generic_string();
        auto it = m.outputs.find(rel);
        if (it == m.outputs.end() || !fs::is_regular_file(out) || sha256_file(out) != it->second) return false;
    }
    return true;
}

nlohmann::json backend_identity(const BackendConfig& b) {
    // Settings that change generated text; parallelism and timeouts do not.
    return {{"mode", b.mode == BackendMode::Mock ? "mock" : "live"},
            {"endpoint", b.endpoint},
            {"model_id", b.model_id},
            {"temperature", b.temperature},
            {"max_output_tokens", b.max_output_tokens},
            {"thinking_mode", b.thinking_mode}};
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& opts) {
    RunResult result;
    const ArtifactPaths paths(cfg.work_dir);
    std::vector<Stage> selected = opts.stages.empty() ? cfg.default_stages() : opts.stages;
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

    std::unique_ptr<Backend> owned;
    auto backend = [&]() -> Backend& {
        if (opts.backend) return *opts.backend;
        if (!owned) owned = make_backend(cfg.backend);
        return *owned;
    };
    const bool mock = cfg.backend.mode == BackendMode::Mock && !opts.backend;
    auto add_fixture_input = [&](StagePlan& plan) {
        if (mock) plan.inputs.emplace_back("mock_fixtures", cfg.backend.fixtures);
    };

    auto plan_for = [&](Stage s) {
        StagePlan plan{s, {}, {}, nlohmann::json::object(), {}};
        switch (s) {
            case Stage::Curate:
                plan.inputs = {{"seed_documents", cfg.input}};
                plan.outputs = {paths.curated, paths.curation_report};
                plan.config = {{"curation", cfg.curation}, {"seed", cfg.seed}};
                plan.body = [&] {
                    const auto docs = read_seed_documents(cfg.input);
                    auto res = curate(docs, cfg.curation, cfg.seed, cfg.workers);
                    write_seed_documents(paths.curated, res.docs);
                    jsonl::write_text(paths.curation_report, jsonl::dump_pretty(nlohmann::json(res.report)) + "\n");
                    return std::map<std::string, std::size_t>{
                        {"input", res.report.input}, {"survivors", res.report.survivors},
                        {"rejected", res.report.rejected()}};
                };
                break;
            case Stage::Extract:
                plan.inputs = {{"curated.jsonl", paths.curated}};
                add_fixture_input(plan);
                plan.outputs = {paths.elements, paths.extraction_skips};
                plan.config = {{"backend", backend_identity(cfg.backend)},
                               {"max_attempts", cfg.extraction.max_attempts}};
                plan.body = [&] {
                    const auto docs = read_seed_documents(paths.curated);
                    const auto outcomes = extract_batch(docs, backend(), cfg.backend, cfg.extraction);
                    std::vector<ExtractedElements> ok;
                    std::vector<Skip> skips;
                    for (const auto& o : outcomes) {
                        if (auto* e = std::get_if<ExtractedElements>(&o)) {
                            ok.push_back(*e);
                        } else {
                            skips.push_back(std::get<Skip>(o));
                        }
                    }
                    jsonl::write(paths.elements, ok);
                    jsonl::write(paths.extraction_skips, skips);
                    if (!docs.empty() && ok.empty()) throw std::runtime_error("no document could be extracted");
                    return std::map<std::string, std::size_t>{
                        {"documents", docs.size()}, {"extracted", ok.size()}, {"skipped", skips.size()}};
                };
                break;
            case Stage::BuildGraph:
                plan.inputs = {{"elements.jsonl", paths.elements}};
                plan.outputs = {paths.graph};
                plan.body = [&] {
                    std::vector<ExtractedElements> elements;
                    for (const auto& j : jsonl::read(paths.elements)) elements.push_back(j.get<ExtractedElements>());
                    KnowledgeGraph g = build_graph(elements);
                    g.set_source_digest(sha256_file(paths.elements));
                    save_graph(g, paths.graph);
                    const auto stats = graph_stats(g);
                    std::size_t edges = 0;
                    for (const auto& [r, n] : stats.edges_per_relation) edges += n;
                    return std::map<std::string, std::size_t>{
                        {"documents", g.document_count()}, {"nodes", g.nodes().size()}, {"edges", edges}};
                };
                break;
            case Stage::Sample:
                plan.inputs = {{"graph.json", paths.graph}};
                if (cfg.strategy == Strategy::Llm) add_fixture_input(plan);
                plan.outputs = {paths.features};
                plan.config = {{"sampling", cfg.sampling},
                               {"strategy", to_string(cfg.strategy)},
                               {"count", cfg.feature_sets}};
                if (cfg.strategy == Strategy::Llm) plan.config["backend"] = backend_identity(cfg.backend);
                plan.body = [&] {
                    const KnowledgeGraph g = load_graph(paths.graph);
                    std::vector<FeatureSet> sets;
                    if (cfg.strategy == Strategy::Llm) {
                        sets = sample_feature_sets(g, cfg.sampling, cfg.strategy, cfg.feature_sets, &backend(),
                                                   &cfg.backend);
                    } else {
                        sets = sample_feature_sets(g, cfg.sampling, cfg.strategy, cfg.feature_sets);
                    }
                    write_feature_sets(paths.features, sets);
                    if (sets.empty()) throw std::runtime_error("no feature set could be sampled");
                    return std::map<std::string, std::size_t>{{"requested", cfg.feature_sets},
                                                              {"feature_sets", sets.size()}};
                };
                break;
            case Stage::Synthesize:
                plan.inputs = {{"features.jsonl", paths.features}};
                add_fixture_input(plan);
                plan.outputs = {paths.records, paths.sft};
                plan.config = {{"backend", backend_identity(cfg.backend)},
                               {"record_timestamps", cfg.synthesis.record_timestamps},
                               {"dedup_problems", cfg.export_options.dedup_problems}};
                plan.body = [&] {
                    const auto sets = read_feature_sets(paths.features);
                    auto records = synthesize_batch(sets, backend(), cfg.backend, cfg.synthesis);
                    answer_batch(records, backend(), cfg.backend, cfg.synthesis);
                    write_records(paths.records, records);
                    const auto exported = export_sft(records, paths.sft, cfg.export_options);
                    std::size_t complete = 0;
                    for (const auto& r : records) complete += r.status == RecordStatus::Complete;
                    return std::map<std::string, std::size_t>{{"records", records.size()},
                                                              {"complete", complete},
                                                              {"exported", exported.written},
                                                              {"duplicates_dropped", exported.skipped_duplicate}};
                };
                break;
        }
        return plan;
    };

    bool upstream_changes = false;
    for (Stage s : selected) {
        StagePlan plan = plan_for(s);
        const std::string name(to_string(s));
        InputDigests inputs;
        try {
            inputs = digest_inputs(plan);
        } catch (const std::exception& e) {
            inputs.missing = e.what();
        }
        const bool fresh = !(opts.dry_run && upstream_changes) && up_to_date(paths, cfg.work_dir, plan, inputs);

        if (opts.dry_run) {
            result.stages.push_back({s, fresh ? StageStatus::WouldSkip : StageStatus::WouldRun,
                                     inputs.missing.empty() ? "" : "input not present yet: " + inputs.missing});
            upstream_changes = upstream_changes || !fresh;
            continue;
        }
        if (fresh) {
            log::info("stage ", name, ": up to date, skipping");
            result.stages.push_back({s, StageStatus::Skipped, ""});
            continue;
        }

        fs::create_directories(paths.manifests);
        fs::remove(manifest_path(paths, s));
        auto fail = [&](const std::string& why) {
            jsonl::write_text(partial_path(paths, s), why + "\n");
            log::error("stage ", name, " failed: ", why);
            result.stages.push_back({s, StageStatus::Failed, why});
            result.exit_code = kExitStageFailure;
        };
        if (!inputs.missing.empty()) {
            fail("missing input " + inputs.missing);
            return result;
        }

        const auto started = std::chrono::steady_clock::now();
        StageManifest m;
        try {
            m.counts = plan.body();
            m.inputs = digest_inputs(plan).digests;
            for (const auto& out : plan.outputs) {
                m.outputs[fs::relative(out, cfg.work_dir).generic_string()] = sha256_file(out);
            }
        } catch (const std::exception& e) {
            fail(e.what());
            return result;
        }
        m.stage = name;
        m.status = "complete";
        m.config_hash = config_hash(plan);
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        jsonl::write_text(manifest_path(paths, s), jsonl::dump_pretty(nlohmann::json(m)) + "\n");
        fs::remove(partial_path(paths, s));
        log::info("stage ", name, ": done in ", m.wall_seconds, " s");
        result.stages.push_back({s, StageStatus::Ran, ""});
    }
    return result;
}

RunResult run_pipeline(const fs::path& config_path, const RunOptions& opts, std::ostream* diagnostics) {
    auto load = load_config(config_path);
    if (!load.config) {
        if (diagnostics) {
            for (const auto& e : load.errors) *diagnostics << "config error: " << e << '\n';
        }
        return {kExitConfigError, {}};
    }
    return run_pipeline(*load.config, opts);
}

}  // namespace scogen
