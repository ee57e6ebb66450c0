// scogen: command-line front end for the curation -> extraction -> graph ->
// sampling -> synthesis pipeline.

#include "scogen/backend.hpp"
#include "scogen/curation.hpp"
#include "scogen/extraction.hpp"
#include "scogen/graph.hpp"
#include "scogen/jsonl.hpp"
#include "scogen/log.hpp"
#include "scogen/pipeline.hpp"
#include "scogen/sampling.hpp"
#include "scogen/synthesis.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace scogen;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(jsonl::read_text(path));
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

BackendConfig load_backend_config(const fs::path& path) {
    BackendConfig cfg;
    try {
        cfg = read_json_file(path).get<BackendConfig>();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!cfg.fixtures.empty() && cfg.fixtures.is_relative()) {
        cfg.fixtures = (fs::absolute(path).parent_path() / cfg.fixtures).lexically_normal();
    }
    if (auto errors = cfg.validate(); !errors.empty()) {
        std::string msg = path.string() + ":";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

std::vector<ExtractedElements> read_elements(const fs::path& path) {
    std::vector<ExtractedElements> out;
    for (const auto& j : jsonl::read(path)) out.push_back(j.get<ExtractedElements>());
    return out;
}

void print_stats(const GraphStats& s) { std::cout << jsonl::dump_pretty(nlohmann::json(s)) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario-centric coding problem synthesis pipeline"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");
    app.add_flag("-q,--quiet", quiet, "Only log errors");

    // curate
    auto* curate_cmd = app.add_subcommand("curate", "Filter, deduplicate and subsample seed documents");
    fs::path curate_in, curate_out, curate_report, curate_config;
    std::uint64_t curate_seed = 0;
    std::size_t curate_workers = 4;
    curate_cmd->add_option("--in", curate_in, "Seed documents (JSONL)")->required();
    curate_cmd->add_option("--out", curate_out, "Curated documents (JSONL)")->required();
    curate_cmd->add_option("--report", curate_report, "Curation report (JSON)")->required();
    curate_cmd->add_option("--config", curate_config, "Curation config (JSON)");
    curate_cmd->add_option("--seed", curate_seed, "Subsampling seed");
    curate_cmd->add_option("--workers", curate_workers, "Signature threads")->check(CLI::PositiveNumber);

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "Extract scenario, knowledge and skills from documents");
    fs::path extract_in, extract_out, extract_backend, extract_skips;
    std::size_t extract_attempts = 3;
    extract_cmd->add_option("--in", extract_in, "Curated documents (JSONL)")->required();
    extract_cmd->add_option("--out", extract_out, "Extracted elements (JSONL)")->required();
    extract_cmd->add_option("--backend", extract_backend, "Backend config (JSON)")->required();
    extract_cmd->add_option("--skips", extract_skips, "Skipped documents (JSONL); default <out>.skips.jsonl");
    extract_cmd->add_option("--max-attempts", extract_attempts, "Attempts per document")->check(CLI::PositiveNumber);

    // build-graph
    auto* graph_cmd = app.add_subcommand("build-graph", "Build the knowledge graph from extracted elements");
    fs::path graph_in, graph_out;
    graph_cmd->add_option("--in", graph_in, "Extracted elements (JSONL)")->required();
    graph_cmd->add_option("--out", graph_out, "Graph file (JSON)")->required();

    // graph-stats
    auto* stats_cmd = app.add_subcommand("graph-stats", "Print node, edge and degree statistics");
    fs::path stats_graph;
    stats_cmd->add_option("--graph", stats_graph, "Graph file (JSON)")->required();

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Sample feature sets from the graph");
    fs::path sample_graph, sample_out, sample_backend;
    SamplerConfig sampler;
    std::string sample_strategy = "random";
    std::size_t sample_count = 10;
    sample_cmd->add_option("--graph", sample_graph, "Graph file (JSON)")->required();
    sample_cmd->add_option("--out", sample_out, "Feature sets (JSONL)")->required();
    sample_cmd->add_option("--complexity", sampler.complexity, "Features per set")->check(CLI::PositiveNumber);
    sample_cmd->add_option("--temperature", sampler.temperature, "Transition temperature (> 0)");
    sample_cmd->add_option("--strategy", sample_strategy, "random or llm")
        ->check(CLI::IsMember({"random", "llm"}));
    sample_cmd->add_option("--count", sample_count, "Number of feature sets")->check(CLI::PositiveNumber);
    sample_cmd->add_option("--seed", sampler.rng_seed, "RNG seed");
    sample_cmd->add_option("--max-resample", sampler.max_resample_attempts, "Duplicate draws tolerated per set");
    sample_cmd->add_option("--backend", sample_backend, "Backend config (JSON), required for --strategy llm");

    // synthesize
    auto* synth_cmd = app.add_subcommand("synthesize", "Generate one problem per feature set");
    fs::path synth_features, synth_out, synth_backend;
    bool synth_timestamps = false;
    synth_cmd->add_option("--features", synth_features, "Feature sets (JSONL)")->required();
    synth_cmd->add_option("--out", synth_out, "Synthesis records (JSONL)")->required();
    synth_cmd->add_option("--backend", synth_backend, "Backend config (JSON)")->required();
    synth_cmd->add_flag("--timestamps", synth_timestamps, "Record generation times");

    // answer
    auto* answer_cmd = app.add_subcommand("answer", "Generate answers for synthesized problems");
    fs::path answer_in, answer_out, answer_backend;
    bool answer_timestamps = false;
    answer_cmd->add_option("--in", answer_in, "Synthesis records (JSONL)")->required();
    answer_cmd->add_option("--out", answer_out, "Synthesis records (JSONL); may equal --in")->required();
    answer_cmd->add_option("--backend", answer_backend, "Backend config (JSON)")->required();
    answer_cmd->add_flag("--timestamps", answer_timestamps, "Record generation times");

    // export-sft
    auto* export_cmd = app.add_subcommand("export-sft", "Write complete records as chat-format SFT pairs");
    fs::path export_in, export_out;
    bool export_dedup = false;
    export_cmd->add_option("--in", export_in, "Synthesis records (JSONL)")->required();
    export_cmd->add_option("--out", export_out, "SFT pairs (JSONL)")->required();
    export_cmd->add_flag("--dedup", export_dedup, "Drop records whose problem text repeats");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run pipeline stages from a config file");
    fs::path run_config;
    std::vector<std::string> run_stages;
    bool run_dry = false;
    run_cmd->add_option("--config", run_config, "Pipeline config (JSON)")->required();
    run_cmd->add_option("--stages", run_stages, "Comma-separated stages to run")->delimiter(',');
    run_cmd->add_flag("--dry-run", run_dry, "Validate and show what would run");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a pipeline config and report every problem");
    fs::path validate_config_path;
    validate_cmd->add_option("--config", validate_config_path, "Pipeline config (JSON)")->required();

    // mock-fixtures
    auto* fixtures_cmd =
        app.add_subcommand("mock-fixtures", "Write mock-backend fixtures for the extraction prompts of a corpus");
    fs::path fixtures_docs, fixtures_replies, fixtures_out;
    fixtures_cmd->add_option("--docs", fixtures_docs, "Documents (JSONL)")->required();
    fixtures_cmd->add_option("--replies", fixtures_replies, "Replies (JSONL of {doc_id, reply})")->required();
    fixtures_cmd->add_option("--out", fixtures_out, "Fixture directory")->required();

    CLI11_PARSE(app, argc, argv);

    log::set_level(verbose ? log::Level::Info : quiet ? log::Level::Error : log::Level::Warn);

    try {
        if (*curate_cmd) {
            CurationConfig cfg;
            if (!curate_config.empty()) {
                try {
                    cfg = read_json_file(curate_config).get<CurationConfig>();
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(curate_config.string() + ": " + e.what());
                }
            }
            const auto docs = read_seed_documents(curate_in);
            const auto res = curate(docs, cfg, curate_seed, curate_workers);
            write_seed_documents(curate_out, res.docs);
            jsonl::write_text(curate_report, jsonl::dump_pretty(nlohmann::json(res.report)) + "\n");
            std::cout << res.report.input << " documents in, " << res.report.survivors << " kept\n";
        } else if (*extract_cmd) {
            const auto cfg = load_backend_config(extract_backend);
            auto backend = make_backend(cfg);
            const auto docs = read_seed_documents(extract_in);
            const auto outcomes = extract_batch(docs, *backend, cfg, ExtractionPolicy{extract_attempts});
            std::vector<ExtractedElements> ok;
            std::vector<Skip> skips;
            for (const auto& o : outcomes) {
                if (auto* e = std::get_if<ExtractedElements>(&o)) {
                    ok.push_back(*e);
                } else {
                    skips.push_back(std::get<Skip>(o));
                }
            }
            jsonl::write(extract_out, ok);
            if (extract_skips.empty()) extract_skips = fs::path(extract_out.string() + ".skips.jsonl");
            jsonl::write(extract_skips, skips);
            std::cout << ok.size() << " extracted, " << skips.size() << " skipped\n";
        } else if (*graph_cmd) {
            const auto elements = read_elements(graph_in);
            KnowledgeGraph g = build_graph(elements);
            g.set_source_digest(sha256_file(graph_in));
            save_graph(g, graph_out);
            print_stats(graph_stats(g));
        } else if (*stats_cmd) {
            print_stats(graph_stats(load_graph(stats_graph)));
        } else if (*sample_cmd) {
            if (auto errors = sampler.validate(); !errors.empty()) throw ConfigError(errors.front());
            const auto strategy = strategy_from_string(sample_strategy);
            const KnowledgeGraph g = load_graph(sample_graph);
            std::vector<FeatureSet> sets;
            if (strategy == Strategy::Llm) {
                if (sample_backend.empty()) throw ConfigError("--strategy llm needs --backend");
                const auto cfg = load_backend_config(sample_backend);
                auto backend = make_backend(cfg);
                sets = sample_feature_sets(g, sampler, strategy, sample_count, backend.get(), &cfg);
            } else {
                sets = sample_feature_sets(g, sampler, strategy, sample_count);
            }
            write_feature_sets(sample_out, sets);
            std::cout << sets.size() << " feature sets written\n";
        } else if (*synth_cmd) {
            const auto cfg = load_backend_config(synth_backend);
            auto backend = make_backend(cfg);
            const auto sets = read_feature_sets(synth_features);
            const auto records = synthesize_batch(sets, *backend, cfg, SynthesisOptions{synth_timestamps});
            write_records(synth_out, records);
            std::size_t ok = 0;
            for (const auto& r : records) ok += r.status == RecordStatus::Problem;
            std::cout << ok << " of " << records.size() << " problems generated\n";
        } else if (*answer_cmd) {
            const auto cfg = load_backend_config(answer_backend);
            auto backend = make_backend(cfg);
            auto records = read_records(answer_in);
            answer_batch(records, *backend, cfg, SynthesisOptions{answer_timestamps});
            write_records(answer_out, records);
            std::size_t ok = 0;
            for (const auto& r : records) ok += r.status == RecordStatus::Complete;
            std::cout << ok << " of " << records.size() << " records complete\n";
        } else if (*export_cmd) {
            const auto records = read_records(export_in);
            const auto res = export_sft(records, export_out, ExportOptions{export_dedup});
            std::cout << res.written << " pairs written, " << res.skipped_incomplete << " incomplete, "
                      << res.skipped_duplicate << " duplicate\n";
        } else if (*run_cmd) {
            RunOptions opts;
            opts.dry_run = run_dry;
            for (const auto& name : run_stages) {
                auto st = stage_from_string(name);
                if (!st) {
                    std::cerr << "unknown stage '" << name << "'\n";
                    return kExitConfigError;
                }
                opts.stages.push_back(*st);
            }
            const auto result = run_pipeline(run_config, opts, &std::cerr);
            for (const auto& s : result.stages) {
                std::cout << to_string(s.stage) << ": " << to_string(s.status);
                if (!s.detail.empty()) std::cout << " (" << s.detail << ")";
                std::cout << '\n';
            }
            return result.exit_code;
        } else if (*validate_cmd) {
            const auto errors = validate_config(validate_config_path);
            for (const auto& e : errors) std::cout << "error: " << e << '\n';
            if (!errors.empty()) return kExitConfigError;
            std::cout << "ok\n";
        } else if (*fixtures_cmd) {
            std::map<std::string, std::string> replies;
            for (const auto& j : jsonl::read(fixtures_replies)) {
                replies[j.at("doc_id").get<std::string>()] = j.at("reply").get<std::string>();
            }
            fs::create_directories(fixtures_out);
            std::size_t written = 0;
            for (const auto& doc : read_seed_documents(fixtures_docs)) {
                auto it = replies.find(doc.id);
                if (it == replies.end()) continue;
                GenerationRequest req;
                req.user_text = render_extraction_prompt(doc);
                jsonl::write_text(fixtures_out / (prompt_hash(req) + ".txt"), it->second);
                ++written;
            }
            std::cout << written << " fixtures written\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStageFailure;
    }
    return 0;
}
