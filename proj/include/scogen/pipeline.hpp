#pragma once

#include "scogen/backend.hpp"
#include "scogen/curation.hpp"
#include "scogen/extraction.hpp"
#include "scogen/sampling.hpp"
#include "scogen/synthesis.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class Stage { Curate, Extract, BuildGraph, Sample, Synthesize };

inline constexpr Stage kAllStages[] = {Stage::Curate, Stage::Extract, Stage::BuildGraph, Stage::Sample,
                                       Stage::Synthesize};

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

/// Everything `scogen run` needs. Relative paths in the file are resolved
/// against the directory holding the config file.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::filesystem::path work_dir;
    std::filesystem::path input;
    std::size_t workers = 4;
    CurationConfig curation;
    BackendConfig backend;
    ExtractionPolicy extraction;
    SamplerConfig sampling;  // rng_seed defaults to `seed`
    Strategy strategy = Strategy::Random;
    std::size_t feature_sets = 10;
    SynthesisOptions synthesis;
    ExportOptions export_options;
    std::map<Stage, bool> enabled;  // stage toggles; all on by default

    std::vector<Stage> default_stages() const;
};

/// Fixed artifact locations inside work_dir.
struct ArtifactPaths {
    std::filesystem::path curated, curation_report, elements, extraction_skips, graph, features, records, sft;
    std::filesystem::path manifests;

    explicit ArtifactPaths(const std::filesystem::path& work_dir);
};

struct ConfigLoad {
    std::optional<PipelineConfig> config;
    std::vector<std::string> errors;
};

/// Parses and validates; every problem is reported, not just the first.
ConfigLoad load_config(const std::filesystem::path& path);
std::vector<std::string> validate_config(const std::filesystem::path& path);
std::vector<std::string> validate(const PipelineConfig& cfg);

struct StageManifest {
    std::string stage;
    std::string status;  // "complete"
    std::map<std::string, std::string> inputs;   // work-dir-relative path -> sha256
    std::map<std::string, std::string> outputs;  // work-dir-relative path -> sha256
    std::map<std::string, std::size_t> counts;
    std::string config_hash;
    double wall_seconds = 0.0;
};

void to_json(nlohmann::json& j, const StageManifest& m);
void from_json(const nlohmann::json& j, StageManifest& m);

enum class StageStatus { Ran, Skipped, Failed, WouldRun, WouldSkip };

std::string_view to_string(StageStatus s);

struct StageOutcome {
    Stage stage;
    StageStatus status;
    std::string detail;
};

struct RunOptions {
    std::vector<Stage> stages;  // empty: the config's enabled stages
    bool dry_run = false;
    Backend* backend = nullptr;  // overrides the configured backend
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitStageFailure = 3;

struct RunResult {
    int exit_code = kExitOk;
    std::vector<StageOutcome> stages;
};

/// Runs the selected stages in dependency order. A stage whose manifest
/// matches the current input digests, config hash and output files is
/// skipped. The first failure stops the run and leaves `<stage>.partial`
/// next to the manifests.
RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& opts);

/// Loads the config and runs; exit code 2 on config errors.
RunResult run_pipeline(const std::filesystem::path& config_path, const RunOptions& opts,
                       std::ostream* diagnostics = nullptr);

/// Digest over every regular file in a directory (names and bytes, sorted).
std::string sha256_directory(const std::filesystem::path& dir);

}  // namespace scogen
