#pragma once

#include "scogen/backend.hpp"
#include "scogen/sampling.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class RecordStatus { ProblemFailed, Problem, AnswerFailed, Complete };

std::string_view to_string(RecordStatus s);
RecordStatus record_status_from_string(std::string_view s);

struct GenerationMeta {
    std::string model_id;
    TokenUsage usage;
    std::size_t attempts = 0;
    std::string finished_at;  // ISO-8601 UTC; empty unless timestamps are enabled

    bool operator==(const GenerationMeta& o) const {
        return model_id == o.model_id && usage.prompt_tokens == o.usage.prompt_tokens &&
               usage.completion_tokens == o.usage.completion_tokens && attempts == o.attempts &&
               finished_at == o.finished_at;
    }
};

struct SynthesisRecord {
    std::string id;
    FeatureSet features;
    std::string synthesis_prompt;
    std::string raw_reply;
    std::string problem_text;
    bool delimiter_missing = false;  // whole reply was taken as the problem
    std::string answer_text;
    RecordStatus status = RecordStatus::ProblemFailed;
    std::string error;
    GenerationMeta problem_meta;
    GenerationMeta answer_meta;

    bool operator==(const SynthesisRecord&) const = default;
};

struct SynthesisOptions {
    /// Stamp each generation with wall-clock time. Off by default so record
    /// files are byte-reproducible.
    bool record_timestamps = false;
};

/// The output-format block the synthesis prompt asks the model to follow.
std::string_view synthesis_output_format();

/// Pure function of the feature set. Features are written as numbered
/// "Feature N:" blocks; the scenario is left for the model to choose.
std::string render_synthesis_prompt(const FeatureSet& fs);

struct SplitReply {
    std::string problem;
    bool delimiter_found = false;
};

/// Text after the "Real-World Coding Problem:" line, or the whole reply
/// (trimmed) when that line is missing or nothing follows it.
SplitReply split_synthesis_reply(std::string_view reply);

/// Never throws for backend failures: the record comes back ProblemFailed.
SynthesisRecord synthesize_problem(const FeatureSet& fs, Backend& backend, const BackendConfig& backend_cfg,
                                   const SynthesisOptions& opts = {});

/// Throws BackendError{Precondition} unless rec has a problem. Backend
/// failures mark the record AnswerFailed.
void generate_answer(SynthesisRecord& rec, Backend& backend, const BackendConfig& backend_cfg,
                     const SynthesisOptions& opts = {});

/// Bounded-parallel versions; outputs are aligned with inputs. Records that
/// have no problem are left untouched by answer_batch.
std::vector<SynthesisRecord> synthesize_batch(std::span<const FeatureSet> sets, Backend& backend,
                                              const BackendConfig& backend_cfg, const SynthesisOptions& opts = {});
void answer_batch(std::span<SynthesisRecord> records, Backend& backend, const BackendConfig& backend_cfg,
                  const SynthesisOptions& opts = {});

struct SftMessage {
    std::string role;
    std::string content;

    bool operator==(const SftMessage&) const = default;
};

struct SftPair {
    std::vector<SftMessage> messages;  // user then assistant
    std::string provenance;            // record id

    bool operator==(const SftPair&) const = default;
};

struct ExportOptions {
    /// Drop records whose problem text repeats an earlier one byte for byte.
    bool dedup_problems = false;
};

struct ExportResult {
    std::size_t written = 0;
    std::size_t skipped_incomplete = 0;
    std::size_t skipped_duplicate = 0;
};

std::vector<SftPair> to_sft_pairs(std::span<const SynthesisRecord> records, const ExportOptions& opts = {},
                                  ExportResult* result = nullptr);
ExportResult export_sft(std::span<const SynthesisRecord> records, const std::filesystem::path& path,
                        const ExportOptions& opts = {});
/// Throws std::runtime_error for lines that are not a user/assistant pair.
std::vector<SftPair> read_sft(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SynthesisRecord& r);
void from_json(const nlohmann::json& j, SynthesisRecord& r);
void to_json(nlohmann::json& j, const SftPair& p);
void from_json(const nlohmann::json& j, SftPair& p);

std::vector<SynthesisRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, std::span<const SynthesisRecord> records);
std::vector<FeatureSet> read_feature_sets(const std::filesystem::path& path);
void write_feature_sets(const std::filesystem::path& path, std::span<const FeatureSet> sets);

}  // namespace scogen
