#pragma once

#include "scogen/minhash.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class Source { ForumDump, Notebook, Other };

std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct SeedDocument {
    std::string id;
    Source source = Source::Other;
    std::string stratum;
    std::string text;
    std::size_t char_count = 0;  // code points in text

    static SeedDocument make(std::string id, Source source, std::string stratum, std::string text);
    bool operator==(const SeedDocument&) const = default;
};

enum class RejectReason { TooShort, TooLong, Garbled, Language, ExactDup, NearDup, UnknownStratum, OverQuota };

std::string_view to_string(RejectReason r);

struct Decision {
    std::optional<RejectReason> reject;  // empty means keep

    bool keep() const { return !reject.has_value(); }
    static Decision Keep() { return {}; }
    static Decision Reject(RejectReason r) { return {r}; }
};

struct CurationConfig {
    std::size_t min_chars = 500;
    std::size_t max_chars = 20000;
    /// Maximum allowed fraction of garbled code points.
    double garbled_max = 0.01;
    /// Minimum fraction of letters that must be Basic Latin or CJK.
    double script_min = 0.9;
    MinHashConfig minhash;
    /// Per-stratum document quotas. Empty disables subsampling.
    std::map<std::string, std::size_t> quotas;
};

/// Fraction of code points that are U+FFFD or control characters other
/// than tab, newline and carriage return. 0 for empty text.
double garbled_ratio(std::string_view text);

/// Fraction of letter code points that are ASCII letters or CJK ideographs.
/// Empty when the text contains no letters.
std::optional<double> latin_cjk_letter_ratio(std::string_view text);

Decision filter_document(const SeedDocument& doc, const CurationConfig& cfg);

/// Text with trailing whitespace stripped from every line.
std::string normalize_for_exact_dedup(std::string_view text);

/// Keeps the first document per distinct normalized text.
std::vector<SeedDocument> exact_dedup(std::span<const SeedDocument> docs);

struct NearDedupResult {
    std::vector<SeedDocument> survivors;            // input order preserved
    std::vector<std::vector<std::string>> clusters;  // ids, sorted; clusters sorted by first id
};

/// Groups LSH candidate pairs whose estimated Jaccard reaches cfg.threshold
/// (transitively) and keeps the lexicographically smallest id of each group.
NearDedupResult near_dedup(std::span<const SeedDocument> docs, const MinHashConfig& cfg, std::size_t workers = 1);

struct StratumCount {
    std::size_t before = 0;
    std::size_t after = 0;
    bool operator==(const StratumCount&) const = default;
};

struct SubsampleResult {
    std::vector<SeedDocument> docs;  // input order preserved
    std::size_t unknown_stratum = 0;
    std::size_t over_quota = 0;
    std::map<std::string, StratumCount> strata;
};

SubsampleResult stratified_subsample(std::span<const SeedDocument> docs,
                                     const std::map<std::string, std::size_t>& quotas, std::uint64_t seed);

struct CurationReport {
    std::size_t input = 0;
    std::size_t survivors = 0;
    std::map<std::string, std::size_t> rejections;  // keyed by reason name, every reason present
    std::map<std::string, StratumCount> strata;
    std::vector<std::vector<std::string>> near_dup_clusters;

    std::size_t rejected() const;
};

struct CurationResult {
    std::vector<SeedDocument> docs;
    CurationReport report;
};

/// filter -> exact dedup -> near dedup -> stratified subsample.
CurationResult curate(std::span<const SeedDocument> docs, const CurationConfig& cfg, std::uint64_t seed,
                      std::size_t workers = 1);

void to_json(nlohmann::json& j, const SeedDocument& d);
void from_json(const nlohmann::json& j, SeedDocument& d);
void to_json(nlohmann::json& j, const CurationReport& r);
void to_json(nlohmann::json& j, const CurationConfig& c);
void from_json(const nlohmann::json& j, CurationConfig& c);
void to_json(nlohmann::json& j, const MinHashConfig& c);
void from_json(const nlohmann::json& j, MinHashConfig& c);

/// Reads the ingest format. Throws std::runtime_error with the line number
/// on malformed lines or duplicate ids.
std::vector<SeedDocument> read_seed_documents(const std::filesystem::path& path);
void write_seed_documents(const std::filesystem::path& path, std::span<const SeedDocument> docs);

}  // namespace scogen
