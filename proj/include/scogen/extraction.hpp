#pragma once

#include "scogen/backend.hpp"
#include "scogen/curation.hpp"

#include <array>
#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class NodeKind { AS, DK, DS, CS };

std::string_view to_string(NodeKind k);
NodeKind node_kind_from_string(std::string_view s);

/// Node identity: kind plus normalized name.
struct CanonicalKey {
    NodeKind kind = NodeKind::AS;
    std::string key;

    auto operator<=>(const CanonicalKey&) const = default;
    bool operator==(const CanonicalKey&) const = default;
};

/// Lowercases, collapses internal whitespace and trims. Throws
/// std::invalid_argument when nothing is left.
CanonicalKey canonicalize(std::string_view name, NodeKind kind);

/// "Name: usage" pair for a knowledge or skill element.
struct Entry {
    std::string name;
    std::string usage;

    bool operator==(const Entry&) const = default;
};

enum class CodingCategory { ProblemSolving = 0, ToolsFrameworks = 1, AlgorithmsDataStructures = 2 };

inline constexpr std::array<CodingCategory, 3> kCodingCategories = {
    CodingCategory::ProblemSolving, CodingCategory::ToolsFrameworks, CodingCategory::AlgorithmsDataStructures};

std::string_view to_string(CodingCategory c);
/// Heading used in the reply grammar, e.g. "Tools and Frameworks".
std::string_view heading(CodingCategory c);

struct ExtractedElements {
    std::string doc_id;
    std::string scenario;
    std::vector<Entry> knowledge;                 // 1..3
    std::vector<std::optional<Entry>> skills;     // paired with knowledge by position
    std::array<std::optional<Entry>, 3> coding_skills;  // indexed by CodingCategory

    bool operator==(const ExtractedElements&) const = default;
};

/// Empty when the invariants hold, otherwise the first violation.
std::optional<std::string> validate(const ExtractedElements& e);

struct ParseFailure {
    std::string reason;
    std::size_t line = 0;  // 1-based; 0 when not tied to a line
    std::string text;
};

using ParseOutcome = std::variant<ExtractedElements, ParseFailure>;

/// The fixed output-format block inserted into the extraction prompt.
std::string_view extraction_output_format();

std::string render_extraction_prompt(const SeedDocument& doc);

/// Parses a reply in the extraction grammar. Never throws.
ParseOutcome parse_extraction_output(std::string_view text);

/// Writes `e` in the extraction reply grammar; parse_extraction_output
/// reads it back unchanged (apart from doc_id).
std::string format_extraction_output(const ExtractedElements& e);

struct ExtractionPolicy {
    std::size_t max_attempts = 3;
};

enum class SkipReason { ParseFailure, BackendError, Invalid };

std::string_view to_string(SkipReason r);

struct Skip {
    std::string doc_id;
    SkipReason reason = SkipReason::ParseFailure;
    std::string detail;
    std::size_t attempts = 0;
};

using ExtractionOutcome = std::variant<ExtractedElements, Skip>;

ExtractionOutcome extract_elements(const SeedDocument& doc, Backend& backend, const BackendConfig& backend_cfg,
                                   const ExtractionPolicy& policy);

/// Extracts every document, re-asking failed parses in rounds so each round
/// is one bounded-parallel batch. Outcomes are aligned with `docs`.
std::vector<ExtractionOutcome> extract_batch(std::span<const SeedDocument> docs, Backend& backend,
                                             const BackendConfig& backend_cfg, const ExtractionPolicy& policy);

void to_json(nlohmann::json& j, const Entry& e);
void from_json(const nlohmann::json& j, Entry& e);
void to_json(nlohmann::json& j, const ExtractedElements& e);
void from_json(const nlohmann::json& j, ExtractedElements& e);
void to_json(nlohmann::json& j, const Skip& s);

}  // namespace scogen
