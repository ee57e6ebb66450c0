#include "scogen/extraction.hpp"

#include "scogen/log.hpp"
#include "scogen/prompt_template.hpp"
#include "scogen/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace scogen {

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::AS: return "AS";
        case NodeKind::DK: return "DK";
        case NodeKind::DS: return "DS";
        case NodeKind::CS: return "CS";
    }
    return "AS";
}

NodeKind node_kind_from_string(std::string_view s) {
    if (s == "AS") return NodeKind::AS;
    if (s == "DK") return NodeKind::DK;
    if (s == "DS") return NodeKind::DS;
    if (s == "CS") return NodeKind::CS;
    throw std::invalid_argument("unknown node kind: " + std::string(s));
}

CanonicalKey canonicalize(std::string_view name, NodeKind kind) {
    std::string key = text::to_lower(text::collapse_whitespace(name));
    if (key.empty()) throw std::invalid_argument("name is empty after normalization");
    return {kind, std::move(key)};
}

std::string_view to_string(CodingCategory c) {
    switch (c) {
        case CodingCategory::ProblemSolving: return "problem_solving";
        case CodingCategory::ToolsFrameworks: return "tools_frameworks";
        case CodingCategory::AlgorithmsDataStructures: return "algorithms_data_structures";
    }
    return "problem_solving";
}

std::string_view heading(CodingCategory c) {
    switch (c) {
        case CodingCategory::ProblemSolving: return "Problem-solving and Design Thinking";
        case CodingCategory::ToolsFrameworks: return "Tools and Frameworks";
        case CodingCategory::AlgorithmsDataStructures: return "Algorithms and Data Structures";
    }
    return "";
}

std::string_view to_string(SkipReason r) {
    switch (r) {
        case SkipReason::ParseFailure: return "parse-failure";
        case SkipReason::BackendError: return "backend-error";
        case SkipReason::Invalid: return "invalid";
    }
    return "invalid";
}

std::optional<std::string> validate(const ExtractedElements& e) {
    auto blank = [](const std::string& s) { return text::collapse_whitespace(s).empty(); };
    if (blank(e.scenario)) return "scenario is empty";
    if (e.knowledge.empty() || e.knowledge.size() > 3) return "knowledge count must be 1..3";
    if (e.skills.size() != e.knowledge.size()) return "skills must pair with knowledge";
    for (const auto& k : e.knowledge) {
        if (blank(k.name)) return "knowledge name is empty";
    }
    for (const auto& s : e.skills) {
        if (s && blank(s->name)) return "skill name is empty";
    }
    for (const auto& c : e.coding_skills) {
        if (c && blank(c->name)) return "coding skill name is empty";
    }
    return std::nullopt;
}

namespace {

constexpr std::string_view kExtractionTemplate =
    R"(You are a code-related text analysis expert. Given a piece of code-related text, you will extract the following attributes:

1. **Application Scenario**: Extract the most specific, concrete real-world application scenario where this code/algorithm would be practically used.

**Guidelines for Application Scenario**:
- Focus on WHERE and HOW this code would be used in real software systems
- Avoid generic categories like "data processing", "mathematical computation", "algorithm implementation"
- Think about specific industries, use cases, or problem domains
- Consider what kind of software system or application would need this functionality
- If multiple scenarios are possible, choose the most common or practical one

**Examples of good vs bad scenario extraction**:
Bad: "Mathematical Computation Tool", "Data Processing System", "Algorithm Implementation"
Good: "Computer Graphics Engine Curve Rendering", "Financial Trading Platform Risk Calculation Module", "Scientific Computing Software Symbolic Math Engine"

2. **Domain Knowledge**:
Identify 1 to 3 key domain concepts and its usage of this knowledge (in less than 15 words) that are most relevant and thoroughly discussed in the text.
The concepts and usage should be detailed and specific, but expressed in general terms without reference to problem-specific details. The concepts may come from different domains.
Format: Domain Knowledge: Detail Usage
(e.g., "XGBoost Regression: Predict target variable using gradient boosting decision trees with hyperparameter tuning.", "ARIMA Modeling: Fit and forecast time series data using autoregressive integrated moving average models.")

3. **Domain Skill**: For each domain knowledge, extract up to one associated skill/method and the usage (if exists) that represents a problem-solving technique related to that knowledge.
The skill/method should be directly related to the concept and *applied in the provided text*.
- **If no clear skill is present, write "NA".**
- Avoid forcing the extraction of a skill if the text does not *deeply* involve one.
- If the technique is too subtle, write "NA".
- Provide a concise, detailed explanation of the skill in general terms.
Format: Domain Skill: Detail methods to achieve it.
(e.g., "Elbow Method: Determine the optimal number of clusters by analyzing variance explained versus number of clusters.", "AutoARIMA: Automatically select optimal ARIMA parameters using statistical criteria and grid search techniques.")

4. **Coding Skill**: Extract *one* core programming logic for each category: problem-solving and design thinking, tools and frameworks, as well as algorithms and data structures

(e.g., "Algorithms and Data Structures
1. Data Querying and Aggregation Analysis: Perform statistical, filtering, and aggregation operations on air quality data through SQL queries.")

- If the text doesn't involve coding or the information is not present, output "NA".

##**Note:**
Do not output any explanation, output only as the format below.

## Output Format (output in English)
{output_format}

##**Code Text**
{code_text}

## Output
)";

constexpr std::string_view kOutputFormat = R"(Application Scenario:
<scenario>

Domain Knowledge:
1. <Knowledge>: <Detail Usage>
2. <Knowledge>: <Detail Usage>

Domain Skill:
1. <Knowledge of item 1>:
1.1. <Skill>: <Detail methods to achieve it>
2. <Knowledge of item 2>:
2.1. NA

Coding Skill:
Problem-solving and Design Thinking:
1. <Skill>: <Detail Usage>
Tools and Frameworks:
1. <Skill>: <Detail Usage>
Algorithms and Data Structures:
1. <Skill>: <Detail Usage>)";

enum class Section { None, Scenario, Knowledge, Skill, Coding };

std::string strip_markup(std::string_view line) {
    std::string s(text::trim(line));
    // Bold markers anywhere, heading hashes at the start.
    for (std::size_t pos = s.find("**"); pos != std::string::npos; pos = s.find("**")) s.erase(pos, 2);
    std::size_t start = 0;
    while (start < s.size() && s[start] == '#') ++start;
    return std::string(text::trim(std::string_view(s).substr(start)));
}

struct Heading {
    Section section = Section::None;
    std::optional<CodingCategory> category;
    std::string inline_text;
};

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<Heading> match_heading(const std::string& line) {
    if (line.empty() || std::isdigit(static_cast<unsigned char>(line[0]))) return std::nullopt;
    const auto colon = line.find(':');
    std::string label = lower_ascii(text::trim(std::string_view(line).substr(0, colon)));
    std::string rest = colon == std::string::npos ? "" : std::string(text::trim(std::string_view(line).substr(colon + 1)));
    for (auto& c : label) {
        if (c == '-' || c == '_') c = ' ';
    }
    label = text::collapse_whitespace(label);
    Heading h;
    h.inline_text = rest;
    if (label == "application scenario" || label == "application scenarios") {
        h.section = Section::Scenario;
    } else if (label == "domain knowledge") {
        h.section = Section::Knowledge;
    } else if (label == "domain skill" || label == "domain skills") {
        h.section = Section::Skill;
    } else if (label == "coding skill" || label == "coding skills") {
        h.section = Section::Coding;
    } else if (label == "problem solving and design thinking" || label == "problem solving") {
        h.category = CodingCategory::ProblemSolving;
    } else if (label == "tools and frameworks") {
        h.category = CodingCategory::ToolsFrameworks;
    } else if (label == "algorithms and data structures") {
        h.category = CodingCategory::AlgorithmsDataStructures;
    } else {
        return std::nullopt;
    }
    return h;
}

// "1.", "1.1.", "2.1", "3)" or a "-"/"*" bullet, followed by the content.
struct Item {
    std::optional<std::size_t> major;
    bool has_minor = false;
    std::string content;
};

Item split_item(const std::string& line) {
    Item item;
    std::string_view s = line;
    if (!s.empty() && std::isdigit(static_cast<unsigned char>(s[0]))) {
        std::size_t i = 0;
        std::size_t major = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), major);
        if (ec == std::errc()) {
            i = static_cast<std::size_t>(p - s.data());
            bool numbered = false;
            if (i < s.size() && (s[i] == '.' || s[i] == ')')) {
                numbered = true;
                ++i;
                // sub-indices: "1.1." / "1.1"
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                    std::size_t j = i;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                    item.has_minor = true;
                    i = j;
                    if (i < s.size() && (s[i] == '.' || s[i] == ')')) ++i;
                }
            }
            if (numbered && (i == s.size() || s[i] == ' ' || s[i] == '\t')) {
                item.major = major;
                item.content = std::string(text::trim(s.substr(i)));
                return item;
            }
            item.has_minor = false;
        }
    }
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && (s[1] == ' ' || s[1] == '\t')) {
        item.content = std::string(text::trim(s.substr(2)));
        return item;
    }
    item.content = std::string(text::trim(s));
    return item;
}

bool is_na(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '"' || s.back() == '\'' || s.back() == '.')) s.remove_suffix(1);
    return text::iequals(s, "NA") || text::iequals(s, "N/A");
}

struct Split {
    std::string name;
    std::string usage;
    bool group_header = false;  // "Name:" with nothing after
};

std::optional<Split> split_entry(const std::string& content) {
    if (content.size() > 1 && content.back() == ':' && content.find(": ") == std::string::npos) {
        return Split{std::string(text::trim(std::string_view(content).substr(0, content.size() - 1))), "", true};
    }
    const auto sep = content.find(": ");
    if (sep == std::string::npos) return std::nullopt;
    Split s{std::string(text::trim(std::string_view(content).substr(0, sep))),
            std::string(text::trim(std::string_view(content).substr(sep + 2))), false};
    if (s.name.empty() || s.usage.empty()) return std::nullopt;
    return s;
}

struct RawLine {
    std::size_t number;
    std::string text;
};

ParseFailure fail(std::string reason, const RawLine* line = nullptr) {
    ParseFailure f{std::move(reason), 0, {}};
    if (line) {
        f.line = line->number;
        f.text = line->text;
    }
    return f;
}

}  // namespace

std::string_view extraction_output_format() { return kOutputFormat; }

std::string render_extraction_prompt(const SeedDocument& doc) {
    return render_template(kExtractionTemplate,
                           {{"output_format", std::string(kOutputFormat)}, {"code_text", doc.text}});
}

ParseOutcome parse_extraction_output(std::string_view reply) {
    std::map<Section, std::vector<RawLine>> body;
    std::map<Section, std::size_t> heading_line;
    Section current = Section::None;
    std::size_t number = 0;
    for (auto raw : text::split_lines(reply)) {
        ++number;
        std::string line = strip_markup(raw);
        if (line.empty()) continue;
        if (auto h = match_heading(line); h && h->section != Section::None) {
            if (heading_line.contains(h->section)) {
                const RawLine dup{number, std::string(raw)};
                return fail("duplicate section heading", &dup);
            }
            current = h->section;
            heading_line[current] = number;
            if (!h->inline_text.empty()) body[current].push_back({number, h->inline_text});
            continue;
        }
        if (current == Section::None) continue;  // preamble
        body[current].push_back({number, line});
    }

    static constexpr std::pair<Section, std::string_view> kRequired[] = {
        {Section::Scenario, "Application Scenario"},
        {Section::Knowledge, "Domain Knowledge"},
        {Section::Skill, "Domain Skill"},
        {Section::Coding, "Coding Skill"},
    };
    for (const auto& [section, name] : kRequired) {
        if (!heading_line.contains(section)) return fail("missing section: " + std::string(name));
    }

    ExtractedElements e;

    // Scenario: first non-empty line.
    const auto& scenario_lines = body[Section::Scenario];
    if (scenario_lines.empty() || is_na(scenario_lines.front().text)) {
        return fail("application scenario is empty");
    }
    e.scenario = split_item(scenario_lines.front().text).content;
    if (e.scenario.size() >= 2 && e.scenario.front() == '"' && e.scenario.back() == '"') {
        e.scenario = e.scenario.substr(1, e.scenario.size() - 2);
    }
    if (text::trim(e.scenario).empty()) return fail("application scenario is empty", &scenario_lines.front());

    for (const auto& line : body[Section::Knowledge]) {
        const Item item = split_item(line.text);
        if (is_na(item.content)) continue;
        auto entry = split_entry(item.content);
        if (!entry || entry->group_header) return fail("expected 'Knowledge: usage'", &line);
        e.knowledge.push_back({entry->name, entry->usage});
    }
    if (e.knowledge.empty() || e.knowledge.size() > 3) {
        return fail("domain knowledge count " + std::to_string(e.knowledge.size()) + " outside 1..3");
    }

    // Skills pair positionally with knowledge; only the first skill per
    // position is kept.
    e.skills.assign(e.knowledge.size(), std::nullopt);
    std::vector<bool> filled(e.knowledge.size(), false);
    std::optional<std::size_t> group;  // 0-based position opened by a "k. Name:" line
    auto next_open = [&]() -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < filled.size(); ++i) {
            if (!filled[i]) return i;
        }
        return std::nullopt;
    };
    for (const auto& line : body[Section::Skill]) {
        const Item item = split_item(line.text);
        auto position_of = [&](std::size_t major) -> std::optional<std::size_t> {
            if (major < 1 || major > e.knowledge.size()) return std::nullopt;
            return major - 1;
        };
        if (is_na(item.content)) {
            std::optional<std::size_t> pos = item.major ? position_of(*item.major) : (group ? group : next_open());
            if (item.major && !pos) return fail("domain skill index out of range", &line);
            if (!item.major && !group && !pos) continue;
            if (!item.major && !group && body[Section::Skill].size() == 1) {
                std::fill(filled.begin(), filled.end(), true);  // a lone "NA" covers every position
                continue;
            }
            if (pos && !filled[*pos]) filled[*pos] = true;
            group.reset();
            continue;
        }
        auto entry = split_entry(item.content);
        if (!entry) return fail("expected 'Skill: method'", &line);
        if (entry->group_header) {
            auto pos = item.major ? position_of(*item.major) : next_open();
            if (!pos) return fail("domain skill index out of range", &line);
            group = pos;
            continue;
        }
        std::optional<std::size_t> pos;
        if (item.major && item.has_minor) {
            pos = position_of(*item.major);
        } else if (group) {
            pos = group;
        } else if (item.major) {
            pos = position_of(*item.major);
        } else {
            pos = next_open();
        }
        if (!pos) return fail("domain skill index out of range", &line);
        group.reset();
        if (filled[*pos]) continue;
        filled[*pos] = true;
        if (is_na(entry->usage) && text::to_lower(text::collapse_whitespace(entry->name)) ==
                                       text::to_lower(text::collapse_whitespace(e.knowledge[*pos].name))) {
            continue;  // "Knowledge: NA"
        }
        e.skills[*pos] = Entry{entry->name, entry->usage};
    }

    std::optional<CodingCategory> category;
    std::array<bool, 3> category_seen{};
    for (const auto& line : body[Section::Coding]) {
        if (auto h = match_heading(line.text); h && h->category) {
            category = h->category;
            if (h->inline_text.empty()) continue;
            const Item inline_item = split_item(h->inline_text);
            const auto idx = static_cast<std::size_t>(*category);
            if (!is_na(inline_item.content) && !category_seen[idx]) {
                auto entry = split_entry(inline_item.content);
                if (!entry || entry->group_header) return fail("expected 'Skill: usage'", &line);
                e.coding_skills[idx] = Entry{entry->name, entry->usage};
            }
            category_seen[idx] = true;
            continue;
        }
        const Item item = split_item(line.text);
        std::optional<std::size_t> idx;
        if (category) {
            idx = static_cast<std::size_t>(*category);
        } else {
            for (std::size_t i = 0; i < 3; ++i) {
                if (!category_seen[i]) {
                    idx = i;
                    break;
                }
            }
        }
        if (is_na(item.content)) {
            if (!category) {
                category_seen = {true, true, true};  // bare "NA" for the whole section
            } else {
                category_seen[*idx] = true;
            }
            continue;
        }
        auto entry = split_entry(item.content);
        if (!entry || entry->group_header) return fail("expected 'Skill: usage'", &line);
        if (!idx || category_seen[*idx]) continue;  // one entry per category
        e.coding_skills[*idx] = Entry{entry->name, entry->usage};
        category_seen[*idx] = true;
    }

    if (auto err = validate(e)) return fail(*err);
    return e;
}

std::string format_extraction_output(const ExtractedElements& e) {
    std::string out;
    out += "Application Scenario:\n" + e.scenario + "\n\nDomain Knowledge:\n";
    for (std::size_t i = 0; i < e.knowledge.size(); ++i) {
        out += std::to_string(i + 1) + ". " + e.knowledge[i].name + ": " + e.knowledge[i].usage + "\n";
    }
    out += "\nDomain Skill:\n";
    for (std::size_t i = 0; i < e.knowledge.size(); ++i) {
        const auto n = std::to_string(i + 1);
        out += n + ". " + e.knowledge[i].name + ":\n";
        if (i < e.skills.size() && e.skills[i]) {
            out += n + ".1. " + e.skills[i]->name + ": " + e.skills[i]->usage + "\n";
        } else {
            out += n + ".1. NA\n";
        }
    }
    out += "\nCoding Skill:\n";
    for (auto c : kCodingCategories) {
        out += std::string(heading(c)) + ":\n";
        const auto& entry = e.coding_skills[static_cast<std::size_t>(c)];
        out += entry ? "1. " + entry->name + ": " + entry->usage + "\n" : std::string("1. NA\n");
    }
    return out;
}

namespace {

ExtractionOutcome interpret(const SeedDocument& doc, const GenerationResult& result, std::size_t attempt,
                            std::optional<ParseFailure>& last_failure) {
    if (!result.ok()) {
        return Skip{doc.id, SkipReason::BackendError, result.error, attempt};
    }
    auto parsed = parse_extraction_output(result.text);
    if (auto* e = std::get_if<ExtractedElements>(&parsed)) {
        e->doc_id = doc.id;
        return std::move(*e);
    }
    last_failure = std::get<ParseFailure>(parsed);
    return Skip{doc.id, SkipReason::ParseFailure, last_failure->reason, attempt};
}

}  // namespace

ExtractionOutcome extract_elements(const SeedDocument& doc, Backend& backend, const BackendConfig& backend_cfg,
                                   const ExtractionPolicy& policy) {
    const auto req = backend_cfg.request(render_extraction_prompt(doc));
    std::optional<ParseFailure> last;
    ExtractionOutcome outcome = Skip{doc.id, SkipReason::ParseFailure, "no attempts", 0};
    for (std::size_t attempt = 1; attempt <= std::max<std::size_t>(1, policy.max_attempts); ++attempt) {
        GenerationResult result;
        try {
            result = backend.complete(req);
        } catch (const BackendError& err) {
            result.finish_reason = FinishReason::Error;
            result.error = err.what();
        }
        outcome = interpret(doc, result, attempt, last);
        if (std::holds_alternative<ExtractedElements>(outcome)) return outcome;
        if (std::get<Skip>(outcome).reason == SkipReason::BackendError) return outcome;
        log::debug("extraction parse failure for ", doc.id, " (attempt ", attempt, "): ", last->reason);
    }
    return outcome;
}

std::vector<ExtractionOutcome> extract_batch(std::span<const SeedDocument> docs, Backend& backend,
                                             const BackendConfig& backend_cfg, const ExtractionPolicy& policy) {
    std::vector<ExtractionOutcome> outcomes(docs.size(), Skip{});
    std::vector<GenerationRequest> prompts;
    prompts.reserve(docs.size());
    for (const auto& d : docs) prompts.push_back(backend_cfg.request(render_extraction_prompt(d)));

    std::vector<std::size_t> pending(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) pending[i] = i;
    const std::size_t rounds = std::max<std::size_t>(1, policy.max_attempts);
    for (std::size_t attempt = 1; attempt <= rounds && !pending.empty(); ++attempt) {
        std::vector<GenerationRequest> reqs;
        for (auto i : pending) reqs.push_back(prompts[i]);
        const auto results = complete_batch(backend, reqs, backend_cfg.parallelism);
        std::vector<std::size_t> retry;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            const std::size_t i = pending[k];
            std::optional<ParseFailure> last;
            outcomes[i] = interpret(docs[i], results[k], attempt, last);
            if (auto* skip = std::get_if<Skip>(&outcomes[i]); skip && skip->reason == SkipReason::ParseFailure) {
                retry.push_back(i);
            }
        }
        pending = std::move(retry);
    }
    return outcomes;
}

void to_json(nlohmann::json& j, const Entry& e) { j = {{"name", e.name}, {"usage", e.usage}}; }

void from_json(const nlohmann::json& j, Entry& e) {
    e.name = j.at("name").get<std::string>();
    e.usage = j.value("usage", std::string());
}

namespace {

nlohmann::json optional_entry(const std::optional<Entry>& e) { return e ? nlohmann::json(*e) : nlohmann::json(nullptr); }

std::optional<Entry> read_optional(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<Entry>();
}

}  // namespace

void to_json(nlohmann::json& j, const ExtractedElements& e) {
    nlohmann::json skills = nlohmann::json::array();
    for (const auto& s : e.skills) skills.push_back(optional_entry(s));
    nlohmann::json coding = nlohmann::json::object();
    for (auto c : kCodingCategories) coding[std::string(to_string(c))] = optional_entry(e.coding_skills[static_cast<std::size_t>(c)]);
    j = {{"doc_id", e.doc_id}, {"scenario", e.scenario}, {"knowledge", e.knowledge}, {"skills", skills},
         {"coding_skills", coding}};
}

void from_json(const nlohmann::json& j, ExtractedElements& e) {
    e = ExtractedElements{};
    e.doc_id = j.at("doc_id").get<std::string>();
    e.scenario = j.at("scenario").get<std::string>();
    e.knowledge = j.at("knowledge").get<std::vector<Entry>>();
    for (const auto& s : j.at("skills")) e.skills.push_back(read_optional(s));
    const auto& coding = j.at("coding_skills");
    for (auto c : kCodingCategories) {
        const auto key = std::string(to_string(c));
        if (coding.contains(key)) e.coding_skills[static_cast<std::size_t>(c)] = read_optional(coding.at(key));
    }
    if (auto err = validate(e)) throw std::invalid_argument("invalid elements for " + e.doc_id + ": " + *err);
}

void to_json(nlohmann::json& j, const Skip& s) {
    j = {{"doc_id", s.doc_id}, {"reason", to_string(s.reason)}, {"detail", s.detail}, {"attempts", s.attempts}};
}

}  // namespace scogen
