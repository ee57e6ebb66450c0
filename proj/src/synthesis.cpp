#include "scogen/synthesis.hpp"

#include "scogen/jsonl.hpp"
#include "scogen/log.hpp"
#include "scogen/prompt_template.hpp"
#include "scogen/text.hpp"

#include <chrono>
#include <ctime>
#include <set>

namespace scogen {

std::string_view to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::ProblemFailed: return "problem-failed";
        case RecordStatus::Problem: return "problem";
        case RecordStatus::AnswerFailed: return "answer-failed";
        case RecordStatus::Complete: return "complete";
    }
    return "problem-failed";
}

RecordStatus record_status_from_string(std::string_view s) {
    for (auto st : {RecordStatus::ProblemFailed, RecordStatus::Problem, RecordStatus::AnswerFailed,
                    RecordStatus::Complete}) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument("unknown record status '" + std::string(s) + "'");
}

namespace {

constexpr std::string_view kSynthesisTemplate =
    R"(**You are a problem designer.** I will provide you with one or more features. Based on these, your task is to create a **single, cohesive real world coding problem** that integrates the provided features into a natural and practical context.

Each feature will include the following three traits:

- **Domain Knowledge**: A specific piece of knowledge or understanding relevant to the field.
- **Domain Skill**: A specific skill or method used in the domain, along with its detailed usage.
- **Coding Skill**: A specific programming-related skill or technique, along with its detailed usage.

**Important Guidelines:**
- First, identify a suitable real-world application scenario based on the given features. Then, develop a detailed programming problem of that scenario, ensuring it aligns with the features.
- **Do not mention the domain or coding skills explicitly** in the problem statement. Instead, **design the scenario in such a way that the solution naturally involves applying those skills**.
- The problem should be a **single, substantial task**, not a list of subtasks. The features should be **interconnected**, with one depending on or influencing another.
- If there is a **conflict between the provided features**, **resolve the conflict** by using only the most relevant or compatible parts of the features.
- The final output should be a **realistic, natural, and technically sound coding problem** that reflects a real-world scenario and integrates the given features in a meaningful way.
- If the question require the usage of datasets, provide schema and examples of the dataset.
- Do not generate any bonus or optional challenges.

**Features:**
{features}

First provide a concise step-by-step thought process, then generate the real world coding problem:

**Output Format:**
{output_format}
)";

constexpr std::string_view kSynthesisOutputFormat =
    "Step-by-Step Thought Process:\n"
    "<your reasoning>\n"
    "\n"
    "Real-World Coding Problem:\n"
    "<the complete problem statement>";

constexpr std::string_view kProblemDelimiter = "real-world coding problem";
constexpr std::string_view kProblemDelimiterAlt = "real world coding problem";

std::string describe(const Choice& c) { return c.usage.empty() ? c.name : c.name + ": " + c.usage; }

std::string now_utc() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

GenerationMeta meta_of(const GenerationResult& r, const BackendConfig& cfg, const SynthesisOptions& opts) {
    return {cfg.model_id, r.usage, r.attempts, opts.record_timestamps ? now_utc() : std::string()};
}

SynthesisRecord fresh_record(const FeatureSet& fs) {
    SynthesisRecord rec;
    rec.id = fs.id;
    rec.features = fs;
    rec.synthesis_prompt = render_synthesis_prompt(fs);
    return rec;
}

void apply_problem(SynthesisRecord& rec, const GenerationResult& r, const BackendConfig& cfg,
                   const SynthesisOptions& opts) {
    rec.problem_meta = meta_of(r, cfg, opts);
    if (!r.ok()) {
        rec.status = RecordStatus::ProblemFailed;
        rec.error = r.error;
        return;
    }
    rec.raw_reply = r.text;
    auto split = split_synthesis_reply(r.text);
    rec.problem_text = std::move(split.problem);
    rec.delimiter_missing = !split.delimiter_found;
    if (rec.delimiter_missing) log::info("record ", rec.id, ": reply has no problem delimiter; keeping all of it");
    if (rec.problem_text.empty()) {
        rec.status = RecordStatus::ProblemFailed;
        rec.error = "empty reply";
    } else {
        rec.status = RecordStatus::Problem;
        rec.error.clear();
    }
}

void apply_answer(SynthesisRecord& rec, const GenerationResult& r, const BackendConfig& cfg,
                  const SynthesisOptions& opts) {
    rec.answer_meta = meta_of(r, cfg, opts);
    if (!r.ok()) {
        rec.status = RecordStatus::AnswerFailed;
        rec.error = r.error;
        return;
    }
    rec.answer_text = r.text;
    if (text::trim(rec.answer_text).empty()) {
        rec.status = RecordStatus::AnswerFailed;
        rec.error = "empty answer";
    } else {
        rec.status = RecordStatus::Complete;
        rec.error.clear();
    }
}

bool has_problem(const SynthesisRecord& rec) {
    return rec.status != RecordStatus::ProblemFailed && !rec.problem_text.empty();
}

GenerationResult failure(const BackendError& e) {
    GenerationResult r;
    r.finish_reason = FinishReason::Error;
    r.error_kind = e.kind();
    r.error = e.what();
    return r;
}

}  // namespace

std::string_view synthesis_output_format() { return kSynthesisOutputFormat; }

std::string render_synthesis_prompt(const FeatureSet& fs) {
    std::string features;
    for (std::size_t i = 0; i < fs.features.size(); ++i) {
        const Feature& f = fs.features[i];
        if (i) features += "\n";
        features += "Feature " + std::to_string(i + 1) + ":\n";
        features += "- Domain Knowledge: " + describe(f.knowledge) + "\n";
        features += "- Domain Skill: " + (f.skill ? describe(*f.skill) : std::string("NA")) + "\n";
        features += "- Coding Skill: " + describe(f.coding_skill) + "\n";
    }
    if (!features.empty()) features.pop_back();
    return render_template(kSynthesisTemplate,
                           {{"features", features}, {"output_format", std::string(kSynthesisOutputFormat)}});
}

SplitReply split_synthesis_reply(std::string_view reply) {
    const auto lines = text::split_lines(reply);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = text::trim(lines[i]);
        while (!line.empty() && (line.front() == '*' || line.front() == '#' || line.front() == ' ')) {
            line.remove_prefix(1);
        }
        if (!text::istarts_with(line, kProblemDelimiter) && !text::istarts_with(line, kProblemDelimiterAlt)) continue;
        std::string_view rest = line.substr(kProblemDelimiter.size());
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ':' || rest.front() == ' ')) {
            rest.remove_prefix(1);
        }
        std::string problem(rest);
        for (std::size_t k = i + 1; k < lines.size(); ++k) {
            problem += "\n";
            problem += lines[k];
        }
        problem = std::string(text::trim(problem));
        if (!problem.empty()) return {problem, true};
        break;
    }
    return {std::string(text::trim(reply)), false};
}

SynthesisRecord synthesize_problem(const FeatureSet& fs, Backend& backend, const BackendConfig& backend_cfg,
                                   const SynthesisOptions& opts) {
    SynthesisRecord rec = fresh_record(fs);
    GenerationResult r;
    try {
        r = backend.complete(backend_cfg.request(rec.synthesis_prompt));
    } catch (const BackendError& e) {
        r = failure(e);
    }
    apply_problem(rec, r, backend_cfg, opts);
    return rec;
}

void generate_answer(SynthesisRecord& rec, Backend& backend, const BackendConfig& backend_cfg,
                     const SynthesisOptions& opts) {
    if (!has_problem(rec)) {
        throw BackendError(BackendErrorKind::Precondition, "record " + rec.id + " has no problem to answer");
    }
    GenerationResult r;
    try {
        r = backend.complete(backend_cfg.request(rec.problem_text));
    } catch (const BackendError& e) {
        r = failure(e);
    }
    apply_answer(rec, r, backend_cfg, opts);
}

std::vector<SynthesisRecord> synthesize_batch(std::span<const FeatureSet> sets, Backend& backend,
                                              const BackendConfig& backend_cfg, const SynthesisOptions& opts) {
    std::vector<SynthesisRecord> records;
    std::vector<GenerationRequest> reqs;
    records.reserve(sets.size());
    reqs.reserve(sets.size());
    for (const auto& fs : sets) {
        records.push_back(fresh_record(fs));
        reqs.push_back(backend_cfg.request(records.back().synthesis_prompt));
    }
    const auto results = complete_batch(backend, reqs, backend_cfg.parallelism);
    for (std::size_t i = 0; i < records.size(); ++i) apply_problem(records[i], results[i], backend_cfg, opts);
    return records;
}

void answer_batch(std::span<SynthesisRecord> records, Backend& backend, const BackendConfig& backend_cfg,
                  const SynthesisOptions& opts) {
    std::vector<std::size_t> index;
    std::vector<GenerationRequest> reqs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!has_problem(records[i])) continue;
        index.push_back(i);
        reqs.push_back(backend_cfg.request(records[i].problem_text));
    }
    const auto results = complete_batch(backend, reqs, backend_cfg.parallelism);
    for (std::size_t k = 0; k < index.size(); ++k) apply_answer(records[index[k]], results[k], backend_cfg, opts);
}

std::vector<SftPair> to_sft_pairs(std::span<const SynthesisRecord> records, const ExportOptions& opts,
                                  ExportResult* result) {
    ExportResult tally;
    std::vector<SftPair> out;
    std::set<std::string> problems;
    for (const auto& rec : records) {
        if (rec.status != RecordStatus::Complete || rec.problem_text.empty()) {
            ++tally.skipped_incomplete;
            log::info("export: skipping record ", rec.id, " (", to_string(rec.status), ")");
            continue;
        }
        if (opts.dedup_problems && !problems.insert(rec.problem_text).second) {
            ++tally.skipped_duplicate;
            continue;
        }
        out.push_back({{{"user", rec.problem_text}, {"assistant", rec.answer_text}}, rec.id});
    }
    tally.written = out.size();
    if (result) *result = tally;
    return out;
}

ExportResult export_sft(std::span<const SynthesisRecord> records, const std::filesystem::path& path,
                        const ExportOptions& opts) {
    ExportResult result;
    const auto pairs = to_sft_pairs(records, opts, &result);
    jsonl::write(path, pairs);
    if (result.skipped_incomplete) log::warn("export: skipped ", result.skipped_incomplete, " incomplete records");
    return result;
}

std::vector<SftPair> read_sft(const std::filesystem::path& path) {
    std::vector<SftPair> out;
    for (const auto& j : jsonl::read(path)) out.push_back(j.get<SftPair>());
    return out;
}

namespace {

nlohmann::json meta_json(const GenerationMeta& m) {
    nlohmann::json j = {{"model_id", m.model_id},
                        {"prompt_tokens", m.usage.prompt_tokens},
                        {"completion_tokens", m.usage.completion_tokens},
                        {"attempts", m.attempts}};
    if (!m.finished_at.empty()) j["finished_at"] = m.finished_at;
    return j;
}

GenerationMeta meta_from(const nlohmann::json& j) {
    GenerationMeta m;
    if (j.is_null()) return m;
    m.model_id = j.value("model_id", std::string());
    m.usage.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
    m.usage.completion_tokens = j.value("completion_tokens", std::size_t{0});
    m.attempts = j.value("attempts", std::size_t{0});
    m.finished_at = j.value("finished_at", std::string());
    return m;
}

}  // namespace

void to_json(nlohmann::json& j, const SynthesisRecord& r) {
    j = {{"id", r.id},
         {"scenario", r.features.scenario.key},
         {"feature_set", r.features},
         {"synthesis_prompt", r.synthesis_prompt},
         {"raw_reply", r.raw_reply},
         {"problem_text", r.problem_text},
         {"delimiter_missing", r.delimiter_missing},
         {"answer_text", r.answer_text},
         {"status", std::string(to_string(r.status))},
         {"error", r.error},
         {"problem_backend", meta_json(r.problem_meta)},
         {"answer_backend", meta_json(r.answer_meta)}};
}

void from_json(const nlohmann::json& j, SynthesisRecord& r) {
    r.id = j.at("id").get<std::string>();
    r.features = j.at("feature_set").get<FeatureSet>();
    r.synthesis_prompt = j.value("synthesis_prompt", std::string());
    r.raw_reply = j.value("raw_reply", std::string());
    r.problem_text = j.value("problem_text", std::string());
    r.delimiter_missing = j.value("delimiter_missing", false);
    r.answer_text = j.value("answer_text", std::string());
    r.status = record_status_from_string(j.at("status").get<std::string>());
    r.error = j.value("error", std::string());
    r.problem_meta = meta_from(j.value("problem_backend", nlohmann::json()));
    r.answer_meta = meta_from(j.value("answer_backend", nlohmann::json()));
}

void to_json(nlohmann::json& j, const SftPair& p) {
    j = nlohmann::json::object();
    auto& msgs = j["messages"] = nlohmann::json::array();
    for (const auto& m : p.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    j["provenance"] = p.provenance;
}

void from_json(const nlohmann::json& j, SftPair& p) {
    p.messages.clear();
    for (const auto& m : j.at("messages")) {
        p.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
    if (p.messages.size() != 2 || p.messages[0].role != "user" || p.messages[1].role != "assistant") {
        throw std::runtime_error("SFT line must hold one user turn followed by one assistant turn");
    }
    p.provenance = j.value("provenance", std::string());
}

std::vector<SynthesisRecord> read_records(const std::filesystem::path& path) {
    std::vector<SynthesisRecord> out;
    for (const auto& j : jsonl::read(path)) out.push_back(j.get<SynthesisRecord>());
    return out;
}

void write_records(const std::filesystem::path& path, std::span<const SynthesisRecord> records) {
    jsonl::write(path, records);
}

std::vector<FeatureSet> read_feature_sets(const std::filesystem::path& path) {
    std::vector<FeatureSet> out;
    for (const auto& j : jsonl::read(path)) out.push_back(j.get<FeatureSet>());
    return out;
}

void write_feature_sets(const std::filesystem::path& path, std::span<const FeatureSet> sets) {
    jsonl::write(path, sets);
}

}  // namespace scogen
