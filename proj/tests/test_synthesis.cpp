#include "scogen/synthesis.hpp"
#include "scogen/text.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace scogen;

namespace {

Choice choice(NodeKind kind, const std::string& name, const std::string& usage) {
    Choice c;
    c.key = canonicalize(name, kind);
    c.name = name;
    c.usage = usage;
    c.path = kind == NodeKind::DS ? "DK-DS" : kind == NodeKind::DK ? "AS-DK" : "AS-CS";
    return c;
}

FeatureSet feature_set(std::size_t c, const std::string& id = "fs-000001") {
    FeatureSet fs;
    fs.id = id;
    fs.scenario = canonicalize("Medical Imaging Diagnostic System", NodeKind::AS);
    fs.scenario_name = "Medical Imaging Diagnostic System";
    fs.strategy = "random";
    fs.config.complexity = c;
    const char* knowledge[] = {"DICOM Image Processing", "Stratified Sampling", "PyTorch Deep Learning Framework"};
    const char* skills[] = {"Pixel Normalization", "", "Transfer Learning"};
    const char* coding[] = {"Pixel Array Manipulation", "Medical Image Preprocessing Pipeline",
                            "PyTorch and Scikit-learn Integration"};
    for (std::size_t i = 0; i < c; ++i) {
        Feature f;
        f.knowledge = choice(NodeKind::DK, knowledge[i % 3], "usage of " + std::string(knowledge[i % 3]));
        if (*skills[i % 3]) f.skill = choice(NodeKind::DS, skills[i % 3], "how to " + std::string(skills[i % 3]));
        f.coding_skill = choice(NodeKind::CS, coding[i % 3], "apply " + std::string(coding[i % 3]));
        fs.features.push_back(f);
    }
    return fs;
}

std::size_t count_lines_starting(std::string_view s, std::string_view prefix) {
    std::size_t n = 0;
    for (auto line : text::split_lines(s)) n += text::istarts_with(line, prefix) ? 1 : 0;
    return n;
}

SynthesisRecord complete_record(const std::string& id, const std::string& problem, const std::string& answer) {
    SynthesisRecord r;
    r.id = id;
    r.features = feature_set(1, id);
    r.problem_text = problem;
    r.answer_text = answer;
    r.status = RecordStatus::Complete;
    return r;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("prompt renders one block per feature") {
    for (std::size_t c : {1u, 2u, 3u}) {
        const auto prompt = render_synthesis_prompt(feature_set(c));
        CHECK(count_lines_starting(prompt, "Feature ") == c);
        CHECK(count_lines_starting(prompt, "- Domain Knowledge: ") == c);
        CHECK(count_lines_starting(prompt, "- Domain Skill: ") == c);
        CHECK(count_lines_starting(prompt, "- Coding Skill: ") == c);
    }
    const auto prompt = render_synthesis_prompt(feature_set(2));
    CHECK(prompt.find("- Domain Skill: NA") != std::string::npos);
    CHECK(prompt.find("- Domain Knowledge: DICOM Image Processing: usage of DICOM Image Processing") !=
          std::string::npos);
}

TEST_CASE("prompt is byte-stable and carries the fixed guidelines") {
    const auto a = render_synthesis_prompt(feature_set(3));
    CHECK(a == render_synthesis_prompt(feature_set(3)));
    CHECK(a.find("Do not generate any bonus or optional challenges.") != std::string::npos);
    CHECK(a.find("provide schema and examples of the dataset") != std::string::npos);
    CHECK(a.find(std::string(synthesis_output_format())) != std::string::npos);
    CHECK(a.find("{features}") == std::string::npos);
}

TEST_CASE("reply splitting keeps only the problem") {
    const auto s = split_synthesis_reply("Step-by-Step Thought Process:\nthink\n\nReal-World Coding Problem:\nBuild X.\nMore.");
    CHECK(s.delimiter_found);
    CHECK(s.problem == "Build X.\nMore.");
    const auto bold = split_synthesis_reply("**Real-World Coding Problem:** Build Y.");
    CHECK(bold.delimiter_found);
    CHECK(bold.problem == "Build Y.");
    const auto md = split_synthesis_reply("thoughts\n### Real World Coding Problem\nBuild Z.");
    CHECK(md.delimiter_found);
    CHECK(md.problem == "Build Z.");
    const auto none = split_synthesis_reply("  Just a problem statement.  \n");
    CHECK_FALSE(none.delimiter_found);
    CHECK(none.problem == "Just a problem statement.");
}

TEST_CASE("a fixture keyed by prompt hash yields a problem with a dataset schema") {
    const auto fs = feature_set(3);
    BackendConfig cfg;
    MockBackend mock;
    mock.add_fixture(prompt_hash(cfg.request(render_synthesis_prompt(fs))),
                     jsonl::read_text(support::fixture("synthesis_reply_schema.txt")));
    const auto rec = synthesize_problem(fs, mock, cfg);
    CHECK(rec.status == RecordStatus::Problem);
    CHECK_FALSE(rec.delimiter_missing);
    CHECK(rec.problem_text.find("schema") != std::string::npos);
    CHECK(rec.problem_text.rfind("A regional screening clinic", 0) == 0);
    CHECK(rec.problem_text.find("Thought Process") == std::string::npos);
    CHECK(rec.raw_reply.find("Thought Process") != std::string::npos);
    CHECK(rec.id == fs.id);
    CHECK(rec.problem_meta.model_id == cfg.model_id);
    CHECK(rec.problem_meta.finished_at.empty());
}

TEST_CASE("a reply without the delimiter is kept whole and flagged") {
    auto backend = ScriptedBackend::of({"Design a queue service."});
    const auto rec = synthesize_problem(feature_set(1), backend, BackendConfig{});
    CHECK(rec.status == RecordStatus::Problem);
    CHECK(rec.delimiter_missing);
    CHECK(rec.problem_text == "Design a queue service.");
}

TEST_CASE("backend failures become failed records") {
    ScriptedBackend backend({{"", BackendErrorKind::Transport}});
    auto rec = synthesize_problem(feature_set(1), backend, BackendConfig{});
    CHECK(rec.status == RecordStatus::ProblemFailed);
    CHECK_FALSE(rec.error.empty());
    auto again = ScriptedBackend::of({"answer"});
    CHECK_THROWS_AS(generate_answer(rec, again, BackendConfig{}), BackendError);
    try {
        generate_answer(rec, again, BackendConfig{});
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::Precondition);
    }
    CHECK(again.requests().empty());
}

TEST_CASE("answers are requested with the problem text alone") {
    auto backend = ScriptedBackend::of({"Real-World Coding Problem:\nSolve it.", "def solve(): pass"});
    auto rec = synthesize_problem(feature_set(1), backend, BackendConfig{});
    generate_answer(rec, backend, BackendConfig{});
    CHECK(rec.status == RecordStatus::Complete);
    CHECK(rec.answer_text == "def solve(): pass");
    REQUIRE(backend.requests().size() == 2);
    CHECK(backend.requests()[1].user_text == "Solve it.");

    auto empty = ScriptedBackend::of({"Real-World Coding Problem:\nSolve it.", "   "});
    auto rec2 = synthesize_problem(feature_set(1), empty, BackendConfig{});
    generate_answer(rec2, empty, BackendConfig{});
    CHECK(rec2.status == RecordStatus::AnswerFailed);
}

TEST_CASE("timestamps are recorded only on request") {
    auto backend = ScriptedBackend::of({"Real-World Coding Problem:\nP"});
    const auto rec = synthesize_problem(feature_set(1), backend, BackendConfig{}, SynthesisOptions{true});
    CHECK(rec.problem_meta.finished_at.size() == 20);
    CHECK(rec.problem_meta.finished_at.back() == 'Z');
}

TEST_CASE("batches stay aligned with their inputs") {
    std::vector<FeatureSet> sets;
    for (int i = 0; i < 10; ++i) sets.push_back(feature_set(1 + i % 3, "fs-" + std::to_string(i)));
    MockBackend mock;
    mock.add_rule({"You are a problem designer", "Real-World Coding Problem:\nProblem {hash8}"});
    mock.add_rule({"Problem ", "Answer to a problem"});
    BackendConfig cfg;
    cfg.parallelism = 4;
    auto records = synthesize_batch(sets, mock, cfg);
    REQUIRE(records.size() == 10);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        CHECK(records[i].id == sets[i].id);
        CHECK(records[i].features == sets[i]);
        const auto hash = prompt_hash(cfg.request(render_synthesis_prompt(sets[i])));
        CHECK(records[i].problem_text == "Problem " + hash.substr(0, 8));
    }
    records[3].status = RecordStatus::ProblemFailed;
    answer_batch(records, mock, cfg);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].status == (i == 3 ? RecordStatus::ProblemFailed : RecordStatus::Complete));
    }
    cfg.parallelism = 1;
    CHECK(synthesize_batch(sets, mock, cfg)[7] == synthesize_batch(sets, mock, BackendConfig{})[7]);
}

TEST_CASE("export writes only complete records") {
    support::TempDir dir("sft");
    CHECK(export_sft(std::vector<SynthesisRecord>{}, dir / "empty.jsonl").written == 0);
    CHECK(read_sft(dir / "empty.jsonl").empty());

    std::vector<SynthesisRecord> records{complete_record("a", "P1", "A1"), complete_record("b", "P2", "A2"),
                                         complete_record("c", "P3", "A3"), complete_record("d", "P4", "")};
    records[3].status = RecordStatus::AnswerFailed;
    const auto res = export_sft(records, dir / "sft.jsonl");
    CHECK(res.written == 3);
    CHECK(res.skipped_incomplete == 1);
    const auto pairs = read_sft(dir / "sft.jsonl");
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].messages == std::vector<SftMessage>{{"user", "P1"}, {"assistant", "A1"}});
    CHECK(pairs[2].provenance == "c");
    const std::string written = jsonl::read_text(dir / "sft.jsonl");
    const auto line = text::split_lines(written)[0];
    CHECK(line == R"({"messages":[{"content":"P1","role":"user"},{"content":"A1","role":"assistant"}],"provenance":"a"})");
}

TEST_CASE("optional problem dedup") {
    std::vector<SynthesisRecord> records{complete_record("a", "Same", "A1"), complete_record("b", "Same", "A2")};
    CHECK(to_sft_pairs(records).size() == 2);
    ExportResult r;
    CHECK(to_sft_pairs(records, ExportOptions{true}, &r).size() == 1);
    CHECK(r.skipped_duplicate == 1);
}

TEST_CASE("malformed SFT files are rejected") {
    support::TempDir dir("sft-bad");
    jsonl::write_text(dir / "x.jsonl", R"({"messages":[{"role":"assistant","content":"a"},{"role":"user","content":"b"}],"provenance":"x"})" "\n");
    CHECK_THROWS(read_sft(dir / "x.jsonl"));
}

TEST_CASE("records and feature sets round-trip through JSONL") {
    support::TempDir dir("records");
    auto backend = ScriptedBackend::of({"Real-World Coding Problem:\nP", "A"});
    auto rec = synthesize_problem(feature_set(3), backend, BackendConfig{});
    generate_answer(rec, backend, BackendConfig{});
    write_records(dir / "r.jsonl", std::vector{rec});
    CHECK(read_records(dir / "r.jsonl") == std::vector{rec});
    write_feature_sets(dir / "f.jsonl", std::vector{rec.features});
    CHECK(read_feature_sets(dir / "f.jsonl") == std::vector{rec.features});
    for (auto s : {RecordStatus::ProblemFailed, RecordStatus::Problem, RecordStatus::AnswerFailed,
                   RecordStatus::Complete}) {
        CHECK(record_status_from_string(to_string(s)) == s);
    }
}

}
