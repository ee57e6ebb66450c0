#include "scogen/extraction.hpp"
#include "scogen/text.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace scogen;

namespace {

SeedDocument code_doc(std::string text) { return SeedDocument::make("doc-x", Source::Notebook, "python", std::move(text)); }

const std::string kMinimal =
    "Application Scenario:\nInventory forecasting for grocery chains\n\n"
    "Domain Knowledge:\n1. Time Series Decomposition: Separate trend from seasonality\n\n"
    "Domain Skill:\nNA\n\n"
    "Coding Skill:\nNA\n";

}  // namespace

TEST_SUITE("extraction") {

TEST_CASE("the worked example reply parses into the expected elements") {
    const auto e = support::worked_elements();
    CHECK(e.scenario == "Medical Imaging Diagnostic System for Breast Cancer Detection");
    REQUIRE(e.knowledge.size() == 3);
    CHECK(e.knowledge[0].name == "PyTorch Deep Learning Framework");
    CHECK(e.knowledge[1].usage == "Read and normalize medical imaging data for model input");
    REQUIRE(e.skills.size() == 3);
    for (const auto& s : e.skills) CHECK(s.has_value());
    CHECK(e.skills[0]->name == "Transfer Learning");
    CHECK(e.skills[2]->name == "Stratified K-Fold Cross Validation");
    for (const auto& c : e.coding_skills) CHECK(c.has_value());
    CHECK(e.coding_skills[0]->name == "Medical Image Preprocessing Pipeline");
    CHECK(e.coding_skills[1]->name == "PyTorch and Scikit-learn Integration");
    CHECK(e.coding_skills[2]->name == "Pixel Array Manipulation");
}

TEST_CASE("NA sections leave skills empty") {
    const auto out = parse_extraction_output(kMinimal);
    REQUIRE(std::holds_alternative<ExtractedElements>(out));
    const auto& e = std::get<ExtractedElements>(out);
    REQUIRE(e.skills.size() == 1);
    CHECK_FALSE(e.skills[0].has_value());
    for (const auto& c : e.coding_skills) CHECK_FALSE(c.has_value());
}

TEST_CASE("per-position NA skills and per-category NA coding skills") {
    const std::string reply =
        "Application Scenario: Fraud scoring for card payments\n"
        "Domain Knowledge:\n1. Gradient Boosting: Score transactions\n2. Feature Hashing: Encode merchants\n"
        "Domain Skill:\n1. Gradient Boosting:\n1.1. NA\n2. Feature Hashing:\n2.1. Hashing Trick: Map ids to buckets\n"
        "Coding Skill:\nProblem-solving and Design Thinking:\n1. NA\nTools and Frameworks:\n1. XGBoost: Train models\n"
        "Algorithms and Data Structures:\nNA\n";
    const auto out = parse_extraction_output(reply);
    REQUIRE(std::holds_alternative<ExtractedElements>(out));
    const auto& e = std::get<ExtractedElements>(out);
    CHECK(e.scenario == "Fraud scoring for card payments");
    CHECK_FALSE(e.skills[0].has_value());
    REQUIRE(e.skills[1].has_value());
    CHECK(e.skills[1]->usage == "Map ids to buckets");
    CHECK_FALSE(e.coding_skills[0].has_value());
    CHECK(e.coding_skills[1]->name == "XGBoost");
    CHECK_FALSE(e.coding_skills[2].has_value());
}

TEST_CASE("markdown decoration is tolerated") {
    const std::string reply =
        "Here is the analysis.\n\n**Application Scenario**: Route planning for delivery fleets\n\n"
        "**Domain Knowledge**:\n- Graph Search: Find shortest routes\n\n"
        "**Domain Skill**:\n- Dijkstra's Algorithm: Expand the cheapest frontier node\n\n"
        "**Coding Skill**:\n**Tools and Frameworks**:\n- NetworkX: Model road graphs\n";
    const auto out = parse_extraction_output(reply);
    REQUIRE(std::holds_alternative<ExtractedElements>(out));
    const auto& e = std::get<ExtractedElements>(out);
    CHECK(e.scenario == "Route planning for delivery fleets");
    CHECK(e.skills[0]->name == "Dijkstra's Algorithm");
    CHECK(e.coding_skills[1]->name == "NetworkX");
}

TEST_CASE("a missing section is a parse failure") {
    const std::string reply =
        "Application Scenario:\nX\n\nDomain Knowledge:\n1. A: b\n\nDomain Skill:\nNA\n";
    const auto out = parse_extraction_output(reply);
    REQUIRE(std::holds_alternative<ParseFailure>(out));
    CHECK(std::get<ParseFailure>(out).reason.find("Coding Skill") != std::string::npos);
}

TEST_CASE("malformed entries are reported with their line") {
    const std::string reply =
        "Application Scenario:\nX\nDomain Knowledge:\n1. no separator here\nDomain Skill:\nNA\nCoding Skill:\nNA\n";
    const auto out = parse_extraction_output(reply);
    REQUIRE(std::holds_alternative<ParseFailure>(out));
    CHECK(std::get<ParseFailure>(out).line == 4);
    CHECK(std::holds_alternative<ParseFailure>(parse_extraction_output(
        "Application Scenario:\nX\nDomain Knowledge:\n1. A: a\n2. B: b\n3. C: c\n4. D: d\nDomain Skill:\nNA\nCoding Skill:\nNA\n")));
    CHECK(std::holds_alternative<ParseFailure>(parse_extraction_output(
        "Application Scenario:\nNA\nDomain Knowledge:\n1. A: a\nDomain Skill:\nNA\nCoding Skill:\nNA\n")));
    CHECK(std::holds_alternative<ParseFailure>(parse_extraction_output(
        "Application Scenario:\nX\nApplication Scenario:\nY\nDomain Knowledge:\n1. A: a\nDomain Skill:\nNA\nCoding Skill:\nNA\n")));
}

TEST_CASE("the prompt embeds the document verbatim, braces included") {
    const std::string body = "def f(x): return {'a': x, '{code_text}': 1}  # {output_format}\n";
    const auto prompt = render_extraction_prompt(code_doc(body));
    CHECK(prompt.find(body) != std::string::npos);
    CHECK(prompt.find("Focus on WHERE and HOW this code would be used") != std::string::npos);
    CHECK(prompt.find(std::string(extraction_output_format())) != std::string::npos);
    CHECK(render_extraction_prompt(code_doc(body)) == prompt);
}

TEST_CASE("format then parse is lossless") {
    Rng rng(17);
    CHECK(std::get<ExtractedElements>(parse_extraction_output(format_extraction_output(support::worked_elements())))
              .knowledge == support::worked_elements().knowledge);
    for (int i = 0; i < 500; ++i) {
        auto e = support::random_elements(rng, "");
        const auto out = parse_extraction_output(format_extraction_output(e));
        REQUIRE(std::holds_alternative<ExtractedElements>(out));
        CHECK(std::get<ExtractedElements>(out) == e);
    }
}

TEST_CASE("the parser never crashes on arbitrary input") {
    Rng rng(99);
    const std::vector<std::string> pieces = {"Application Scenario:", "Domain Knowledge:", "Domain Skill:",
                                             "Coding Skill:", "Tools and Frameworks:", "1. ", "1.1. ", "NA",
                                             "A: b", ":", "\n", "**", "- ", "x", "\xEF\xBF\xBD", "\xFF", "  "};
    std::size_t parsed = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string s;
        const std::size_t n = rng.below(40);
        for (std::size_t k = 0; k < n; ++k) {
            if (rng.below(4) == 0) {
                s.push_back(static_cast<char>(rng.below(256)));
            } else {
                s += pieces[rng.below(pieces.size())];
            }
        }
        ParseOutcome out;
        CHECK_NOTHROW(out = parse_extraction_output(s));
        if (auto* e = std::get_if<ExtractedElements>(&out)) {
            ++parsed;
            CHECK_FALSE(validate(*e).has_value());
        }
    }
}

TEST_CASE("extraction retries parse failures and then skips") {
    BackendConfig cfg;
    const auto doc = code_doc("some code");
    {
        auto backend = ScriptedBackend::of({"garbage", kMinimal});
        const auto out = extract_elements(doc, backend, cfg, ExtractionPolicy{3});
        REQUIRE(std::holds_alternative<ExtractedElements>(out));
        CHECK(std::get<ExtractedElements>(out).doc_id == "doc-x");
        CHECK(backend.requests().size() == 2);
    }
    {
        auto backend = ScriptedBackend::of({"garbage", "garbage", "garbage", kMinimal});
        const auto out = extract_elements(doc, backend, cfg, ExtractionPolicy{3});
        REQUIRE(std::holds_alternative<Skip>(out));
        CHECK(std::get<Skip>(out).reason == SkipReason::ParseFailure);
        CHECK(std::get<Skip>(out).attempts == 3);
        CHECK(backend.requests().size() == 3);
    }
    {
        ScriptedBackend backend({{"", BackendErrorKind::Transport}});
        const auto out = extract_elements(doc, backend, cfg, ExtractionPolicy{3});
        REQUIRE(std::holds_alternative<Skip>(out));
        CHECK(std::get<Skip>(out).reason == SkipReason::BackendError);
    }
}

TEST_CASE("batch extraction keeps outcomes aligned with documents") {
    MockBackend mock;
    BackendConfig cfg;
    cfg.parallelism = 3;
    std::vector<SeedDocument> docs;
    for (int i = 0; i < 12; ++i) {
        docs.push_back(SeedDocument::make("d" + std::to_string(i), Source::Other, "s", "body " + std::to_string(i)));
        if (i % 4 != 0) mock.add_fixture(prompt_hash(cfg.request(render_extraction_prompt(docs.back()))), kMinimal);
    }
    const auto out = extract_batch(docs, mock, cfg, ExtractionPolicy{});
    REQUIRE(out.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i % 4 == 0) {
            REQUIRE(std::holds_alternative<Skip>(out[i]));
            CHECK(std::get<Skip>(out[i]).doc_id == docs[i].id);
        } else {
            REQUIRE(std::holds_alternative<ExtractedElements>(out[i]));
            CHECK(std::get<ExtractedElements>(out[i]).doc_id == docs[i].id);
        }
    }
}

TEST_CASE("canonicalization folds case and whitespace and is idempotent") {
    const auto k = canonicalize("  XGBoost\t Regression ", NodeKind::DK);
    CHECK(k.key == "xgboost regression");
    CHECK(canonicalize("xgboost regression", NodeKind::DK) == k);
    CHECK(canonicalize(k.key, NodeKind::DK) == k);
    CHECK(canonicalize("xgboost regression", NodeKind::CS) != k);
    CHECK_THROWS_AS(canonicalize("   ", NodeKind::AS), std::invalid_argument);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        for (std::size_t n = rng.below(20) + 1; n > 0; --n) s.push_back("aB \tc\nD"[rng.below(7)]);
        if (text::collapse_whitespace(s).empty()) continue;
        const auto once = canonicalize(s, NodeKind::DS);
        CHECK(canonicalize(once.key, NodeKind::DS) == once);
    }
}

TEST_CASE("elements JSON round-trips and rejects invalid records") {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto e = support::random_elements(rng, "d" + std::to_string(i));
        nlohmann::json j = e;
        CHECK(j.get<ExtractedElements>() == e);
    }
    nlohmann::json bad = support::worked_elements();
    bad["knowledge"] = nlohmann::json::array();
    bad["skills"] = nlohmann::json::array();
    CHECK_THROWS_AS(bad.get<ExtractedElements>(), std::invalid_argument);
}

}
