#include "scogen/sampling.hpp"
#include "scogen/text.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace scogen;

namespace {

KnowledgeGraph corpus_graph(std::uint64_t seed, std::size_t docs) {
    Rng rng(seed);
    std::vector<ExtractedElements> elements;
    for (std::size_t i = 0; i < docs; ++i) {
        elements.push_back(support::random_elements(rng, "doc-" + std::to_string(i)));
    }
    return build_graph(elements);
}

/// The eligible scenario with the most distinct features on offer.
CanonicalKey richest_scenario(const KnowledgeGraph& g) {
    CanonicalKey best;
    std::size_t best_size = 0;
    for (const auto& s : eligible_scenarios(g)) {
        const auto n = combined_distribution(g, s, kKnowledgeWalk).support.size() *
                       combined_distribution(g, s, kCodingWalk).support.size();
        if (n > best_size) {
            best_size = n;
            best = s;
        }
    }
    return best;
}

std::string selection_reply(const std::string& k, const std::string& s, const std::string& c) {
    return "Step-by-Step Thought Process\nThese fit together.\n\nSelected Elements:\n\nDomain Knowledge: " + k +
           "\nDomain Skill: " + s + "\nCoding Skill: " + c + "\n";
}

std::size_t count_prefixed(std::string_view prompt, char letter) {
    std::size_t n = 0;
    for (auto line : text::split_lines(prompt)) {
        if (line.size() > 2 && line[0] == letter && std::isdigit(static_cast<unsigned char>(line[1]))) ++n;
    }
    return n;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("knowledge draws match the reshaped distribution") {
    support::WorkedGraph w;
    for (double t : {1.0, 2.0, 3.0}) {
        const auto expected = apply_temperature(combined_distribution(w.graph, w.a, kKnowledgeWalk), t);
        SamplerConfig cfg;
        cfg.temperature = t;
        const FeatureSampler sampler(w.graph, w.a, t);
        Rng rng(derive_seed(42, "tv", static_cast<std::uint64_t>(t)));
        std::map<CanonicalKey, double> counts;
        const int n = 100000;
        for (int i = 0; i < n; ++i) counts[sampler.sample(rng).knowledge.key] += 1.0 / n;
        CHECK(oracle::total_variation(counts, support::as_map(expected)) <= 0.01);
    }
}

TEST_CASE("seeded sampling is bit-reproducible") {
    support::WorkedGraph w;
    SamplerConfig cfg;
    cfg.temperature = 2.0;
    Rng a(9), b(9);
    for (int i = 0; i < 1000; ++i) CHECK(sample_feature(w.graph, w.a, cfg, a) == sample_feature(w.graph, w.a, cfg, b));
}

TEST_CASE("features carry hop provenance and usages") {
    support::WorkedGraph w;
    Rng rng(3);
    const FeatureSampler sampler(w.graph, w.a, 1.0);
    bool saw_hop2 = false;
    for (int i = 0; i < 500; ++i) {
        const auto f = sampler.sample(rng);
        if (f.knowledge.key == w.k3) {
            saw_hop2 = true;
            CHECK(f.knowledge.hop == 2);
            CHECK(f.knowledge.path == "AS-DK>DK-DK");
            CHECK(f.knowledge.via == std::vector<std::string>{"k1"});
        } else {
            CHECK(f.knowledge.hop == 1);
            CHECK(f.knowledge.path == "AS-DK");
        }
        CHECK(f.knowledge.usage == w.graph.node(f.knowledge.key)->usages.begin()->data());
        if (f.knowledge.key == w.k1) {
            REQUIRE(f.skill.has_value());
            CHECK(f.skill->key == w.s1);
            CHECK(f.skill->path == "DK-DS");
        } else {
            CHECK_FALSE(f.skill.has_value());
        }
        CHECK(f.coding_skill.key == w.c1);
    }
    CHECK(saw_hop2);
}

TEST_CASE("usage strings are drawn uniformly from the pool") {
    KnowledgeGraph g;
    const auto a = support::key(NodeKind::AS, "a"), k = support::key(NodeKind::DK, "k"),
               c = support::key(NodeKind::CS, "c");
    g.add_edge(a, k, 1);
    g.add_edge(a, c, 1);
    for (int i = 0; i < 4; ++i) g.add_node(k, "K", "u" + std::to_string(i));
    Rng rng(1);
    std::map<std::string, int> seen;
    const FeatureSampler sampler(g, a, 1.0);
    for (int i = 0; i < 40000; ++i) ++seen[sampler.sample(rng).knowledge.usage];
    REQUIRE(seen.size() == 4);
    for (const auto& [u, n] : seen) CHECK(n == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("a single DK and CS gives the unique feature") {
    KnowledgeGraph g;
    const auto a = support::key(NodeKind::AS, "a"), k = support::key(NodeKind::DK, "k"),
               s = support::key(NodeKind::DS, "s"), c = support::key(NodeKind::CS, "c");
    g.add_edge(a, k, 2);
    g.add_edge(k, s, 1);
    g.add_edge(a, c, 5);
    SamplerConfig cfg;
    Rng rng(0);
    const auto fs = sample_feature_set_random(g, a, cfg, rng);
    REQUIRE(fs.features.size() == 1);
    CHECK(fs.features[0].knowledge.key == k);
    CHECK(fs.features[0].skill->key == s);
    CHECK(fs.features[0].coding_skill.key == c);
    CHECK(fs.strategy == "random");
}

TEST_CASE("complexity sets the number of features") {
    const auto g = corpus_graph(50, 120);
    const auto scenario = richest_scenario(g);
    for (std::size_t c : {1u, 2u, 3u}) {
        SamplerConfig cfg;
        cfg.complexity = c;
        cfg.temperature = 2.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const auto fs = sample_feature_set_random(g, scenario, cfg, rng);
            CHECK(fs.features.size() == c);
            std::set<std::tuple<std::string, std::string, std::string>> triples;
            for (const auto& f : fs.features) triples.insert(f.triple());
            CHECK(triples.size() == c);
        }
    }
}

TEST_CASE("scenarios lacking knowledge or coding skills are ineligible") {
    KnowledgeGraph g;
    const auto a = support::key(NodeKind::AS, "a"), k = support::key(NodeKind::DK, "k");
    g.add_edge(a, k, 1);
    CHECK_FALSE(is_eligible(g, a));
    Rng rng(0);
    CHECK_THROWS_AS(sample_feature_set_random(g, a, SamplerConfig{}, rng), IneligibleScenario);
    CHECK_THROWS_AS(sample_feature_sets(g, SamplerConfig{}, Strategy::Random, 3), IneligibleScenario);
    CHECK_FALSE(is_eligible(g, support::key(NodeKind::AS, "missing")));
}

TEST_CASE("too few distinct triples raises insufficient diversity") {
    KnowledgeGraph g;
    const auto a = support::key(NodeKind::AS, "a");
    g.add_edge(a, support::key(NodeKind::DK, "k1"), 1);
    g.add_edge(a, support::key(NodeKind::DK, "k2"), 1);
    g.add_edge(a, support::key(NodeKind::CS, "c"), 1);
    SamplerConfig cfg;
    cfg.complexity = 3;
    Rng rng(4);
    CHECK_THROWS_AS(sample_feature_set_random(g, a, cfg, rng), InsufficientDiversity);
    cfg.complexity = 2;
    CHECK(sample_feature_set_random(g, a, cfg, rng).features.size() == 2);
}

TEST_CASE("feature set batches are reproducible and independent of backend parallelism") {
    const auto g = corpus_graph(51, 80);
    SamplerConfig cfg;
    cfg.complexity = 2;
    cfg.temperature = 3.0;
    cfg.rng_seed = 1234;
    const auto a = sample_feature_sets(g, cfg, Strategy::Random, 30);
    const auto b = sample_feature_sets(g, cfg, Strategy::Random, 30);
    CHECK(a == b);
    REQUIRE_FALSE(a.empty());
    CHECK(a.front().id == "fs-000000");
    cfg.rng_seed = 1235;
    CHECK(sample_feature_sets(g, cfg, Strategy::Random, 30) != a);

    MockBackend mock;
    mock.add_rule({"three groups of feature descriptions", selection_reply("K1, K2", "K1, K2", "C1, C2")});
    BackendConfig serial, wide;
    serial.parallelism = 1;
    wide.parallelism = 6;
    const auto l1 = sample_feature_sets(g, cfg, Strategy::Llm, 20, &mock, &serial);
    const auto l2 = sample_feature_sets(g, cfg, Strategy::Llm, 20, &mock, &wide);
    CHECK(l1 == l2);
    CHECK_THROWS_AS(sample_feature_sets(g, cfg, Strategy::Llm, 1), std::invalid_argument);
}

TEST_CASE("llm strategy honors the selected labels") {
    const auto g = corpus_graph(52, 120);
    const auto scenario = richest_scenario(g);
    SamplerConfig cfg;
    cfg.complexity = 1;
    BackendConfig bcfg;
    Rng rng(77);
    Rng replay = rng;
    const auto candidates = sample_candidates(g, scenario, cfg, cfg.candidate_count, replay);
    REQUIRE(candidates.size() == 10);

    auto backend = ScriptedBackend::of({selection_reply("K2", "S2", "C2")});
    const auto fs = sample_feature_set_llm(g, scenario, cfg, backend, bcfg, rng);
    CHECK(fs.strategy == "llm");
    REQUIRE(fs.features.size() == 1);
    CHECK(fs.features[0] == candidates[1]);
    REQUIRE(backend.requests().size() == 1);
    CHECK(backend.requests()[0].user_text == render_selection_prompt(candidates, 1));
}

TEST_CASE("llm strategy keeps each knowledge item with its own skill") {
    const auto g = corpus_graph(53, 120);
    const auto scenario = richest_scenario(g);
    SamplerConfig cfg;
    cfg.complexity = 2;
    Rng rng(78);
    Rng replay = rng;
    const auto candidates = sample_candidates(g, scenario, cfg, cfg.candidate_count, replay);
    std::string k = "K3, K7", c = "C9, C1";
    // Pick a coding pair that does not collide with the knowledge pair.
    auto backend = ScriptedBackend::of({selection_reply(k, "S7, S3", c)});
    const auto fs = sample_feature_set_llm(g, scenario, cfg, backend, BackendConfig{}, rng);
    if (fs.strategy == "llm") {
        CHECK(fs.features[0].knowledge == candidates[2].knowledge);
        CHECK(fs.features[0].skill == candidates[2].skill);
        CHECK(fs.features[0].coding_skill == candidates[8].coding_skill);
        CHECK(fs.features[1].knowledge == candidates[6].knowledge);
        CHECK(fs.features[1].skill == candidates[6].skill);
        CHECK(fs.features[1].coding_skill == candidates[0].coding_skill);
    } else {
        // Only possible when the two combined triples coincide.
        CHECK(std::make_tuple(candidates[2].knowledge.key, candidates[8].coding_skill.key) ==
              std::make_tuple(candidates[6].knowledge.key, candidates[0].coding_skill.key));
    }
}

TEST_CASE("llm strategy retries malformed selections and then falls back") {
    const auto g = corpus_graph(54, 120);
    const auto scenario = richest_scenario(g);
    SamplerConfig cfg;
    cfg.complexity = 1;
    {
        auto backend = ScriptedBackend::of({selection_reply("K11", "S11", "C11"), selection_reply("K1", "S1", "C1")});
        Rng rng(5);
        const auto fs = sample_feature_set_llm(g, scenario, cfg, backend, BackendConfig{}, rng);
        CHECK(fs.strategy == "llm");
        CHECK(backend.requests().size() == 2);
    }
    {
        auto backend = ScriptedBackend::of({selection_reply("K11", "S11", "C11"), "no labels at all",
                                            selection_reply("K0", "S0", "C0"), selection_reply("K1", "S1", "C1")});
        Rng rng(5);
        const auto fs = sample_feature_set_llm(g, scenario, cfg, backend, BackendConfig{}, rng);
        CHECK(fs.strategy == "llm-fallback-random");
        CHECK(fs.features.size() == 1);
        CHECK(backend.requests().size() == 3);
    }
    {
        ScriptedBackend backend({{"", BackendErrorKind::Transport}, {"", BackendErrorKind::Transport},
                                 {"", BackendErrorKind::Transport}});
        Rng rng(5);
        CHECK(sample_feature_set_llm(g, scenario, cfg, backend, BackendConfig{}, rng).strategy ==
              "llm-fallback-random");
    }
}

TEST_CASE("selection parsing validates labels") {
    const auto g = corpus_graph(55, 120);
    const auto scenario = richest_scenario(g);
    SamplerConfig cfg;
    Rng rng(6);
    const auto cands = sample_candidates(g, scenario, cfg, 10, rng);
    auto ok = [&](const std::string& reply, std::size_t n) {
        return std::holds_alternative<Selection>(parse_selection(reply, cands, n));
    };
    CHECK(ok(selection_reply("K1, K4", "S1, S4", "C2, C7"), 2));
    CHECK(ok(selection_reply("K4, K1", "S1, S4", "C2, C7"), 2));
    CHECK_FALSE(ok(selection_reply("K1, K4", "S1, S5", "C2, C7"), 2));
    CHECK_FALSE(ok(selection_reply("K1", "S1", "C2, C7"), 2));
    CHECK_FALSE(ok(selection_reply("K1, K1", "S1, S1", "C2, C7"), 2));
    CHECK_FALSE(ok(selection_reply("K1, K12", "S1, S12", "C2, C7"), 2));
    CHECK(ok("Selected Elements:\n**Domain Knowledge**: K3\n**Coding Skill**: C5\n", 1));
    // Thought-process mentions before the final marker are ignored.
    const std::string noisy = "Domain Knowledge: K9 looks good\nSelected Elements:\nDomain Knowledge: K2\n"
                              "Domain Skill: S2\nCoding Skill: C3\n";
    const auto sel = std::get<Selection>(parse_selection(noisy, cands, 1));
    CHECK(sel.knowledge == std::vector<std::size_t>{1});
    CHECK(sel.coding == std::vector<std::size_t>{2});
}

TEST_CASE("selection prompt lists ten items per group") {
    const auto g = corpus_graph(56, 120);
    const auto scenario = richest_scenario(g);
    SamplerConfig cfg;
    cfg.complexity = 2;
    Rng rng(2025);
    const auto cands = sample_candidates(g, scenario, cfg, 10, rng);
    const auto prompt = render_selection_prompt(cands, 2);
    CHECK(count_prefixed(prompt, 'K') == 10);
    CHECK(count_prefixed(prompt, 'S') == 10);
    CHECK(count_prefixed(prompt, 'C') == 10);
    CHECK(prompt.find("three groups of feature descriptions, with 10 items in each group") != std::string::npos);
    CHECK(prompt.find("please do not separate them") != std::string::npos);
    CHECK(prompt.find("select 2 most appropriate elements, 2 from each group") != std::string::npos);

    const auto golden = support::fixture("selection_prompt_golden.txt");
    if (std::getenv("SCOGEN_UPDATE_GOLDEN")) jsonl::write_text(golden, prompt);
    CHECK(prompt == jsonl::read_text(golden));
}

TEST_CASE("candidate pools top up with repeats when distinct features run out") {
    KnowledgeGraph g;
    const auto a = support::key(NodeKind::AS, "a");
    g.add_edge(a, support::key(NodeKind::DK, "k"), 1);
    g.add_edge(a, support::key(NodeKind::CS, "c1"), 1);
    g.add_edge(a, support::key(NodeKind::CS, "c2"), 1);
    Rng rng(1);
    const auto cands = sample_candidates(g, a, SamplerConfig{}, 10, rng);
    CHECK(cands.size() == 10);
    std::set<std::tuple<std::string, std::string, std::string>> distinct;
    for (const auto& f : cands) distinct.insert(f.triple());
    CHECK(distinct.size() == 2);
}

TEST_CASE("feature sets round-trip through JSON") {
    const auto g = corpus_graph(57, 60);
    SamplerConfig cfg;
    cfg.complexity = 2;
    for (const auto& fs : sample_feature_sets(g, cfg, Strategy::Random, 10)) {
        const nlohmann::json j = fs;
        auto back = j.get<FeatureSet>();
        CHECK(back == fs);
    }
}

TEST_CASE("sampler config validation") {
    SamplerConfig cfg;
    CHECK(cfg.validate().empty());
    cfg.temperature = 0;
    CHECK_FALSE(cfg.validate().empty());
    cfg.temperature = 3;
    cfg.complexity = 0;
    CHECK_FALSE(cfg.validate().empty());
    cfg.complexity = 1;
    CHECK(cfg.validate().empty());
    CHECK(strategy_from_string("llm") == Strategy::Llm);
    CHECK_THROWS_AS(strategy_from_string("greedy"), std::invalid_argument);
}

}
