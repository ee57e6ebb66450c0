#include "scogen/graph.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace scogen;

namespace {

std::vector<ExtractedElements> random_corpus(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<ExtractedElements> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back(support::random_elements(rng, "doc-" + std::to_string(i)));
    return docs;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("the worked example yields three edges per populated relation") {
    KnowledgeGraph g;
    CHECK(g.accumulate(support::worked_elements()));
    const auto stats = graph_stats(g);
    CHECK(stats.nodes_per_kind.at("AS") == 1);
    CHECK(stats.nodes_per_kind.at("DK") == 3);
    CHECK(stats.nodes_per_kind.at("DS") == 3);
    CHECK(stats.nodes_per_kind.at("CS") == 3);
    CHECK(stats.edges_per_relation.at("AS-DK") == 3);
    CHECK(stats.edges_per_relation.at("AS-CS") == 3);
    CHECK(stats.edges_per_relation.at("DK-DS") == 3);
    CHECK(stats.edges_per_relation.at("DK-DK") == 3);
    CHECK(stats.edges_per_relation.at("CS-CS") == 3);
    for (const auto& e : g.edges()) CHECK(e.frequency == 1);
    CHECK(stats.scenarios_without_cs.empty());
    CHECK(stats.documents == 1);
}

TEST_CASE("relations are restricted to the five typed pairs") {
    CHECK(relation_between(NodeKind::AS, NodeKind::DK) == Relation::AS_DK);
    CHECK(relation_between(NodeKind::DK, NodeKind::AS) == Relation::AS_DK);
    CHECK(relation_between(NodeKind::DS, NodeKind::DK) == Relation::DK_DS);
    CHECK(relation_between(NodeKind::CS, NodeKind::CS) == Relation::CS_CS);
    CHECK_FALSE(relation_between(NodeKind::AS, NodeKind::AS).has_value());
    CHECK_FALSE(relation_between(NodeKind::AS, NodeKind::DS).has_value());
    CHECK_FALSE(relation_between(NodeKind::DS, NodeKind::DS).has_value());
    CHECK_FALSE(relation_between(NodeKind::DK, NodeKind::CS).has_value());
    CHECK_FALSE(relation_between(NodeKind::DS, NodeKind::CS).has_value());
    KnowledgeGraph g;
    CHECK_THROWS_AS(g.add_edge(support::key(NodeKind::DK, "x"), support::key(NodeKind::CS, "y"), 1),
                    std::invalid_argument);
    for (auto r : kAllRelations) CHECK(relation_from_string(to_string(r)) == r);
}

TEST_CASE("edge frequencies equal a brute-force document recount") {
    const auto docs = random_corpus(31, 100);
    const auto g = build_graph(docs);
    const auto expected = oracle::cooccurrence(docs);
    std::size_t edges = 0;
    for (const auto& e : g.edges()) {
        ++edges;
        const auto [ka, kb] = endpoint_kinds(e.relation);
        CHECK(relation_between(e.a.kind, e.b.kind) == e.relation);
        CHECK(((e.a.kind == ka && e.b.kind == kb) || (e.a.kind == kb && e.b.kind == ka)));
        auto x = e.a, y = e.b;
        if (y < x) std::swap(x, y);
        const auto it = expected.find({e.relation, x, y});
        REQUIRE(it != expected.end());
        CHECK(e.frequency == it->second);
        CHECK(g.frequency(e.a, e.b) == it->second);
        CHECK(g.frequency(e.b, e.a) == it->second);
    }
    CHECK(edges == expected.size());
    CHECK(g.document_count() == 100);
}

TEST_CASE("node usage pools collect every distinct usage") {
    const auto docs = random_corpus(32, 60);
    const auto g = build_graph(docs);
    std::map<CanonicalKey, std::set<std::string>> usages;
    std::map<CanonicalKey, std::set<std::string>> doc_sets;
    for (const auto& d : docs) {
        doc_sets[canonicalize(d.scenario, NodeKind::AS)].insert(d.doc_id);
        for (std::size_t i = 0; i < d.knowledge.size(); ++i) {
            const auto k = canonicalize(d.knowledge[i].name, NodeKind::DK);
            usages[k].insert(d.knowledge[i].usage);
            doc_sets[k].insert(d.doc_id);
            if (d.skills[i]) {
                const auto s = canonicalize(d.skills[i]->name, NodeKind::DS);
                usages[s].insert(d.skills[i]->usage);
                doc_sets[s].insert(d.doc_id);
            }
        }
        for (const auto& c : d.coding_skills) {
            if (!c) continue;
            const auto k = canonicalize(c->name, NodeKind::CS);
            usages[k].insert(c->usage);
            doc_sets[k].insert(d.doc_id);
        }
    }
    CHECK(g.nodes().size() == doc_sets.size());
    for (const auto& [k, n] : g.nodes()) {
        CHECK(n.doc_count == doc_sets.at(k).size());
        if (k.kind != NodeKind::AS) CHECK(n.usages == usages.at(k));
    }
}

TEST_CASE("graph construction is independent of document order") {
    auto docs = random_corpus(33, 80);
    const auto a = build_graph(docs);
    std::mt19937_64 shuffler(1);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(docs.begin(), docs.end(), shuffler);
        CHECK(build_graph(docs) == a);
        // Incremental accumulation in shuffled order agrees on counts.
        KnowledgeGraph inc;
        for (const auto& d : docs) inc.accumulate(d);
        CHECK(inc.edges() == a.edges());
    }
}

TEST_CASE("merging partial graphs equals building from the union") {
    const auto docs = random_corpus(34, 50);
    const auto whole = build_graph(docs);
    const std::vector<ExtractedElements> left(docs.begin(), docs.begin() + 20), right(docs.begin() + 20, docs.end());
    auto merged = build_graph(left);
    merged.merge(build_graph(right));
    CHECK(merged.edges() == whole.edges());
    CHECK(merged.documents() == whole.documents());
    CHECK_THROWS_AS(merged.merge(build_graph(left)), std::invalid_argument);
}

TEST_CASE("a repeated document id is rejected") {
    KnowledgeGraph g;
    const auto e = support::worked_elements();
    CHECK(g.accumulate(e));
    const auto before = g;
    CHECK_FALSE(g.accumulate(e));
    CHECK(g == before);
}

TEST_CASE("invalid elements are refused") {
    KnowledgeGraph g;
    auto e = support::worked_elements();
    e.knowledge.clear();
    e.skills.clear();
    CHECK_THROWS_AS(g.accumulate(e), std::invalid_argument);
}

TEST_CASE("repeated mentions within one document count once") {
    ExtractedElements e;
    e.doc_id = "r";
    e.scenario = "Scenario";
    e.knowledge = {{"Pandas", "a"}, {"pandas", "b"}};
    e.skills = {std::nullopt, std::nullopt};
    e.coding_skills[0] = Entry{"Loops", "x"};
    e.coding_skills[1] = Entry{"LOOPS", "y"};
    KnowledgeGraph g;
    g.accumulate(e);
    CHECK(g.nodes_of(NodeKind::DK).size() == 1);
    CHECK(g.neighbors(support::key(NodeKind::DK, "pandas"), Relation::DK_DK).empty());
    CHECK(g.frequency(support::key(NodeKind::AS, "scenario"), support::key(NodeKind::DK, "pandas")) == 1);
    CHECK(g.node(support::key(NodeKind::DK, "pandas"))->usages == std::set<std::string>{"a", "b"});
    CHECK(g.nodes_of(NodeKind::CS).size() == 1);
}

TEST_CASE("save and load round-trip exactly") {
    support::TempDir dir("graph");
    auto g = build_graph(random_corpus(35, 40));
    g.set_source_digest("abc123");
    save_graph(g, dir / "g.json");
    const auto back = load_graph(dir / "g.json");
    CHECK(back == g);
    save_graph(back, dir / "g2.json");
    CHECK(jsonl::read_text(dir / "g.json") == jsonl::read_text(dir / "g2.json"));
}

TEST_CASE("damaged graph files are detected") {
    support::TempDir dir("graph-bad");
    const auto g = build_graph(random_corpus(36, 10));
    save_graph(g, dir / "g.json");
    const auto text = jsonl::read_text(dir / "g.json");

    jsonl::write_text(dir / "trunc.json", text.substr(0, text.size() / 2));
    try {
        load_graph(dir / "trunc.json");
        FAIL("expected a corrupt-file error");
    } catch (const GraphFileError& e) {
        CHECK(e.kind() == GraphFileError::Kind::Corrupt);
    }

    auto j = graph_to_json(g);
    j["version"] = kGraphFormatVersion + 1;
    jsonl::write_text(dir / "ver.json", j.dump());
    try {
        load_graph(dir / "ver.json");
        FAIL("expected a version error");
    } catch (const GraphFileError& e) {
        CHECK(e.kind() == GraphFileError::Kind::VersionMismatch);
    }

    auto dangling = graph_to_json(g);
    dangling["edges"].push_back({{"a", "nowhere"}, {"b", "nothing"}, {"relation", "DK-DK"}, {"frequency", 1}});
    jsonl::write_text(dir / "dangling.json", dangling.dump());
    CHECK_THROWS_AS(load_graph(dir / "dangling.json"), GraphFileError);
    CHECK_THROWS_AS(load_graph(dir / "missing.json"), GraphFileError);
}

TEST_CASE("stats list scenarios lacking coding skills") {
    ExtractedElements e;
    e.doc_id = "no-cs";
    e.scenario = "Lonely Scenario";
    e.knowledge = {{"K", "u"}};
    e.skills = {std::nullopt};
    KnowledgeGraph g;
    g.accumulate(e);
    g.accumulate(support::worked_elements());
    const auto s = graph_stats(g);
    CHECK(s.scenarios_without_cs == std::vector<std::string>{"lonely scenario"});
    std::size_t total = 0;
    for (const auto& [d, c] : s.degree_histogram) total += c;
    CHECK(total == g.nodes().size());
    const nlohmann::json j = s;
    CHECK(j["documents"] == 2);
}

}
