// Shared fixtures for the unit and acceptance tests.
#pragma once

#include "oracles.hpp"
#include "scogen/extraction.hpp"
#include "scogen/graph.hpp"
#include "scogen/hashing.hpp"
#include "scogen/jsonl.hpp"
#include "scogen/transition.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#ifndef SCOGEN_SOURCE_DIR
#define SCOGEN_SOURCE_DIR "."
#endif

namespace support {

using scogen::CanonicalKey;
using scogen::NodeKind;
using scogen::Relation;

inline std::filesystem::path source_dir() { return SCOGEN_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

inline CanonicalKey key(NodeKind kind, const std::string& name) { return {kind, name}; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        scogen::Rng rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("scogen-" + tag + "-" + std::to_string(rng.next() % 1000000007) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// a-k1 f=3, a-k2 f=1, k1-k2 f=1, k1-k3 f=2, plus one coding skill and one
/// domain skill so the scenario can be sampled.
struct WorkedGraph {
    scogen::KnowledgeGraph graph;
    CanonicalKey a = key(NodeKind::AS, "a");
    CanonicalKey k1 = key(NodeKind::DK, "k1");
    CanonicalKey k2 = key(NodeKind::DK, "k2");
    CanonicalKey k3 = key(NodeKind::DK, "k3");
    CanonicalKey s1 = key(NodeKind::DS, "s1");
    CanonicalKey c1 = key(NodeKind::CS, "c1");

    WorkedGraph() {
        graph.add_node(a, "A");
        graph.add_node(k1, "K1", "k1 usage");
        graph.add_node(k2, "K2", "k2 usage");
        graph.add_node(k3, "K3", "k3 usage");
        graph.add_node(s1, "S1", "s1 usage");
        graph.add_node(c1, "C1", "c1 usage");
        graph.add_edge(a, k1, 3);
        graph.add_edge(a, k2, 1);
        graph.add_edge(k1, k2, 1);
        graph.add_edge(k1, k3, 2);
        graph.add_edge(k1, s1, 1);
        graph.add_edge(a, c1, 1);
    }
};

struct RandomGraph {
    scogen::KnowledgeGraph graph;
    std::vector<oracle::RawEdge> edges;
    std::vector<CanonicalKey> nodes;
};

/// Random typed graph with up to `max_nodes` nodes; every edge respects the
/// five relations and some pairs receive several add_edge calls.
inline RandomGraph random_graph(scogen::Rng& rng, std::size_t max_nodes) {
    RandomGraph g;
    const std::size_t n = 2 + rng.below(max_nodes - 1);
    const NodeKind kinds[] = {NodeKind::AS, NodeKind::DK, NodeKind::DS, NodeKind::CS};
    for (std::size_t i = 0; i < n; ++i) {
        NodeKind kind = i == 0 ? NodeKind::AS : i == 1 ? NodeKind::DK : kinds[rng.below(4)];
        g.nodes.push_back(key(kind, "n" + std::to_string(i)));
        g.graph.add_node(g.nodes.back(), "N" + std::to_string(i), "usage " + std::to_string(i));
    }
    const double density = 0.05 + 0.4 * rng.uniform01();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            auto rel = scogen::relation_between(g.nodes[i].kind, g.nodes[j].kind);
            if (!rel || rng.uniform01() >= density) continue;
            const std::size_t repeats = 1 + rng.below(2);
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto f = 1 + rng.below(5);
                const bool flip = rng.below(2) == 1;
                const auto& x = flip ? g.nodes[j] : g.nodes[i];
                const auto& y = flip ? g.nodes[i] : g.nodes[j];
                g.graph.add_edge(x, y, f);
                g.edges.push_back({x, y, *rel, static_cast<double>(f)});
            }
        }
    }
    return g;
}

inline scogen::ExtractedElements worked_elements() {
    auto outcome = scogen::parse_extraction_output(scogen::jsonl::read_text(fixture("worked_extraction_reply.txt")));
    auto e = std::get<scogen::ExtractedElements>(outcome);
    e.doc_id = "worked-example";
    return e;
}

/// Random valid ExtractedElements drawn from small vocabularies so that
/// documents share nodes.
inline scogen::ExtractedElements random_elements(scogen::Rng& rng, const std::string& doc_id) {
    scogen::ExtractedElements e;
    e.doc_id = doc_id;
    e.scenario = "Scenario " + std::to_string(rng.below(6));
    const std::size_t k = 1 + rng.below(3);
    std::set<std::uint64_t> used;
    while (e.knowledge.size() < k) {
        const auto id = rng.below(12);
        if (!used.insert(id).second) continue;
        e.knowledge.push_back({"Knowledge " + std::to_string(id), "use " + std::to_string(rng.below(3))});
        if (rng.below(4) == 0) {
            e.skills.push_back(std::nullopt);
        } else {
            e.skills.push_back(scogen::Entry{"Skill " + std::to_string(rng.below(10)), "how " + std::to_string(rng.below(3))});
        }
    }
    for (auto& c : e.coding_skills) {
        if (rng.below(5) != 0) c = scogen::Entry{"Coding " + std::to_string(rng.below(9)), "apply " + std::to_string(rng.below(3))};
    }
    return e;
}

inline std::map<CanonicalKey, double> as_map(const scogen::TransitionDistribution& d) {
    return {d.support.begin(), d.support.end()};
}

}  // namespace support
