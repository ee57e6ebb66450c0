#include "scogen/graph.hpp"

#include "scogen/jsonl.hpp"

#include <algorithm>
#include <fstream>

namespace scogen {

std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::AS_DK: return "AS-DK";
        case Relation::AS_CS: return "AS-CS";
        case Relation::DK_DS: return "DK-DS";
        case Relation::DK_DK: return "DK-DK";
        case Relation::CS_CS: return "CS-CS";
    }
    return "";
}

Relation relation_from_string(std::string_view s) {
    for (auto r : kAllRelations) {
        if (to_string(r) == s) return r;
    }
    throw std::invalid_argument("unknown relation: " + std::string(s));
}

std::pair<NodeKind, NodeKind> endpoint_kinds(Relation r) {
    switch (r) {
        case Relation::AS_DK: return {NodeKind::AS, NodeKind::DK};
        case Relation::AS_CS: return {NodeKind::AS, NodeKind::CS};
        case Relation::DK_DS: return {NodeKind::DK, NodeKind::DS};
        case Relation::DK_DK: return {NodeKind::DK, NodeKind::DK};
        case Relation::CS_CS: return {NodeKind::CS, NodeKind::CS};
    }
    return {NodeKind::AS, NodeKind::DK};
}

std::optional<Relation> relation_between(NodeKind a, NodeKind b) {
    for (auto r : kAllRelations) {
        const auto [x, y] = endpoint_kinds(r);
        if ((x == a && y == b) || (x == b && y == a)) return r;
    }
    return std::nullopt;
}

Node& KnowledgeGraph::touch(const CanonicalKey& key, const std::string& display_name, const std::string& doc_id) {
    auto [it, inserted] = nodes_.try_emplace(key);
    Node& n = it->second;
    if (inserted) {
        n.key = key;
        n.display_name = display_name;
        n.display_doc = doc_id;
    } else if (doc_id < n.display_doc) {
        // Display name comes from the smallest contributing doc id, which
        // keeps accumulation commutative.
        n.display_name = display_name;
        n.display_doc = doc_id;
    }
    return n;
}

void KnowledgeGraph::bump(const CanonicalKey& a, const CanonicalKey& b, Relation r, std::uint64_t by) {
    adjacency_[a][r][b] += by;
    adjacency_[b][r][a] += by;
}

bool KnowledgeGraph::accumulate(const ExtractedElements& e) {
    if (auto err = validate(e)) throw std::invalid_argument("invalid elements for " + e.doc_id + ": " + *err);
    if (documents_.contains(e.doc_id)) return false;

    // Per-document node set with usages, then the induced pair set; each
    // pair contributes once however often it repeats in the document.
    struct Mention {
        std::string display;
        std::set<std::string> usages;
    };
    std::map<CanonicalKey, Mention> mentions;
    auto mention = [&](const CanonicalKey& key, const std::string& display, const std::string& usage) {
        auto [it, inserted] = mentions.try_emplace(key, Mention{display, {}});
        if (!usage.empty()) it->second.usages.insert(usage);
    };

    const auto scenario = canonicalize(e.scenario, NodeKind::AS);
    mention(scenario, e.scenario, {});

    std::set<std::pair<CanonicalKey, CanonicalKey>> pairs;
    auto pair = [&](const CanonicalKey& a, const CanonicalKey& b) {
        if (a == b) return;
        pairs.emplace(std::min(a, b), std::max(a, b));
    };

    std::vector<CanonicalKey> knowledge;
    for (std::size_t i = 0; i < e.knowledge.size(); ++i) {
        const auto dk = canonicalize(e.knowledge[i].name, NodeKind::DK);
        mention(dk, e.knowledge[i].name, e.knowledge[i].usage);
        knowledge.push_back(dk);
        pair(scenario, dk);
        if (const auto& skill = e.skills[i]) {
            const auto ds = canonicalize(skill->name, NodeKind::DS);
            mention(ds, skill->name, skill->usage);
            pair(dk, ds);
        }
    }
    for (std::size_t i = 0; i < knowledge.size(); ++i) {
        for (std::size_t j = i + 1; j < knowledge.size(); ++j) pair(knowledge[i], knowledge[j]);
    }

    std::vector<CanonicalKey> coding;
    for (const auto& cs : e.coding_skills) {
        if (!cs) continue;
        const auto key = canonicalize(cs->name, NodeKind::CS);
        mention(key, cs->name, cs->usage);
        pair(scenario, key);
        coding.push_back(key);
    }
    for (std::size_t i = 0; i < coding.size(); ++i) {
        for (std::size_t j = i + 1; j < coding.size(); ++j) pair(coding[i], coding[j]);
    }

    documents_.insert(e.doc_id);
    for (const auto& [key, m] : mentions) {
        Node& n = touch(key, m.display, e.doc_id);
        n.usages.insert(m.usages.begin(), m.usages.end());
        ++n.doc_count;
    }
    for (const auto& [a, b] : pairs) bump(a, b, *relation_between(a.kind, b.kind), 1);
    return true;
}

void KnowledgeGraph::merge(const KnowledgeGraph& other) {
    for (const auto& d : other.documents_) {
        if (documents_.contains(d)) throw std::invalid_argument("merge: document " + d + " present in both graphs");
    }
    documents_.insert(other.documents_.begin(), other.documents_.end());
    for (const auto& [key, n] : other.nodes_) {
        auto [it, inserted] = nodes_.try_emplace(key, n);
        if (inserted) continue;
        Node& mine = it->second;
        if (n.display_doc < mine.display_doc) {
            mine.display_name = n.display_name;
            mine.display_doc = n.display_doc;
        }
        mine.usages.insert(n.usages.begin(), n.usages.end());
        mine.doc_count += n.doc_count;
    }
    for (const auto& [a, by_relation] : other.adjacency_) {
        for (const auto& [r, adj] : by_relation) {
            for (const auto& [b, f] : adj) adjacency_[a][r][b] += f;
        }
    }
}

void KnowledgeGraph::add_node(const CanonicalKey& key, const std::string& display_name, const std::string& usage) {
    Node& n = touch(key, display_name.empty() ? key.key : display_name, "");
    if (!usage.empty()) n.usages.insert(usage);
}

void KnowledgeGraph::add_edge(const CanonicalKey& a, const CanonicalKey& b, std::uint64_t frequency) {
    if (a == b) throw std::invalid_argument("self-loop on " + a.key);
    const auto r = relation_between(a.kind, b.kind);
    if (!r) {
        throw std::invalid_argument("no relation between " + std::string(to_string(a.kind)) + " and " +
                                    std::string(to_string(b.kind)));
    }
    if (frequency == 0) throw std::invalid_argument("edge frequency must be >= 1");
    if (!nodes_.contains(a)) add_node(a);
    if (!nodes_.contains(b)) add_node(b);
    bump(a, b, *r, frequency);
}

const Node* KnowledgeGraph::node(const CanonicalKey& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<CanonicalKey> KnowledgeGraph::nodes_of(NodeKind kind) const {
    std::vector<CanonicalKey> out;
    for (const auto& [key, n] : nodes_) {
        if (key.kind == kind) out.push_back(key);
    }
    return out;
}

const KnowledgeGraph::Adjacency& KnowledgeGraph::neighbors(const CanonicalKey& key, Relation relation) const {
    static const Adjacency kEmpty;
    auto it = adjacency_.find(key);
    if (it == adjacency_.end()) return kEmpty;
    auto rit = it->second.find(relation);
    return rit == it->second.end() ? kEmpty : rit->second;
}

std::uint64_t KnowledgeGraph::frequency(const CanonicalKey& a, const CanonicalKey& b) const {
    const auto r = relation_between(a.kind, b.kind);
    if (!r) return 0;
    const auto& adj = neighbors(a, *r);
    auto it = adj.find(b);
    return it == adj.end() ? 0 : it->second;
}

std::vector<Edge> KnowledgeGraph::edges() const {
    std::vector<Edge> out;
    for (const auto& [a, by_relation] : adjacency_) {
        for (const auto& [r, adj] : by_relation) {
            const auto [first_kind, second_kind] = endpoint_kinds(r);
            for (const auto& [b, f] : adj) {
                // Emit each undirected edge once, oriented by relation kinds.
                const bool oriented = first_kind == second_kind ? a < b : a.kind == first_kind;
                if (oriented) out.push_back({a, b, r, f});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Edge& x, const Edge& y) {
        return std::tie(x.relation, x.a, x.b) < std::tie(y.relation, y.a, y.b);
    });
    return out;
}

KnowledgeGraph build_graph(std::span<const ExtractedElements> elements) {
    std::vector<const ExtractedElements*> ordered;
    ordered.reserve(elements.size());
    for (const auto& e : elements) ordered.push_back(&e);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });
    KnowledgeGraph g;
    for (const auto* e : ordered) g.accumulate(*e);
    return g;
}

nlohmann::json graph_to_json(const KnowledgeGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [key, n] : g.nodes()) {
        nodes.push_back({{"kind", to_string(key.kind)},
                         {"key", key.key},
                         {"display_name", n.display_name},
                         {"display_doc", n.display_doc},
                         {"usages", n.usages},
                         {"doc_count", n.doc_count}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({{"a", e.a.key}, {"b", e.b.key}, {"relation", to_string(e.relation)}, {"frequency", e.frequency}});
    }
    return {{"version", kGraphFormatVersion},
            {"documents", g.documents()},
            {"source_digest", g.source_digest()},
            {"nodes", nodes},
            {"edges", edges}};
}

KnowledgeGraph graph_from_json(const nlohmann::json& j) {
    using Kind = GraphFileError::Kind;
    if (!j.is_object() || !j.contains("version")) throw GraphFileError(Kind::Corrupt, "graph file has no version");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kGraphFormatVersion) {
        throw GraphFileError(Kind::VersionMismatch, "unsupported graph format version " + j["version"].dump());
    }
    try {
        KnowledgeGraph g;
        for (const auto& jn : j.at("nodes")) {
            Node n;
            n.key = {node_kind_from_string(jn.at("kind").get<std::string>()), jn.at("key").get<std::string>()};
            n.display_name = jn.at("display_name").get<std::string>();
            n.display_doc = jn.value("display_doc", std::string());
            n.usages = jn.at("usages").get<std::set<std::string>>();
            n.doc_count = jn.value("doc_count", std::size_t{0});
            if (n.key.key.empty()) throw GraphFileError(Kind::Corrupt, "node with empty key");
            const auto key = n.key;
            if (!g.nodes_.emplace(key, std::move(n)).second) {
                throw GraphFileError(Kind::Corrupt, "duplicate node " + key.key);
            }
        }
        for (const auto& je : j.at("edges")) {
            const auto r = relation_from_string(je.at("relation").get<std::string>());
            const auto [ka, kb] = endpoint_kinds(r);
            const CanonicalKey a{ka, je.at("a").get<std::string>()};
            const CanonicalKey b{kb, je.at("b").get<std::string>()};
            if (!g.nodes_.contains(a) || !g.nodes_.contains(b)) {
                throw GraphFileError(Kind::Corrupt, "edge references unknown node");
            }
            if (a == b) throw GraphFileError(Kind::Corrupt, "self-loop on " + a.key);
            const auto f = je.at("frequency").get<std::uint64_t>();
            if (f < 1) throw GraphFileError(Kind::Corrupt, "edge frequency must be >= 1");
            if (g.frequency(a, b) != 0) throw GraphFileError(Kind::Corrupt, "duplicate edge " + a.key + " - " + b.key);
            g.bump(a, b, r, f);
        }
        g.documents_ = j.at("documents").get<std::set<std::string>>();
        g.source_digest_ = j.value("source_digest", std::string());
        return g;
    } catch (const GraphFileError&) {
        throw;
    } catch (const std::exception& e) {
        throw GraphFileError(Kind::Corrupt, std::string("corrupt graph file: ") + e.what());
    }
}

void save_graph(const KnowledgeGraph& g, const std::filesystem::path& path) {
    jsonl::write_text(path, jsonl::dump_pretty(graph_to_json(g)) + "\n");
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphFileError(GraphFileError::Kind::Corrupt, "cannot open graph file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw GraphFileError(GraphFileError::Kind::Corrupt, "corrupt graph file " + path.string() + ": " + e.what());
    }
    return graph_from_json(j);
}

GraphStats graph_stats(const KnowledgeGraph& g) {
    GraphStats s;
    for (auto k : {NodeKind::AS, NodeKind::DK, NodeKind::DS, NodeKind::CS}) s.nodes_per_kind[std::string(to_string(k))] = 0;
    for (auto r : kAllRelations) s.edges_per_relation[std::string(to_string(r))] = 0;
    for (const auto& [key, n] : g.nodes()) {
        ++s.nodes_per_kind[std::string(to_string(key.kind))];
        std::size_t degree = 0;
        for (auto r : kAllRelations) degree += g.neighbors(key, r).size();
        ++s.degree_histogram[degree];
        if (key.kind == NodeKind::AS && g.neighbors(key, Relation::AS_CS).empty()) {
            s.scenarios_without_cs.push_back(key.key);
        }
    }
    for (const auto& e : g.edges()) ++s.edges_per_relation[std::string(to_string(e.relation))];
    s.documents = g.document_count();
    return s;
}

void to_json(nlohmann::json& j, const GraphStats& s) {
    nlohmann::json degrees = nlohmann::json::object();
    for (const auto& [d, c] : s.degree_histogram) degrees[std::to_string(d)] = c;
    j = {{"nodes_per_kind", s.nodes_per_kind},
         {"edges_per_relation", s.edges_per_relation},
         {"degree_histogram", degrees},
         {"scenarios_without_cs", s.scenarios_without_cs},
         {"documents", s.documents}};
}

}  // namespace scogen
