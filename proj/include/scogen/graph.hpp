#pragma once

#include "scogen/extraction.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace scogen {

/// The five edge relations. Any other pair of node kinds has no edge.
enum class Relation { AS_DK, AS_CS, DK_DS, DK_DK, CS_CS };

inline constexpr Relation kAllRelations[] = {Relation::AS_DK, Relation::AS_CS, Relation::DK_DS, Relation::DK_DK,
                                             Relation::CS_CS};

std::string_view to_string(Relation r);
Relation relation_from_string(std::string_view s);
/// Order-insensitive; empty for kind pairs outside the five relations.
std::optional<Relation> relation_between(NodeKind a, NodeKind b);
std::pair<NodeKind, NodeKind> endpoint_kinds(Relation r);

struct Node {
    CanonicalKey key;
    std::string display_name;
    std::string display_doc;       // document the display name was taken from
    std::set<std::string> usages;  // usage pool
    std::size_t doc_count = 0;

    bool operator==(const Node&) const = default;
};

struct Edge {
    CanonicalKey a;
    CanonicalKey b;
    Relation relation;
    std::uint64_t frequency = 0;

    bool operator==(const Edge&) const = default;
};

class KnowledgeGraph;
/// Throws GraphFileError.
KnowledgeGraph graph_from_json(const nlohmann::json& j);

/// Scenario-centric co-occurrence graph. Edges are undirected and stored
/// symmetrically; frequency counts documents, not mentions.
class KnowledgeGraph {
public:
    using Adjacency = std::map<CanonicalKey, std::uint64_t>;

    /// Adds one document. Returns false (and changes nothing) when the
    /// doc_id was already accumulated. Throws std::invalid_argument for
    /// elements that fail validation.
    bool accumulate(const ExtractedElements& e);

    /// Commutative merge of a graph built from disjoint documents. Throws
    /// std::invalid_argument when the document sets overlap.
    void merge(const KnowledgeGraph& other);

    /// Adds `frequency` to the edge a-b, creating nodes as needed. Intended
    /// for synthetic graphs; throws for kind pairs outside the five relations
    /// and for self-loops.
    void add_edge(const CanonicalKey& a, const CanonicalKey& b, std::uint64_t frequency);
    /// Creates the node if missing and adds a usage (when non-empty).
    void add_node(const CanonicalKey& key, const std::string& display_name = {}, const std::string& usage = {});

    const Node* node(const CanonicalKey& key) const;
    const std::map<CanonicalKey, Node>& nodes() const { return nodes_; }
    std::vector<CanonicalKey> nodes_of(NodeKind kind) const;

    /// Neighbors of `key` through `relation`; empty when there are none.
    const Adjacency& neighbors(const CanonicalKey& key, Relation relation) const;
    std::uint64_t frequency(const CanonicalKey& a, const CanonicalKey& b) const;

    /// Every edge once, sorted by (relation, a, b).
    std::vector<Edge> edges() const;

    const std::set<std::string>& documents() const { return documents_; }
    std::size_t document_count() const { return documents_.size(); }

    /// Digest of the element stream the graph was built from (informational).
    const std::string& source_digest() const { return source_digest_; }
    void set_source_digest(std::string d) { source_digest_ = std::move(d); }

    bool operator==(const KnowledgeGraph&) const = default;

private:
    friend KnowledgeGraph graph_from_json(const nlohmann::json& j);

    Node& touch(const CanonicalKey& key, const std::string& display_name, const std::string& doc_id);
    void bump(const CanonicalKey& a, const CanonicalKey& b, Relation r, std::uint64_t by);

    std::map<CanonicalKey, Node> nodes_;
    std::map<CanonicalKey, std::map<Relation, Adjacency>> adjacency_;
    std::set<std::string> documents_;
    std::string source_digest_;
};

/// Order-independent: documents are accumulated in doc_id order.
KnowledgeGraph build_graph(std::span<const ExtractedElements> elements);

class GraphFileError : public std::runtime_error {
public:
    enum class Kind { VersionMismatch, Corrupt };
    GraphFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr int kGraphFormatVersion = 1;

nlohmann::json graph_to_json(const KnowledgeGraph& g);
void save_graph(const KnowledgeGraph& g, const std::filesystem::path& path);
KnowledgeGraph load_graph(const std::filesystem::path& path);

struct GraphStats {
    std::map<std::string, std::size_t> nodes_per_kind;
    std::map<std::string, std::size_t> edges_per_relation;
    std::map<std::size_t, std::size_t> degree_histogram;  // degree -> node count
    std::vector<std::string> scenarios_without_cs;
    std::size_t documents = 0;
};

GraphStats graph_stats(const KnowledgeGraph& g);
void to_json(nlohmann::json& j, const GraphStats& s);

}  // namespace scogen
