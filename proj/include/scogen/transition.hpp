#pragma once

#include "scogen/graph.hpp"
#include "scogen/hashing.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace scogen {

/// Relation used for the first hop from the origin and, optionally, for the
/// second hop inside the layer reached by the first.
struct RelationFilter {
    Relation first;
    std::optional<Relation> second;
};

inline constexpr RelationFilter kKnowledgeWalk{Relation::AS_DK, Relation::DK_DK};
inline constexpr RelationFilter kCodingWalk{Relation::AS_CS, Relation::CS_CS};

struct TransitionDistribution {
    CanonicalKey origin;
    std::vector<std::pair<CanonicalKey, double>> support;  // sorted by key, distinct, positive
    std::optional<double> temperature;

    /// 0 for keys outside the support.
    double probability(const CanonicalKey& key) const;
    std::vector<double> masses() const;
};

class NoNeighbors : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZeroProbability : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// f(A,B) / sum f(A,B') over the first-hop relation. Throws NoNeighbors.
TransitionDistribution first_step_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                               Relation relation);

std::set<CanonicalKey> first_step_neighbors(const KnowledgeGraph& g, const CanonicalKey& origin,
                                            const RelationFilter& filter);

/// Nodes reachable origin -> B' -> C with C outside the first-hop set and
/// C != origin. Empty without a second-hop relation.
std::set<CanonicalKey> second_step_neighbors(const KnowledgeGraph& g, const CanonicalKey& origin,
                                             const RelationFilter& filter);

/// Unnormalized mass over the second-step set: sum over B' of
/// P1(origin -> B') * P1(B' -> C), where the intermediate hop is normalized
/// over B's second-hop neighbors excluding the origin.
std::map<CanonicalKey, double> second_step_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                                        const RelationFilter& filter);

/// First- and second-step masses renormalized jointly. Throws NoNeighbors.
TransitionDistribution combined_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                             const RelationFilter& filter);

/// p_i^(1/T) / sum_j p_j^(1/T), evaluated in log space with max subtraction.
/// Throws std::invalid_argument for T <= 0 and ZeroProbability for p_i <= 0.
TransitionDistribution apply_temperature(const TransitionDistribution& d, double temperature);

/// Shannon entropy in nats.
double entropy(const TransitionDistribution& d);

/// Index into d.support drawn by inverse CDF.
std::size_t draw_index(const TransitionDistribution& d, Rng& rng);

}  // namespace scogen
