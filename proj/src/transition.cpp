#include "scogen/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scogen {

double TransitionDistribution::probability(const CanonicalKey& key) const {
    auto it = std::lower_bound(support.begin(), support.end(), key,
                               [](const auto& entry, const CanonicalKey& k) { return entry.first < k; });
    return it != support.end() && it->first == key ? it->second : 0.0;
}

std::vector<double> TransitionDistribution::masses() const {
    std::vector<double> out;
    out.reserve(support.size());
    for (const auto& [k, p] : support) out.push_back(p);
    return out;
}

namespace {

// Normalized transition from `from` over `relation`, skipping `excluded`.
std::map<CanonicalKey, double> step(const KnowledgeGraph& g, const CanonicalKey& from, Relation relation,
                                    const CanonicalKey* excluded) {
    std::map<CanonicalKey, double> out;
    double total = 0.0;
    for (const auto& [to, f] : g.neighbors(from, relation)) {
        if (excluded && to == *excluded) continue;
        total += static_cast<double>(f);
    }
    if (total <= 0.0) return out;
    for (const auto& [to, f] : g.neighbors(from, relation)) {
        if (excluded && to == *excluded) continue;
        out.emplace(to, static_cast<double>(f) / total);
    }
    return out;
}

}  // namespace

TransitionDistribution first_step_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                               Relation relation) {
    auto probs = step(g, origin, relation, nullptr);
    if (probs.empty()) {
        throw NoNeighbors("node '" + origin.key + "' has no " + std::string(to_string(relation)) + " neighbors");
    }
    TransitionDistribution d{origin, {probs.begin(), probs.end()}, std::nullopt};
    return d;
}

std::set<CanonicalKey> first_step_neighbors(const KnowledgeGraph& g, const CanonicalKey& origin,
                                            const RelationFilter& filter) {
    std::set<CanonicalKey> out;
    for (const auto& [to, f] : g.neighbors(origin, filter.first)) out.insert(to);
    return out;
}

std::set<CanonicalKey> second_step_neighbors(const KnowledgeGraph& g, const CanonicalKey& origin,
                                             const RelationFilter& filter) {
    std::set<CanonicalKey> out;
    if (!filter.second) return out;
    const auto first = first_step_neighbors(g, origin, filter);
    for (const auto& mid : first) {
        for (const auto& [to, f] : g.neighbors(mid, *filter.second)) {
            if (to != origin && !first.contains(to)) out.insert(to);
        }
    }
    return out;
}

std::map<CanonicalKey, double> second_step_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                                        const RelationFilter& filter) {
    std::map<CanonicalKey, double> out;
    if (!filter.second) return out;
    const auto first = step(g, origin, filter.first, nullptr);
    for (const auto& [mid, p_first] : first) {
        for (const auto& [to, p_second] : step(g, mid, *filter.second, &origin)) {
            if (to == origin || first.contains(to)) continue;
            out[to] += p_first * p_second;
        }
    }
    return out;
}

TransitionDistribution combined_distribution(const KnowledgeGraph& g, const CanonicalKey& origin,
                                             const RelationFilter& filter) {
    auto first = step(g, origin, filter.first, nullptr);
    if (first.empty()) {
        throw NoNeighbors("node '" + origin.key + "' has no " + std::string(to_string(filter.first)) + " neighbors");
    }
    auto second = second_step_distribution(g, origin, filter);
    std::map<CanonicalKey, double> merged = std::move(first);
    double total = 0.0;
    for (const auto& [k, p] : merged) total += p;
    for (const auto& [k, p] : second) {
        merged.emplace(k, p);
        total += p;
    }
    TransitionDistribution d{origin, {}, std::nullopt};
    d.support.reserve(merged.size());
    for (const auto& [k, p] : merged) d.support.emplace_back(k, p / total);
    return d;
}

TransitionDistribution apply_temperature(const TransitionDistribution& d, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("temperature must be a positive finite number");
    }
    std::vector<double> logits;
    logits.reserve(d.support.size());
    for (const auto& [k, p] : d.support) {
        if (!(p > 0.0)) throw ZeroProbability("cannot take the log of zero probability for '" + k.key + "'");
        logits.push_back(std::log(p) / temperature);
    }
    TransitionDistribution out{d.origin, {}, temperature};
    if (logits.empty()) return out;
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - max_logit);
        total += l;
    }
    out.support.reserve(d.support.size());
    for (std::size_t i = 0; i < d.support.size(); ++i) out.support.emplace_back(d.support[i].first, logits[i] / total);
    return out;
}

double entropy(const TransitionDistribution& d) {
    double h = 0.0;
    for (const auto& [k, p] : d.support) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

std::size_t draw_index(const TransitionDistribution& d, Rng& rng) {
    if (d.support.empty()) throw std::invalid_argument("cannot draw from an empty distribution");
    double total = 0.0;
    for (const auto& [k, p] : d.support) total += p;
    const double u = rng.uniform01() * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < d.support.size(); ++i) {
        cumulative += d.support[i].second;
        if (u < cumulative) return i;
    }
    return d.support.size() - 1;
}

}  // namespace scogen
