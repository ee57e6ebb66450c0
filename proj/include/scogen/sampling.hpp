#pragma once

#include "scogen/backend.hpp"
#include "scogen/transition.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

namespace scogen {

enum class Strategy { Random, Llm };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct SamplerConfig {
    double temperature = 1.0;  // T > 0
    std::size_t complexity = 1;  // features per set, C >= 1
    std::size_t max_resample_attempts = 20;
    std::uint64_t rng_seed = 0;
    std::size_t candidate_count = 10;    // LLM strategy pool size
    std::size_t selection_attempts = 3;  // LLM strategy parse retries

    std::vector<std::string> validate() const;
    bool operator==(const SamplerConfig&) const = default;
};

void to_json(nlohmann::json& j, const SamplerConfig& c);
void from_json(const nlohmann::json& j, SamplerConfig& c);

/// One sampled element with the usage attached to it and how it was reached.
struct Choice {
    CanonicalKey key;
    std::string name;   // display name
    std::string usage;
    int hop = 1;        // 1 or 2 steps from the origin
    std::vector<std::string> via;  // intermediate keys for second-step picks
    std::string path;   // relations walked, e.g. "AS-DK>DK-DK"

    bool operator==(const Choice&) const = default;
};

struct Feature {
    Choice knowledge;
    std::optional<Choice> skill;  // empty means NA
    Choice coding_skill;

    /// Identity used for the distinct-feature rule.
    std::tuple<std::string, std::string, std::string> triple() const;
    bool operator==(const Feature&) const = default;
};

struct FeatureSet {
    std::string id;
    CanonicalKey scenario;
    std::string scenario_name;
    std::vector<Feature> features;
    SamplerConfig config;
    std::string strategy;  // "random", "llm", or "llm-fallback-random"

    bool operator==(const FeatureSet&) const = default;
};

class IneligibleScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDiversity : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scenario can be sampled when it has at least one AS-DK and one AS-CS edge.
bool is_eligible(const KnowledgeGraph& g, const CanonicalKey& scenario);
std::vector<CanonicalKey> eligible_scenarios(const KnowledgeGraph& g);

/// Precomputed per-scenario distributions; sample() draws one feature.
class FeatureSampler {
public:
    /// Throws IneligibleScenario.
    FeatureSampler(const KnowledgeGraph& g, const CanonicalKey& scenario, double temperature);

    Feature sample(Rng& rng) const;

    const TransitionDistribution& knowledge_distribution() const { return knowledge_; }
    const TransitionDistribution& coding_distribution() const { return coding_; }

private:
    Choice pick(const TransitionDistribution& d, const RelationFilter& filter, Rng& rng) const;

    const KnowledgeGraph& graph_;
    CanonicalKey scenario_;
    TransitionDistribution knowledge_;
    TransitionDistribution coding_;
};

Feature sample_feature(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg, Rng& rng);

/// Draws features until cfg.complexity distinct triples are collected.
/// Throws IneligibleScenario, or InsufficientDiversity after more than
/// cfg.max_resample_attempts duplicate draws.
FeatureSet sample_feature_set_random(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg,
                                     Rng& rng);

/// Candidate pool for the LLM strategy: distinct features first, topped up
/// with repeats when the scenario cannot supply `count` distinct ones.
std::vector<Feature> sample_candidates(const KnowledgeGraph& g, const CanonicalKey& scenario,
                                       const SamplerConfig& cfg, std::size_t count, Rng& rng);

std::string render_selection_prompt(std::span<const Feature> candidates, std::size_t number);

/// Chosen 0-based candidate indices: feature i = (knowledge[i] with its
/// paired skill, coding[i]).
struct Selection {
    std::vector<std::size_t> knowledge;
    std::vector<std::size_t> coding;
};

using SelectionOutcome = std::variant<Selection, std::string>;  // selection or error

/// Reads the labels after "Selected Elements". Rejects wrong counts,
/// out-of-range or repeated labels, skill labels that split a pairing, and
/// selections that would repeat a feature triple.
SelectionOutcome parse_selection(std::string_view reply, std::span<const Feature> candidates, std::size_t number);

/// Random candidates, then a model picks `complexity` of them. Falls back
/// to the random strategy when no valid selection arrives within
/// cfg.selection_attempts replies.
FeatureSet sample_feature_set_llm(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg,
                                  Backend& backend, const BackendConfig& backend_cfg, Rng& rng);

/// `count` feature sets. Task i picks a scenario and samples from its own
/// RNG stream derived from (cfg.rng_seed, scenario, i), so the result does
/// not depend on `parallelism`. Tasks whose scenarios cannot reach the
/// requested complexity are retried on other scenarios, then dropped.
std::vector<FeatureSet> sample_feature_sets(const KnowledgeGraph& g, const SamplerConfig& cfg, Strategy strategy,
                                            std::size_t count, Backend* backend = nullptr,
                                            const BackendConfig* backend_cfg = nullptr);

void to_json(nlohmann::json& j, const Choice& c);
void from_json(const nlohmann::json& j, Choice& c);
void to_json(nlohmann::json& j, const Feature& f);
void from_json(const nlohmann::json& j, Feature& f);
void to_json(nlohmann::json& j, const FeatureSet& fs);
void from_json(const nlohmann::json& j, FeatureSet& fs);

}  // namespace scogen
