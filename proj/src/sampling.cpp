#include "scogen/sampling.hpp"

#include "scogen/log.hpp"
#include "scogen/parallel.hpp"
#include "scogen/prompt_template.hpp"
#include "scogen/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

namespace scogen {

std::string_view to_string(Strategy s) { return s == Strategy::Random ? "random" : "llm"; }

Strategy strategy_from_string(std::string_view s) {
    if (s == "random") return Strategy::Random;
    if (s == "llm") return Strategy::Llm;
    throw std::invalid_argument("unknown sampling strategy '" + std::string(s) + "' (expected random or llm)");
}

std::vector<std::string> SamplerConfig::validate() const {
    std::vector<std::string> errors;
    if (!(temperature > 0.0) || !std::isfinite(temperature)) errors.push_back("sampling.temperature must be > 0");
    if (complexity < 1) errors.push_back("sampling.complexity must be >= 1");
    if (candidate_count < 1) errors.push_back("sampling.candidate_count must be >= 1");
    if (candidate_count < complexity) errors.push_back("sampling.candidate_count must be >= sampling.complexity");
    if (selection_attempts < 1) errors.push_back("sampling.selection_attempts must be >= 1");
    return errors;
}

void to_json(nlohmann::json& j, const SamplerConfig& c) {
    j = {{"temperature", c.temperature},
         {"complexity", c.complexity},
         {"max_resample_attempts", c.max_resample_attempts},
         {"rng_seed", c.rng_seed},
         {"candidate_count", c.candidate_count},
         {"selection_attempts", c.selection_attempts}};
}

void from_json(const nlohmann::json& j, SamplerConfig& c) {
    SamplerConfig d;
    c.temperature = j.value("temperature", d.temperature);
    c.complexity = j.value("complexity", d.complexity);
    c.max_resample_attempts = j.value("max_resample_attempts", d.max_resample_attempts);
    c.rng_seed = j.value("rng_seed", d.rng_seed);
    c.candidate_count = j.value("candidate_count", d.candidate_count);
    c.selection_attempts = j.value("selection_attempts", d.selection_attempts);
}

std::tuple<std::string, std::string, std::string> Feature::triple() const {
    return {knowledge.key.key, skill ? skill->key.key : std::string(), coding_skill.key.key};
}

bool is_eligible(const KnowledgeGraph& g, const CanonicalKey& scenario) {
    if (scenario.kind != NodeKind::AS || !g.node(scenario)) return false;
    return !g.neighbors(scenario, Relation::AS_DK).empty() && !g.neighbors(scenario, Relation::AS_CS).empty();
}

std::vector<CanonicalKey> eligible_scenarios(const KnowledgeGraph& g) {
    std::vector<CanonicalKey> out;
    for (const auto& key : g.nodes_of(NodeKind::AS)) {
        if (is_eligible(g, key)) out.push_back(key);
    }
    return out;
}

namespace {

std::string relation_path(const RelationFilter& filter, int hop) {
    std::string path(to_string(filter.first));
    if (hop == 2 && filter.second) path += ">" + std::string(to_string(*filter.second));
    return path;
}

std::string draw_usage(const Node& node, Rng& rng) {
    if (node.usages.empty()) return {};
    auto it = node.usages.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(node.usages.size())));
    return *it;
}

TransitionDistribution reshaped(const KnowledgeGraph& g, const CanonicalKey& scenario, const RelationFilter& filter,
                                double temperature) {
    return apply_temperature(combined_distribution(g, scenario, filter), temperature);
}

TransitionDistribution checked_distribution(const KnowledgeGraph& g, const CanonicalKey& scenario,
                                            const RelationFilter& filter, double temperature) {
    if (!is_eligible(g, scenario)) {
        throw IneligibleScenario("scenario '" + scenario.key + "' needs at least one AS-DK and one AS-CS edge");
    }
    return reshaped(g, scenario, filter, temperature);
}

}  // namespace

FeatureSampler::FeatureSampler(const KnowledgeGraph& g, const CanonicalKey& scenario, double temperature)
    : graph_(g),
      scenario_(scenario),
      knowledge_(checked_distribution(g, scenario, kKnowledgeWalk, temperature)),
      coding_(reshaped(g, scenario, kCodingWalk, temperature)) {}

Choice FeatureSampler::pick(const TransitionDistribution& d, const RelationFilter& filter, Rng& rng) const {
    const CanonicalKey& key = d.support[draw_index(d, rng)].first;
    const Node* node = graph_.node(key);
    Choice c;
    c.key = key;
    c.name = node->display_name;
    const auto& first = graph_.neighbors(scenario_, filter.first);
    c.hop = first.contains(key) ? 1 : 2;
    if (c.hop == 2) {
        for (const auto& [mid, f] : first) {
            if (graph_.neighbors(mid, *filter.second).contains(key)) c.via.push_back(mid.key);
        }
    }
    c.path = relation_path(filter, c.hop);
    c.usage = draw_usage(*node, rng);
    return c;
}

Feature FeatureSampler::sample(Rng& rng) const {
    Feature f;
    f.knowledge = pick(knowledge_, kKnowledgeWalk, rng);
    if (!graph_.neighbors(f.knowledge.key, Relation::DK_DS).empty()) {
        const auto ds = first_step_distribution(graph_, f.knowledge.key, Relation::DK_DS);
        const CanonicalKey& key = ds.support[draw_index(ds, rng)].first;
        const Node* node = graph_.node(key);
        Choice c;
        c.key = key;
        c.name = node->display_name;
        c.hop = 1;
        c.via = {f.knowledge.key.key};
        c.path = std::string(to_string(Relation::DK_DS));
        c.usage = draw_usage(*node, rng);
        f.skill = std::move(c);
    }
    f.coding_skill = pick(coding_, kCodingWalk, rng);
    return f;
}

Feature sample_feature(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg, Rng& rng) {
    return FeatureSampler(g, scenario, cfg.temperature).sample(rng);
}

namespace {

FeatureSet empty_set(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg,
                     std::string strategy) {
    FeatureSet fs;
    fs.scenario = scenario;
    if (const Node* n = g.node(scenario)) fs.scenario_name = n->display_name;
    fs.config = cfg;
    fs.strategy = std::move(strategy);
    return fs;
}

}  // namespace

FeatureSet sample_feature_set_random(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg,
                                     Rng& rng) {
    if (cfg.complexity < 1) throw std::invalid_argument("complexity must be >= 1");
    const FeatureSampler sampler(g, scenario, cfg.temperature);
    FeatureSet fs = empty_set(g, scenario, cfg, "random");
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::size_t duplicates = 0;
    while (fs.features.size() < cfg.complexity) {
        Feature f = sampler.sample(rng);
        if (seen.insert(f.triple()).second) {
            fs.features.push_back(std::move(f));
        } else if (++duplicates > cfg.max_resample_attempts) {
            throw InsufficientDiversity("scenario '" + scenario.key + "' yielded only " +
                                        std::to_string(fs.features.size()) + " distinct features after " +
                                        std::to_string(duplicates) + " duplicate draws (wanted " +
                                        std::to_string(cfg.complexity) + ")");
        }
    }
    return fs;
}

std::vector<Feature> sample_candidates(const KnowledgeGraph& g, const CanonicalKey& scenario,
                                       const SamplerConfig& cfg, std::size_t count, Rng& rng) {
    const FeatureSampler sampler(g, scenario, cfg.temperature);
    std::vector<Feature> out;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    const std::size_t cap = cfg.max_resample_attempts * count;
    std::size_t duplicates = 0;
    while (out.size() < count && duplicates <= cap) {
        Feature f = sampler.sample(rng);
        if (seen.insert(f.triple()).second) {
            out.push_back(std::move(f));
        } else {
            ++duplicates;
        }
    }
    while (out.size() < count) out.push_back(sampler.sample(rng));
    return out;
}

namespace {

constexpr std::string_view kSelectionTemplate =
    R"(You will be provided with three groups of feature descriptions, with {item_count} items in each group. These features are essential elements for constructing a complex coding problem in a real-world scenario. Your task is to deeply understand the meaning of these features and their usage strategies in real coding scenarios, and then select {number} most appropriate elements, {number} from each group, such that the selected elements can generate a single, natural and realistic coding problem.

Feature descriptions include the following:
- Domain Knowledge: A specific piece of knowledge or understanding relevant to the field.
- Domain Skill: A specific skill or method used in the domain, along with its detailed usage.
- Coding Skill: A specific programming-related skill or technique, along with its detailed usage.

Guidelines:
- The domain knowledge and domain skill have already been paired; please do not separate them.
- The selected elements need to play distinct roles, thereby naturally leading to a complex question with a unified problem context.
- The selected elements should balance relevance and diversity.

Feature Descriptions:
{DK_DS_features}

{CS_features}

First provide a concise step-by-step thought process, then give the selected elements (only the label is needed) as the following format:

Step-by-Step Thought Process

Selected Elements:

{output_format}
)";

constexpr std::string_view kSelectionOutputFormat =
    "Domain Knowledge: <labels, e.g. K1, K4>\n"
    "Domain Skill: <labels paired with the chosen knowledge, e.g. S1, S4>\n"
    "Coding Skill: <labels, e.g. C2, C7>";

std::string describe(const Choice& c) {
    return c.usage.empty() ? c.name : c.name + ": " + c.usage;
}

}  // namespace

std::string render_selection_prompt(std::span<const Feature> candidates, std::size_t number) {
    std::string dk = "Domain Knowledge:\n";
    std::string ds = "Domain Skill:\n";
    std::string cs = "Coding Skill:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string label = std::to_string(i + 1);
        const Feature& f = candidates[i];
        dk += "K" + label + ". " + describe(f.knowledge) + "\n";
        ds += "S" + label + ". " + (f.skill ? describe(*f.skill) : std::string("NA")) + "\n";
        cs += "C" + label + ". " + describe(f.coding_skill) + "\n";
    }
    cs.pop_back();
    return render_template(kSelectionTemplate, {{"item_count", std::to_string(candidates.size())},
                                                {"number", std::to_string(number)},
                                                {"DK_DS_features", dk + "\n" + ds.substr(0, ds.size() - 1)},
                                                {"CS_features", cs},
                                                {"output_format", std::string(kSelectionOutputFormat)}});
}

namespace {

std::string_view strip_markup(std::string_view line) {
    line = text::trim(line);
    while (!line.empty() && (line.front() == '*' || line.front() == '-' || line.front() == '#' ||
                             line.front() == '_' || line.front() == ' ' || line.front() == '\t')) {
        line.remove_prefix(1);
    }
    return line;
}

std::vector<long long> integers(std::string_view s) {
    std::vector<long long> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            long long v = 0;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                v = std::min<long long>(v * 10 + (s[i] - '0'), 1'000'000'000);
                ++i;
            }
            out.push_back(v);
        } else {
            ++i;
        }
    }
    return out;
}

std::string_view after_marker(std::string_view reply) {
    const std::string lower = text::to_lower(reply);
    const std::size_t pos = lower.rfind("selected elements");
    return pos == std::string::npos ? reply : reply.substr(pos + std::string_view("selected elements").size());
}

std::variant<std::vector<std::size_t>, std::string> check_labels(const std::vector<long long>& labels,
                                                                 std::size_t n, std::size_t number,
                                                                 std::string_view group) {
    if (labels.size() != number) {
        return std::string(group) + ": expected " + std::to_string(number) + " labels, got " +
               std::to_string(labels.size());
    }
    std::vector<std::size_t> out;
    std::set<long long> seen;
    for (long long l : labels) {
        if (l < 1 || static_cast<std::size_t>(l) > n) {
            return std::string(group) + ": label " + std::to_string(l) + " is out of range 1.." + std::to_string(n);
        }
        if (!seen.insert(l).second) return std::string(group) + ": label " + std::to_string(l) + " repeated";
        out.push_back(static_cast<std::size_t>(l - 1));
    }
    return out;
}

}  // namespace

SelectionOutcome parse_selection(std::string_view reply, std::span<const Feature> candidates, std::size_t number) {
    std::optional<std::vector<long long>> knowledge, skill, coding;
    for (std::string_view raw : text::split_lines(after_marker(reply))) {
        std::string_view line = strip_markup(raw);
        std::optional<std::vector<long long>>* slot = nullptr;
        if (text::istarts_with(line, "domain knowledge")) {
            slot = &knowledge;
        } else if (text::istarts_with(line, "domain skill")) {
            slot = &skill;
        } else if (text::istarts_with(line, "coding skill")) {
            slot = &coding;
        }
        if (!slot || slot->has_value()) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        *slot = integers(line.substr(colon + 1));
    }
    if (!knowledge) return std::string("no Domain Knowledge selection line");
    if (!coding) return std::string("no Coding Skill selection line");

    auto k = check_labels(*knowledge, candidates.size(), number, "Domain Knowledge");
    if (auto* err = std::get_if<std::string>(&k)) return *err;
    auto c = check_labels(*coding, candidates.size(), number, "Coding Skill");
    if (auto* err = std::get_if<std::string>(&c)) return *err;
    if (skill) {
        std::multiset<long long> a(knowledge->begin(), knowledge->end());
        std::multiset<long long> b(skill->begin(), skill->end());
        if (a != b) return std::string("Domain Skill labels do not match the Domain Knowledge labels");
    }

    Selection sel{std::get<std::vector<std::size_t>>(k), std::get<std::vector<std::size_t>>(c)};
    std::set<std::tuple<std::string, std::string, std::string>> triples;
    for (std::size_t i = 0; i < number; ++i) {
        const Feature& kf = candidates[sel.knowledge[i]];
        const Feature& cf = candidates[sel.coding[i]];
        if (!triples.emplace(kf.knowledge.key.key, kf.skill ? kf.skill->key.key : std::string(),
                             cf.coding_skill.key.key)
                 .second) {
            return std::string("selection repeats a feature");
        }
    }
    return sel;
}

FeatureSet sample_feature_set_llm(const KnowledgeGraph& g, const CanonicalKey& scenario, const SamplerConfig& cfg,
                                  Backend& backend, const BackendConfig& backend_cfg, Rng& rng) {
    if (!is_eligible(g, scenario)) {
        throw IneligibleScenario("scenario '" + scenario.key + "' needs at least one AS-DK and one AS-CS edge");
    }
    const auto candidates = sample_candidates(g, scenario, cfg, cfg.candidate_count, rng);
    const std::string prompt = render_selection_prompt(candidates, cfg.complexity);
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= cfg.selection_attempts; ++attempt) {
        std::string reply;
        try {
            auto result = backend.complete(backend_cfg.request(prompt));
            reply = std::move(result.text);
        } catch (const BackendError& e) {
            last_error = e.what();
            continue;
        }
        auto outcome = parse_selection(reply, candidates, cfg.complexity);
        if (auto* sel = std::get_if<Selection>(&outcome)) {
            FeatureSet fs = empty_set(g, scenario, cfg, "llm");
            for (std::size_t i = 0; i < cfg.complexity; ++i) {
                Feature f = candidates[sel->knowledge[i]];
                f.coding_skill = candidates[sel->coding[i]].coding_skill;
                fs.features.push_back(std::move(f));
            }
            return fs;
        }
        last_error = std::get<std::string>(outcome);
    }
    log::warn("selection for scenario '", scenario.key, "' failed after ", cfg.selection_attempts,
              " attempts (", last_error, "); using random sampling");
    FeatureSet fs = sample_feature_set_random(g, scenario, cfg, rng);
    fs.strategy = "llm-fallback-random";
    return fs;
}

std::vector<FeatureSet> sample_feature_sets(const KnowledgeGraph& g, const SamplerConfig& cfg, Strategy strategy,
                                            std::size_t count, Backend* backend, const BackendConfig* backend_cfg) {
    if (strategy == Strategy::Llm && (!backend || !backend_cfg)) {
        throw std::invalid_argument("the llm strategy needs a backend");
    }
    const auto eligible = eligible_scenarios(g);
    if (eligible.empty()) throw IneligibleScenario("graph has no scenario with both AS-DK and AS-CS edges");
    for (const auto& key : g.nodes_of(NodeKind::AS)) {
        if (!is_eligible(g, key)) log::info("skipping ineligible scenario '", key.key, "'");
    }

    constexpr std::size_t kScenarioAttempts = 8;
    std::vector<std::optional<FeatureSet>> slots(count);
    const std::size_t workers = strategy == Strategy::Llm
                                    ? backend_cfg->parallelism
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    parallel_for(count, workers, [&](std::size_t i) {
        Rng pick(derive_seed(cfg.rng_seed, "scenario-pick", i));
        std::vector<CanonicalKey> pool = eligible;
        for (std::size_t attempt = 0; attempt < kScenarioAttempts && !pool.empty(); ++attempt) {
            const std::size_t idx = pick.below(pool.size());
            const CanonicalKey scenario = pool[idx];
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
            Rng rng(derive_seed(cfg.rng_seed, scenario.key, i));
            try {
                FeatureSet fs = strategy == Strategy::Llm
                                    ? sample_feature_set_llm(g, scenario, cfg, *backend, *backend_cfg, rng)
                                    : sample_feature_set_random(g, scenario, cfg, rng);
                char id[32];
                std::snprintf(id, sizeof id, "fs-%06zu", i);
                fs.id = id;
                slots[i] = std::move(fs);
                return;
            } catch (const InsufficientDiversity& e) {
                log::info("task ", i, ": ", e.what());
            }
        }
        log::warn("task ", i, ": no scenario reached complexity ", cfg.complexity, "; dropped");
    });

    std::vector<FeatureSet> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

void to_json(nlohmann::json& j, const Choice& c) {
    j = {{"kind", std::string(to_string(c.key.kind))},
         {"key", c.key.key},
         {"name", c.name},
         {"usage", c.usage},
         {"hop", c.hop},
         {"via", c.via},
         {"path", c.path}};
}

void from_json(const nlohmann::json& j, Choice& c) {
    c.key = {node_kind_from_string(j.at("kind").get<std::string>()), j.at("key").get<std::string>()};
    c.name = j.at("name").get<std::string>();
    c.usage = j.value("usage", std::string());
    c.hop = j.value("hop", 1);
    c.via = j.value("via", std::vector<std::string>{});
    c.path = j.value("path", std::string());
}

void to_json(nlohmann::json& j, const Feature& f) {
    j = {{"knowledge", f.knowledge},
         {"skill", f.skill ? nlohmann::json(*f.skill) : nlohmann::json(nullptr)},
         {"coding_skill", f.coding_skill}};
}

void from_json(const nlohmann::json& j, Feature& f) {
    f.knowledge = j.at("knowledge").get<Choice>();
    if (const auto& s = j.at("skill"); s.is_null()) {
        f.skill.reset();
    } else {
        f.skill = s.get<Choice>();
    }
    f.coding_skill = j.at("coding_skill").get<Choice>();
}

void to_json(nlohmann::json& j, const FeatureSet& fs) {
    j = {{"id", fs.id},
         {"scenario", {{"key", fs.scenario.key}, {"name", fs.scenario_name}}},
         {"strategy", fs.strategy},
         {"config", fs.config},
         {"features", fs.features}};
}

void from_json(const nlohmann::json& j, FeatureSet& fs) {
    fs.id = j.at("id").get<std::string>();
    fs.scenario = {NodeKind::AS, j.at("scenario").at("key").get<std::string>()};
    fs.scenario_name = j.at("scenario").value("name", std::string());
    fs.strategy = j.value("strategy", std::string("random"));
    fs.config = j.value("config", SamplerConfig{});
    fs.features = j.at("features").get<std::vector<Feature>>();
}

}  // namespace scogen
