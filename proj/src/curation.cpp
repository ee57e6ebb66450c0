#include "scogen/curation.hpp"

#include "scogen/hashing.hpp"
#include "scogen/jsonl.hpp"
#include "scogen/parallel.hpp"
#include "scogen/text.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace scogen {

std::string_view to_string(Source s) {
    switch (s) {
        case Source::ForumDump: return "forum-dump";
        case Source::Notebook: return "notebook";
        case Source::Other: return "other";
    }
    return "other";
}

Source source_from_string(std::string_view s) {
    if (s == "forum-dump") return Source::ForumDump;
    if (s == "notebook") return Source::Notebook;
    if (s == "other") return Source::Other;
    throw std::invalid_argument("unknown source: " + std::string(s));
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::TooShort: return "too-short";
        case RejectReason::TooLong: return "too-long";
        case RejectReason::Garbled: return "garbled";
        case RejectReason::Language: return "language";
        case RejectReason::ExactDup: return "exact-dup";
        case RejectReason::NearDup: return "near-dup";
        case RejectReason::UnknownStratum: return "unknown-stratum";
        case RejectReason::OverQuota: return "over-quota";
    }
    return "unknown";
}

SeedDocument SeedDocument::make(std::string id, Source source, std::string stratum, std::string text) {
    SeedDocument d{std::move(id), source, std::move(stratum), std::move(text), 0};
    d.char_count = text::code_point_count(d.text);
    return d;
}

namespace {

constexpr RejectReason kAllReasons[] = {
    RejectReason::TooShort, RejectReason::TooLong, RejectReason::Garbled,        RejectReason::Language,
    RejectReason::ExactDup, RejectReason::NearDup, RejectReason::UnknownStratum, RejectReason::OverQuota,
};

bool is_garbled(char32_t cp) {
    if (cp == text::kReplacementChar) return true;
    if (cp == U'\n' || cp == U'\t' || cp == U'\r') return false;
    return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_basic_latin_letter(char32_t cp) { return in(cp, U'A', U'Z') || in(cp, U'a', U'z'); }

bool is_cjk_ideograph(char32_t cp) {
    return in(cp, 0x3400, 0x4DBF) || in(cp, 0x4E00, 0x9FFF) || in(cp, 0xF900, 0xFAFF) || in(cp, 0x20000, 0x2FA1F);
}

// Letters of other scripts, by block. Approximate on purpose: the rule only
// needs to tell "mostly Latin/CJK" apart from "mostly something else".
bool is_other_letter(char32_t cp) {
    if (cp == 0xD7 || cp == 0xF7) return false;
    return in(cp, 0xC0, 0x2AF) ||      // Latin-1 letters, Latin Extended, IPA
           in(cp, 0x370, 0x3FF) ||     // Greek
           in(cp, 0x400, 0x52F) ||     // Cyrillic
           in(cp, 0x531, 0x587) ||     // Armenian
           in(cp, 0x5D0, 0x5EA) ||     // Hebrew
           in(cp, 0x620, 0x64A) || in(cp, 0x66E, 0x6D3) || in(cp, 0x750, 0x77F) ||  // Arabic
           in(cp, 0x900, 0xDFF) ||     // Indic scripts
           in(cp, 0xE00, 0xEFF) ||     // Thai, Lao
           in(cp, 0xF00, 0x10FF) ||    // Tibetan, Myanmar, Georgian
           in(cp, 0x1100, 0x11FF) ||   // Hangul Jamo
           in(cp, 0x1200, 0x137F) ||   // Ethiopic
           in(cp, 0x1E00, 0x1FFF) ||   // Latin Extended Additional, Greek Extended
           in(cp, 0x3040, 0x312F) ||   // Kana, Bopomofo
           in(cp, 0xAC00, 0xD7AF);     // Hangul syllables
}

}  // namespace

double garbled_ratio(std::string_view text) {
    const auto cps = text::decode_utf8(text);
    if (cps.empty()) return 0.0;
    const auto bad = std::count_if(cps.begin(), cps.end(), is_garbled);
    return static_cast<double>(bad) / static_cast<double>(cps.size());
}

std::optional<double> latin_cjk_letter_ratio(std::string_view text) {
    std::size_t wanted = 0;
    std::size_t letters = 0;
    for (char32_t cp : text::decode_utf8(text)) {
        if (is_basic_latin_letter(cp) || is_cjk_ideograph(cp)) {
            ++wanted;
            ++letters;
        } else if (is_other_letter(cp)) {
            ++letters;
        }
    }
    if (letters == 0) return std::nullopt;
    return static_cast<double>(wanted) / static_cast<double>(letters);
}

Decision filter_document(const SeedDocument& doc, const CurationConfig& cfg) {
    if (doc.char_count < cfg.min_chars) return Decision::Reject(RejectReason::TooShort);
    if (doc.char_count > cfg.max_chars) return Decision::Reject(RejectReason::TooLong);
    if (garbled_ratio(doc.text) > cfg.garbled_max) return Decision::Reject(RejectReason::Garbled);
    if (auto r = latin_cjk_letter_ratio(doc.text); r && *r < cfg.script_min) {
        return Decision::Reject(RejectReason::Language);
    }
    return Decision::Keep();
}

std::string normalize_for_exact_dedup(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    const auto lines = text::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r' ||
                                 line.back() == '\v' || line.back() == '\f')) {
            line.remove_suffix(1);
        }
        if (i > 0) out.push_back('\n');
        out.append(line);
    }
    return out;
}

std::vector<SeedDocument> exact_dedup(std::span<const SeedDocument> docs) {
    std::unordered_set<std::string> seen;
    std::vector<SeedDocument> out;
    for (const auto& d : docs) {
        if (seen.insert(sha256_hex(normalize_for_exact_dedup(d.text))).second) out.push_back(d);
    }
    return out;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

NearDedupResult near_dedup(std::span<const SeedDocument> docs, const MinHashConfig& cfg, std::size_t workers) {
    const std::size_t n = docs.size();
    std::vector<MinHashSignature> sigs(n);
    std::vector<std::vector<std::uint64_t>> keys(n);
    parallel_for(n, workers, [&](std::size_t i) {
        sigs[i] = minhash_signature(docs[i].text, cfg);
        keys[i] = lsh_band_keys(sigs[i], cfg.bands, cfg.rows);
    });

    // Candidate pairs from shared buckets, collected in index order so the
    // union sequence does not depend on the worker count.
    std::set<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t b = 0; b < cfg.bands; ++b) {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) buckets[keys[i][b]].push_back(i);
        for (const auto& [key, members] : buckets) {
            for (std::size_t x = 0; x < members.size(); ++x) {
                for (std::size_t y = x + 1; y < members.size(); ++y) candidates.emplace(members[x], members[y]);
            }
        }
    }

    DisjointSets sets(n);
    for (const auto& [i, j] : candidates) {
        if (estimate_jaccard(sigs[i], sigs[j]) >= cfg.threshold) sets.unite(i, j);
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);

    NearDedupResult result;
    std::vector<bool> keep(n, false);
    for (const auto& [root, members] : groups) {
        const auto best = *std::min_element(members.begin(), members.end(),
                                            [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });
        keep[best] = true;
        if (members.size() > 1) {
            std::vector<std::string> ids;
            for (auto m : members) ids.push_back(docs[m].id);
            std::sort(ids.begin(), ids.end());
            result.clusters.push_back(std::move(ids));
        }
    }
    std::sort(result.clusters.begin(), result.clusters.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) result.survivors.push_back(docs[i]);
    }
    return result;
}

SubsampleResult stratified_subsample(std::span<const SeedDocument> docs,
                                     const std::map<std::string, std::size_t>& quotas, std::uint64_t seed) {
    SubsampleResult result;
    std::map<std::string, std::vector<std::size_t>> by_stratum;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!quotas.contains(docs[i].stratum)) {
            ++result.unknown_stratum;
            continue;
        }
        by_stratum[docs[i].stratum].push_back(i);
    }
    for (const auto& [stratum, quota] : quotas) result.strata[stratum] = {};

    std::vector<bool> chosen(docs.size(), false);
    for (auto& [stratum, members] : by_stratum) {
        // Canonical order by id, then a seeded partial Fisher-Yates.
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return docs[a].id < docs[b].id; });
        const std::size_t take = std::min(quotas.at(stratum), members.size());
        Rng rng(derive_seed(seed, stratum, 0));
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t j = k + rng.below(members.size() - k);
            std::swap(members[k], members[j]);
            chosen[members[k]] = true;
        }
        result.strata[stratum] = {members.size(), take};
        result.over_quota += members.size() - take;
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (chosen[i]) result.docs.push_back(docs[i]);
    }
    return result;
}

std::size_t CurationReport::rejected() const {
    std::size_t total = 0;
    for (const auto& [reason, count] : rejections) total += count;
    return total;
}

CurationResult curate(std::span<const SeedDocument> docs, const CurationConfig& cfg, std::uint64_t seed,
                      std::size_t workers) {
    CurationResult result;
    auto& report = result.report;
    report.input = docs.size();
    for (auto r : kAllReasons) report.rejections[std::string(to_string(r))] = 0;

    std::vector<Decision> decisions(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) { decisions[i] = filter_document(docs[i], cfg); });
    std::vector<SeedDocument> kept;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (decisions[i].keep()) {
            kept.push_back(docs[i]);
        } else {
            ++report.rejections[std::string(to_string(*decisions[i].reject))];
        }
    }

    auto exact = exact_dedup(kept);
    report.rejections["exact-dup"] = kept.size() - exact.size();

    auto near = near_dedup(exact, cfg.minhash, workers);
    report.rejections["near-dup"] = exact.size() - near.survivors.size();
    report.near_dup_clusters = std::move(near.clusters);

    if (cfg.quotas.empty()) {
        result.docs = std::move(near.survivors);
        for (const auto& d : result.docs) {
            auto& s = report.strata[d.stratum];
            ++s.before;
            ++s.after;
        }
    } else {
        auto sub = stratified_subsample(near.survivors, cfg.quotas, seed);
        report.rejections["unknown-stratum"] = sub.unknown_stratum;
        report.rejections["over-quota"] = sub.over_quota;
        report.strata = std::move(sub.strata);
        result.docs = std::move(sub.docs);
    }
    report.survivors = result.docs.size();
    return result;
}

void to_json(nlohmann::json& j, const SeedDocument& d) {
    j = {{"id", d.id}, {"source", to_string(d.source)}, {"stratum", d.stratum}, {"text", d.text}};
}

void from_json(const nlohmann::json& j, SeedDocument& d) {
    d = SeedDocument::make(j.at("id").get<std::string>(),
                           source_from_string(j.value("source", std::string("other"))),
                           j.value("stratum", std::string()), j.at("text").get<std::string>());
    if (d.id.empty()) throw std::invalid_argument("document id must be non-empty");
}

void to_json(nlohmann::json& j, const CurationReport& r) {
    nlohmann::json strata = nlohmann::json::object();
    for (const auto& [name, c] : r.strata) strata[name] = {{"before", c.before}, {"after", c.after}};
    j = {{"input", r.input},
         {"survivors", r.survivors},
         {"rejections", r.rejections},
         {"strata", strata},
         {"near_dup_clusters", r.near_dup_clusters}};
}

void to_json(nlohmann::json& j, const MinHashConfig& c) {
    j = {{"permutations", c.permutation_count}, {"shingle_width", c.shingle_width}, {"bands", c.bands},
         {"rows", c.rows}, {"threshold", c.threshold}, {"hash_seed", c.hash_seed}};
}

void from_json(const nlohmann::json& j, MinHashConfig& c) {
    c = MinHashConfig{};
    c.permutation_count = j.value("permutations", c.permutation_count);
    c.shingle_width = j.value("shingle_width", c.shingle_width);
    c.bands = j.value("bands", c.bands);
    c.rows = j.value("rows", c.rows);
    c.threshold = j.value("threshold", c.threshold);
    c.hash_seed = j.value("hash_seed", c.hash_seed);
}

void to_json(nlohmann::json& j, const CurationConfig& c) {
    j = {{"min_chars", c.min_chars}, {"max_chars", c.max_chars}, {"garbled_max", c.garbled_max},
         {"script_min", c.script_min}, {"minhash", c.minhash}, {"quotas", c.quotas}};
}

void from_json(const nlohmann::json& j, CurationConfig& c) {
    c = CurationConfig{};
    c.min_chars = j.value("min_chars", c.min_chars);
    c.max_chars = j.value("max_chars", c.max_chars);
    c.garbled_max = j.value("garbled_max", c.garbled_max);
    c.script_min = j.value("script_min", c.script_min);
    if (j.contains("minhash")) c.minhash = j.at("minhash").get<MinHashConfig>();
    if (j.contains("quotas")) c.quotas = j.at("quotas").get<std::map<std::string, std::size_t>>();
}

std::vector<SeedDocument> read_seed_documents(const std::filesystem::path& path) {
    std::vector<SeedDocument> docs;
    std::unordered_set<std::string> ids;
    std::size_t index = 0;
    for (const auto& j : jsonl::read(path)) {
        ++index;
        SeedDocument d;
        try {
            d = j.get<SeedDocument>();
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ": record " + std::to_string(index) + ": " + e.what());
        }
        if (!ids.insert(d.id).second) {
            throw std::runtime_error(path.string() + ": duplicate document id '" + d.id + "'");
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

void write_seed_documents(const std::filesystem::path& path, std::span<const SeedDocument> docs) {
    jsonl::write(path, docs);
}

}  // namespace scogen
