#include "scogen/minhash.hpp"

#include "scogen/hashing.hpp"
#include "scogen/text.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace scogen {

namespace {

// Universal hashing modulo the Mersenne prime 2^61 - 1.
constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_prime(unsigned __int128 x) {
    std::uint64_t lo = static_cast<std::uint64_t>(x & kPrime);
    std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
    std::uint64_t r = lo + hi;
    while (r >= kPrime) r -= kPrime;
    return r;
}

struct Permutation {
    std::uint64_t a;
    std::uint64_t b;
};

std::vector<Permutation> permutations(std::size_t count, std::uint64_t seed) {
    std::vector<Permutation> perms;
    perms.reserve(count);
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < count; ++i) {
        state = splitmix64(state);
        std::uint64_t a = state % (kPrime - 1) + 1;
        state = splitmix64(state);
        std::uint64_t b = state % kPrime;
        perms.push_back({a, b});
    }
    return perms;
}

}  // namespace

std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t width) {
    const auto tokens = text::tokenize(text::to_lower(text));
    std::vector<std::uint64_t> out;
    if (tokens.empty()) return out;
    width = std::max<std::size_t>(width, 1);
    const std::size_t count = tokens.size() >= width ? tokens.size() - width + 1 : 1;
    out.reserve(count);
    std::string shingle;
    for (std::size_t i = 0; i < count; ++i) {
        shingle.clear();
        const std::size_t end = std::min(tokens.size(), i + width);
        for (std::size_t k = i; k < end; ++k) {
            if (k > i) shingle.push_back(' ');
            shingle += tokens[k];
        }
        out.push_back(splitmix64(fnv1a64(shingle)));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MinHashSignature minhash_from_hashes(std::span<const std::uint64_t> shingles, const MinHashConfig& cfg) {
    if (cfg.permutation_count < 1) throw std::invalid_argument("permutation_count must be >= 1");
    MinHashSignature sig;
    sig.permutation_count = cfg.permutation_count;
    sig.shingle_width = cfg.shingle_width;
    sig.hash_seed = cfg.hash_seed;
    sig.values.assign(cfg.permutation_count, kEmptySignatureValue);
    if (shingles.empty()) return sig;
    const auto perms = permutations(cfg.permutation_count, cfg.hash_seed);
    for (std::uint64_t s : shingles) {
        const std::uint64_t x = s % kPrime;
        for (std::size_t i = 0; i < perms.size(); ++i) {
            const auto h = mod_prime(static_cast<unsigned __int128>(perms[i].a) * x + perms[i].b);
            sig.values[i] = std::min(sig.values[i], h);
        }
    }
    return sig;
}

MinHashSignature minhash_signature(std::string_view text, const MinHashConfig& cfg) {
    const auto shingles = shingle_hashes(text, cfg.shingle_width);
    return minhash_from_hashes(shingles, cfg);
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.permutation_count != b.permutation_count || a.shingle_width != b.shingle_width ||
        a.hash_seed != b.hash_seed || a.values.size() != b.values.size()) {
        throw SignatureMismatch("MinHash signatures built with different parameters");
    }
    if (a.values.empty()) return 1.0;
    std::size_t equal = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) equal += a.values[i] == b.values[i];
    return static_cast<double>(equal) / static_cast<double>(a.values.size());
}

std::vector<std::uint64_t> lsh_band_keys(const MinHashSignature& sig, std::size_t bands, std::size_t rows) {
    if (bands * rows > sig.values.size()) throw std::invalid_argument("bands * rows exceeds signature length");
    std::vector<std::uint64_t> keys;
    keys.reserve(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        std::uint64_t h = splitmix64(b);
        for (std::size_t r = 0; r < rows; ++r) h = splitmix64(h ^ sig.values[b * rows + r]);
        keys.push_back(h);
    }
    return keys;
}

}  // namespace scogen
