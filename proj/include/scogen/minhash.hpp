#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace scogen {

struct MinHashConfig {
    std::size_t permutation_count = 256;
    std::size_t shingle_width = 5;  // tokens per shingle
    std::size_t bands = 32;
    std::size_t rows = 8;
    double threshold = 0.8;
    std::uint64_t hash_seed = 0x5eed;
};

struct MinHashSignature {
    std::size_t permutation_count = 0;
    std::size_t shingle_width = 0;
    std::uint64_t hash_seed = 0;
    std::vector<std::uint64_t> values;

    bool operator==(const MinHashSignature&) const = default;
};

/// Value stored at every position of the signature of an empty shingle set.
inline constexpr std::uint64_t kEmptySignatureValue = ~std::uint64_t{0};

class SignatureMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sorted, distinct 64-bit hashes of the word-level shingles of `text`.
/// Tokens are whitespace-separated and lowercased. Texts shorter than
/// `width` tokens yield a single shingle of all their tokens; empty text
/// yields no shingles.
std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t width);

MinHashSignature minhash_from_hashes(std::span<const std::uint64_t> shingles, const MinHashConfig& cfg);
MinHashSignature minhash_signature(std::string_view text, const MinHashConfig& cfg);

/// Fraction of positions with equal minima. Throws SignatureMismatch when
/// the signatures were built with different parameters.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

/// LSH band keys, one per band. Requires bands * rows <= permutation_count.
std::vector<std::uint64_t> lsh_band_keys(const MinHashSignature& sig, std::size_t bands, std::size_t rows);

}  // namespace scogen
