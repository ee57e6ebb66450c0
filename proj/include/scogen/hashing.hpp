#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

namespace scogen {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's bytes; throws std::runtime_error when unreadable.
std::string sha256_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for (global seed, label, index). Used so that
/// parallel tasks draw from streams that do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view label, std::uint64_t index);

/// Seeded generator with platform-independent uniform draws.
/// std::uniform_*_distribution is implementation-defined, so we do not use it
/// anywhere reproducibility matters.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace scogen
