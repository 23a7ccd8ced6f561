#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dkbo {

using Rng = std::mt19937_64;

/// Seeds an engine from a list of integers (seed, iteration, stream, ...).
/// Distinct key tuples give statistically independent streams.
inline Rng make_rng(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key.size());
    for (auto k : key) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Stream identifiers used when deriving per-purpose engines.
namespace stream {
inline constexpr std::uint64_t init_design = 0x11;
inline constexpr std::uint64_t fit = 0x22;
inline constexpr std::uint64_t select = 0x33;
inline constexpr std::uint64_t restarts = 0x44;
inline constexpr std::uint64_t dropout = 0x55;
inline constexpr std::uint64_t projection = 0x66;
inline constexpr std::uint64_t split = 0x77;
inline constexpr std::uint64_t pairs = 0x88;
} // namespace stream

} // namespace dkbo
