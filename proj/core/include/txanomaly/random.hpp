#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace txanomaly {

using Rng = std::mt19937_64;

// Child seeds are derived as splitmix64(parent ^ splitmix64(stream)). Streams
// are either small counters or fnv1a64(name), so adding a named stage does not
// shift the randomness of its siblings.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream);

// Uniform integer in [0, bound).
std::size_t uniform_index(Rng& rng, std::size_t bound);
// Uniform real in [0, 1).
double uniform_unit(Rng& rng);

// Draws `count` distinct values from [0, population) uniformly, returned in
// draw order. Partial Fisher-Yates.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t population,
                                                    std::size_t count);

void shuffle_indices(Rng& rng, std::vector<std::size_t>& values);

}  // namespace txanomaly
