#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace msopt {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named consumer of the run seed.
/// Streams are keyed by (seed, label), so adding a consumer never shifts the
/// draws seen by existing ones.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view label);
Rng make_stream(std::uint64_t seed, std::string_view label);

/// Per-item stream, e.g. one generator per trajectory.
Rng make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index);

}  // namespace msopt
