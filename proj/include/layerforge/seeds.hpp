#pragma once

#include <cstdint>
#include <string_view>

namespace layerforge {

/// Named sub-seed of `seed`. Stable across platforms (std::seed_seq is fully
/// specified), so every random draw in a run is reproducible from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

}  // namespace layerforge
