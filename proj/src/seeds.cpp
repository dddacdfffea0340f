#include "layerforge/seeds.hpp"

#include <array>
#include <random>
#include <vector>

namespace layerforge {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    std::vector<std::uint32_t> material;
    material.reserve(name.size() + 2);
    material.push_back(static_cast<std::uint32_t>(seed));
    material.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (char ch : name) material.push_back(static_cast<unsigned char>(ch));
    std::seed_seq seq(material.begin(), material.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace layerforge
