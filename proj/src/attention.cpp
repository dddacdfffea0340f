#include "layerforge/attention.hpp"

#include <map>
#include <stdexcept>

namespace layerforge {

std::string to_string(GroupRole role) {
    switch (role) {
        case GroupRole::source: return "source";
        case GroupRole::shadow: return "shadow";
        case GroupRole::background: return "background";
        case GroupRole::foreground: return "foreground";
        case GroupRole::degraded: return "degraded";
    }
    return "unknown";
}

namespace {

// Maps group_id -> position in `groups`, checking the structural rules.
std::map<int, std::size_t> validate_groups(const std::vector<TokenGroup>& groups) {
    std::map<int, std::size_t> by_id;
    std::size_t sources = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (!by_id.emplace(groups[i].group_id, i).second) {
            throw std::invalid_argument("duplicate token group id " + std::to_string(groups[i].group_id));
        }
        if (groups[i].role == GroupRole::source) ++sources;
    }
    if (sources != 1) {
        throw std::invalid_argument("exactly one source group required, found " + std::to_string(sources));
    }
    for (const auto& g : groups) {
        if (g.role != GroupRole::degraded) continue;
        if (!g.linked_foreground) {
            throw std::invalid_argument("degraded group " + std::to_string(g.group_id) + " has no linked foreground");
        }
        auto it = by_id.find(*g.linked_foreground);
        if (it == by_id.end() || groups[it->second].role != GroupRole::foreground) {
            throw std::invalid_argument("degraded group " + std::to_string(g.group_id) +
                                        " links to missing or non-foreground group " +
                                        std::to_string(*g.linked_foreground));
        }
        if (groups[it->second].token_count != g.token_count) {
            throw std::invalid_argument("degraded group " + std::to_string(g.group_id) +
                                        " token count differs from its linked foreground");
        }
    }
    return by_id;
}

}  // namespace

std::vector<std::size_t> group_offsets(const std::vector<TokenGroup>& groups) {
    std::vector<std::size_t> offsets(groups.size() + 1, 0);
    for (std::size_t i = 0; i < groups.size(); ++i) offsets[i + 1] = offsets[i] + groups[i].token_count;
    return offsets;
}

AttentionMask build_attention_mask(const std::vector<TokenGroup>& groups, const AttentionConfig& config) {
    validate_groups(groups);
    const auto offsets = group_offsets(groups);
    AttentionMask mask(offsets.back());

    std::size_t source = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].role == GroupRole::source) source = i;
    }

    for (std::size_t qg = 0; qg < groups.size(); ++qg) {
        const bool q_degraded = groups[qg].role == GroupRole::degraded;
        for (std::size_t kg = 0; kg < groups.size(); ++kg) {
            const bool k_degraded = groups[kg].role == GroupRole::degraded;
            bool allow = false;
            if (q_degraded) {
                allow = kg == qg || kg == source;
            } else {
                allow = !k_degraded || !config.block_clean_to_degraded;
            }
            if (!allow) continue;
            for (std::size_t q = offsets[qg]; q < offsets[qg + 1]; ++q) {
                for (std::size_t k = offsets[kg]; k < offsets[kg + 1]; ++k) mask.set(q, k, true);
            }
        }
    }
    return mask;
}

std::vector<PositionRange> assign_positions(const std::vector<TokenGroup>& groups) {
    const auto by_id = validate_groups(groups);
    std::vector<PositionRange> ranges(groups.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].role == GroupRole::degraded) continue;
        ranges[i] = {next, next + groups[i].token_count};
        next += groups[i].token_count;
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].role == GroupRole::degraded) ranges[i] = ranges[by_id.at(*groups[i].linked_foreground)];
    }
    return ranges;
}

}  // namespace layerforge
