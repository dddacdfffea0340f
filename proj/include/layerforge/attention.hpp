#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace layerforge {

enum class GroupRole { source, shadow, background, foreground, degraded };
std::string to_string(GroupRole role);

/// A contiguous run of tokens belonging to one input. Degraded groups point at
/// the foreground group they were derived from.
struct TokenGroup {
    int group_id = 0;
    GroupRole role = GroupRole::foreground;
    std::size_t token_count = 0;
    std::optional<int> linked_foreground;
};

struct AttentionConfig {
    // Clean (non-degraded) queries may not see degraded keys.
    bool block_clean_to_degraded = true;
};

/// Square query x key permission matrix over the concatenated token sequence.
class AttentionMask {
public:
    explicit AttentionMask(std::size_t tokens) : n_(tokens), allowed_(tokens * tokens, 0) {}

    std::size_t size() const { return n_; }
    bool allowed(std::size_t query, std::size_t key) const { return allowed_[query * n_ + key] != 0; }
    void set(std::size_t query, std::size_t key, bool value) { allowed_[query * n_ + key] = value ? 1 : 0; }

private:
    std::size_t n_;
    std::vector<unsigned char> allowed_;
};

/// Token offset of each group in declaration order.
std::vector<std::size_t> group_offsets(const std::vector<TokenGroup>& groups);

/// Degraded queries see only their own group and the source group. Clean
/// queries see every clean group (and degraded groups only when the config
/// allows it). Throws on a missing/duplicate source or a broken link.
AttentionMask build_attention_mask(const std::vector<TokenGroup>& groups, const AttentionConfig& config = {});

struct PositionRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    bool operator==(const PositionRange&) const = default;
};

/// Clean groups get disjoint consecutive position ids in declaration order;
/// each degraded group reuses its linked foreground's range.
std::vector<PositionRange> assign_positions(const std::vector<TokenGroup>& groups);

}  // namespace layerforge
