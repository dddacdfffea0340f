#pragma once

#include <string>
#include <vector>

#include "layerforge/image.hpp"

namespace layerforge {

/// Candidate mattes from N segmentation experts for one foreground crop.
struct ExpertMaskSet {
    std::vector<AlphaMask> masks;
    std::vector<std::string> expert_ids;
};

struct FusionConfig {
    // Empty means the unweighted per-pixel mean. Otherwise one non-negative
    // weight per mask; weights are normalized by their sum.
    std::vector<double> weights;
};

AlphaMask resample_mask(const AlphaMask& mask, int target_h, int target_w);

/// Per-pixel mean of the expert masks. All masks must share dimensions.
AlphaMask fuse_masks(const ExpertMaskSet& set, const FusionConfig& config = {});

/// Resamples every mask to (target_h, target_w) before fusing.
AlphaMask fuse_masks_resampled(const ExpertMaskSet& set, int target_h, int target_w,
                               const FusionConfig& config = {});

/// RGBA layer from a white-background crop and its fused matte.
ForegroundLayer make_rgba(const Image& white_bg, const AlphaMask& alpha, int order_index = 1);

}  // namespace layerforge
