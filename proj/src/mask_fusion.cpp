#include "layerforge/mask_fusion.hpp"

#include <algorithm>
#include <numeric>

#include "layerforge/resample.hpp"

namespace layerforge {

AlphaMask resample_mask(const AlphaMask& mask, int target_h, int target_w) {
    return resample_bilinear(mask, target_h, target_w);
}

AlphaMask fuse_masks(const ExpertMaskSet& set, const FusionConfig& config) {
    if (set.masks.empty()) throw std::invalid_argument("fuse_masks: empty expert mask set");
    const AlphaMask& first = set.masks.front();
    for (const auto& m : set.masks) require_same_dims(first, m, "fuse_masks");

    const std::size_t n = set.masks.size();
    const bool weighted = !config.weights.empty();
    if (weighted) {
        if (config.weights.size() != n) throw std::invalid_argument("fuse_masks: one weight per mask required");
        for (double w : config.weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("fuse_masks: weights must be non-negative");
        }
        if (std::accumulate(config.weights.begin(), config.weights.end(), 0.0) <= 0.0) {
            throw std::invalid_argument("fuse_masks: weights sum to zero");
        }
    }

    AlphaMask out(first.height(), first.width());
    auto dst = out.data();
    if (!weighted) {
        // Summing the sorted per-pixel values makes the result independent of
        // expert order down to the last bit.
        std::vector<float> values(n);
        for (std::size_t p = 0; p < dst.size(); ++p) {
            for (std::size_t k = 0; k < n; ++k) values[k] = set.masks[k].data()[p];
            std::sort(values.begin(), values.end());
            double sum = 0.0;
            for (float v : values) sum += v;
            dst[p] = std::clamp(static_cast<float>(sum / static_cast<double>(n)), 0.0f, 1.0f);
        }
        return out;
    }

    const double total = std::accumulate(config.weights.begin(), config.weights.end(), 0.0);
    for (std::size_t p = 0; p < dst.size(); ++p) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += config.weights[k] * set.masks[k].data()[p];
        dst[p] = std::clamp(static_cast<float>(sum / total), 0.0f, 1.0f);
    }
    return out;
}

AlphaMask fuse_masks_resampled(const ExpertMaskSet& set, int target_h, int target_w, const FusionConfig& config) {
    ExpertMaskSet resized;
    resized.expert_ids = set.expert_ids;
    resized.masks.reserve(set.masks.size());
    for (const auto& m : set.masks) resized.masks.push_back(resample_mask(m, target_h, target_w));
    return fuse_masks(resized, config);
}

ForegroundLayer make_rgba(const Image& white_bg, const AlphaMask& alpha, int order_index) {
    require_same_dims(white_bg, alpha, "make_rgba");
    return ForegroundLayer{white_bg, alpha, order_index};
}

}  // namespace layerforge
