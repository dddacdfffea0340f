#include "layerforge/image.hpp"

#include <algorithm>
#include <cmath>

namespace layerforge {

void validate_sample(const LayeredSample& sample) {
    sample.source.validate();
    sample.background.validate();
    require_same_dims(sample.source, sample.background, "sample background");
    for (std::size_t k = 0; k < sample.layers.size(); ++k) {
        const auto& layer = sample.layers[k];
        require_same_dims(sample.source, layer.rgb, "sample layer rgb");
        require_same_dims(sample.source, layer.alpha, "sample layer alpha");
        if (layer.order_index != static_cast<int>(k) + 1) {
            throw std::invalid_argument("layer order indices must be contiguous from 1; layer " +
                                        std::to_string(k) + " has order_index " +
                                        std::to_string(layer.order_index));
        }
        layer.rgb.validate();
        layer.alpha.validate();
    }
    if (sample.shadow) {
        require_same_dims(sample.source, *sample.shadow, "sample shadow");
        sample.shadow->validate();
    }
}

double coverage(const AlphaMask& alpha) {
    double sum = 0.0;
    for (float v : alpha.data()) sum += v;
    return alpha.empty() ? 0.0 : sum / static_cast<double>(alpha.size());
}

float max_abs_difference(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("max_abs_difference: length mismatch");
    float worst = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace layerforge
