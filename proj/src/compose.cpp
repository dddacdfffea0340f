#include "layerforge/compose.hpp"

#include <algorithm>
#include <string>

namespace layerforge {

namespace {

// Blend in place: under = fg * a + under * (1 - a). a==1 and a==0 are exact.
void blend_into(const Image& fg, const AlphaMask& alpha, Image& under) {
    auto out = under.data();
    const auto src = fg.data();
    const auto a = alpha.data();
    const std::size_t pixels = under.pixel_count();
    for (std::size_t p = 0; p < pixels; ++p) {
        const float w = a[p];
        if (w == 0.0f) continue;
        for (int c = 0; c < Image::channels; ++c) {
            const std::size_t i = p * Image::channels + static_cast<std::size_t>(c);
            out[i] = w == 1.0f ? src[i] : std::clamp(src[i] * w + out[i] * (1.0f - w), 0.0f, 1.0f);
        }
    }
}

}  // namespace

Image alpha_over(const ForegroundLayer& layer, const Image& under) {
    require_same_dims(layer.rgb, under, "alpha_over");
    require_same_dims(layer.alpha, under, "alpha_over alpha");
    Image out = under;
    blend_into(layer.rgb, layer.alpha, out);
    return out;
}

Image composite(const Image& background, std::span<const ForegroundLayer> layers) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        require_same_dims(layers[k].rgb, background, "composite");
        require_same_dims(layers[k].alpha, background, "composite alpha");
        if (k > 0 && layers[k].order_index <= layers[k - 1].order_index) {
            throw std::invalid_argument("composite: layers must be ordered front-to-back by order_index");
        }
    }
    Image out = background;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) blend_into(it->rgb, it->alpha, out);
    return out;
}

ShadowResidual shadow_residual(const Image& source, const Image& recomposed) {
    require_same_dims(source, recomposed, "shadow_residual");
    ShadowResidual out(source.height(), source.width());
    auto dst = out.data();
    const auto s = source.data();
    const auto r = recomposed.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = s[i] - r[i];
    return out;
}

Image recompose(const Image& recomposed, const ShadowResidual& shadow, RecomposeDiagnostics* diagnostics) {
    require_same_dims(recomposed, shadow, "recompose");
    Image out(recomposed.height(), recomposed.width());
    auto dst = out.data();
    const auto r = recomposed.data();
    const auto s = shadow.data();
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const float v = r[i] + s[i];
        if (v < 0.0f || v > 1.0f) {
            ++clamped;
            dst[i] = std::clamp(v, 0.0f, 1.0f);
        } else {
            dst[i] = v;
        }
    }
    if (diagnostics) diagnostics->clamped_values = clamped;
    return out;
}

Image composite_on_white(const AlphaMask& alpha, const Image& x) {
    require_same_dims(alpha, x, "composite_on_white");
    Image out(x.height(), x.width(), 1.0f);
    blend_into(x, alpha, out);
    return out;
}

}  // namespace layerforge
