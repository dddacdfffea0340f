#pragma once

#include <cstddef>
#include <span>

#include "layerforge/image.hpp"

namespace layerforge {

/// Straight-alpha over: layer.rgb * alpha + under * (1 - alpha).
Image alpha_over(const ForegroundLayer& layer, const Image& under);

/// Stacks `layers` (front-to-back, strictly increasing order_index) onto
/// `background`, applying the backmost layer first. An empty stack returns
/// the background.
Image composite(const Image& background, std::span<const ForegroundLayer> layers);

/// Signed residual source - recomposed. Never clamped.
ShadowResidual shadow_residual(const Image& source, const Image& recomposed);

struct RecomposeDiagnostics {
    std::size_t clamped_values = 0;
    bool clamped() const { return clamped_values > 0; }
};

/// recomposed + shadow. Sums outside [0,1] only occur for pairs that did not
/// come from one sample; they are clamped and counted in `diagnostics`.
Image recompose(const Image& recomposed, const ShadowResidual& shadow,
                RecomposeDiagnostics* diagnostics = nullptr);

/// x * alpha + (1 - alpha): the image shown over a white canvas.
Image composite_on_white(const AlphaMask& alpha, const Image& x);

}  // namespace layerforge
