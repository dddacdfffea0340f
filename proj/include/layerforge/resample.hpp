#pragma once

#include "layerforge/image.hpp"

namespace layerforge {

// Bilinear resampling with half-pixel centers and edge clamping. Same-size
// requests return an exact copy. Results are clamped to the buffer's range.
Image resample_bilinear(const Image& image, int target_h, int target_w);
AlphaMask resample_bilinear(const AlphaMask& mask, int target_h, int target_w);

}  // namespace layerforge
