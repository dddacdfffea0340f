#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"

namespace layerforge {

enum class DegradationKind { erode, dilate, blur, expand_then_erode };

std::string to_string(DegradationKind kind);
DegradationKind degradation_kind_from_string(const std::string& name);

struct DegradationSpec {
    DegradationKind kind = DegradationKind::erode;
    int radius = 1;
    std::optional<double> blur_sigma;  // blur only
    std::uint64_t seed = 0;

    bool operator==(const DegradationSpec&) const = default;
};

void to_json(nlohmann::json& j, const DegradationSpec& spec);
void from_json(const nlohmann::json& j, DegradationSpec& spec);

/// Sampling ranges for training-time degradations (inclusive bounds).
struct DegradationRanges {
    std::vector<DegradationKind> kinds{DegradationKind::erode, DegradationKind::dilate, DegradationKind::blur,
                                       DegradationKind::expand_then_erode};
    int radius_min = 1;
    int radius_max = 8;
    double sigma_min = 0.5;
    double sigma_max = 4.0;
};

void to_json(nlohmann::json& j, const DegradationRanges& ranges);
void from_json(const nlohmann::json& j, DegradationRanges& ranges);

// Morphology uses a discrete Euclidean disk (dx^2 + dy^2 <= r^2). Pixels
// outside the frame are not part of the neighbourhood.
AlphaMask erode_alpha(const AlphaMask& mask, int radius);
AlphaMask dilate_alpha(const AlphaMask& mask, int radius);

/// Separable Gaussian blur (support ceil(4 sigma)), weights renormalized over
/// in-frame taps.
AlphaMask blur_boundary(const AlphaMask& mask, double sigma);

/// Throws std::invalid_argument if `spec` cannot be applied to a height x width layer.
void validate_spec(const DegradationSpec& spec, int height, int width);

/// Applies `spec` to the layer's alpha. rgb passes through untouched.
ForegroundLayer degrade_layer(const ForegroundLayer& layer, const DegradationSpec& spec);

/// Deterministic in `seed`: kind uniform over the enabled kinds, radius and
/// sigma uniform over their ranges.
DegradationSpec sample_degradation(std::uint64_t seed, const DegradationRanges& ranges = {});

}  // namespace layerforge
