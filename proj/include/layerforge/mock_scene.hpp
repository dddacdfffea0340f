#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"

namespace layerforge {

// Procedural scenes with known layer structure. They back the offline mock
// services: every intermediate state a perfect agent/editor could produce is
// computable from the scene description.

enum class ShapeKind { disk, rect, ellipse };

struct CastShadow {
    double dy = 0.0;  // offset, fraction of the shorter side
    double dx = 0.0;
    double strength = 0.0;  // multiplicative darkening at full coverage
    double blur = 0.0;      // Gaussian sigma in pixels, 0 = hard
};

struct SceneObject {
    std::string name;
    ShapeKind shape = ShapeKind::disk;
    double cy = 0.5;  // centre, fraction of height / width
    double cx = 0.5;
    double ry = 0.1;  // half extents, fraction of the shorter side
    double rx = 0.1;
    std::array<float, 3> color{0.5f, 0.5f, 0.5f};
    double softness = 1.5;  // edge ramp width in pixels
    CastShadow shadow;
};

struct SceneSpec {
    std::string id;
    int height = 64;
    int width = 64;
    std::array<float, 3> top{0.9f, 0.9f, 0.9f};
    std::array<float, 3> bottom{0.8f, 0.8f, 0.8f};
    double texture = 0.02;
    std::vector<SceneObject> objects;  // front to back
};

void to_json(nlohmann::json& j, const SceneSpec& spec);
void from_json(const nlohmann::json& j, SceneSpec& spec);

Image render_background(const SceneSpec& spec);
AlphaMask object_alpha(const SceneSpec& spec, std::size_t k);
ForegroundLayer object_layer(const SceneSpec& spec, std::size_t k, int order_index = 1);
/// Object k alone over white.
Image object_on_white(const SceneSpec& spec, std::size_t k);
/// The scene with its `removed` frontmost objects (and their shadows) gone.
/// render_state(spec, 0) is the full scene.
Image render_state(const SceneSpec& spec, std::size_t removed);

/// Ground-truth decomposition of the full scene: empty background, every
/// object as a layer, shadows as the residual.
LayeredSample scene_truth(const SceneSpec& spec);

/// Deterministic in all arguments.
SceneSpec random_scene(std::uint64_t seed, const std::string& id, int height, int width, int n_objects);

/// Scene description stored next to a rendered PNG: <stem>.scene.json.
std::filesystem::path scene_sidecar_path(const std::filesystem::path& image_path);
void write_scene_fixture(const SceneSpec& spec, const std::filesystem::path& image_path);
SceneSpec read_scene_sidecar(const std::filesystem::path& image_path);

}  // namespace layerforge
