#include "layerforge/mock_scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "layerforge/compose.hpp"
#include "layerforge/degradation.hpp"
#include "layerforge/png_io.hpp"

namespace layerforge {

namespace {

const char* shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::disk: return "disk";
        case ShapeKind::rect: return "rect";
        case ShapeKind::ellipse: return "ellipse";
    }
    return "disk";
}

ShapeKind shape_from_name(const std::string& s) {
    if (s == "disk") return ShapeKind::disk;
    if (s == "rect") return ShapeKind::rect;
    if (s == "ellipse") return ShapeKind::ellipse;
    throw std::invalid_argument("unknown shape '" + s + "'");
}

// Portable uniform draw in [lo, hi).
double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

void check_index(const SceneSpec& spec, std::size_t k) {
    if (k >= spec.objects.size()) {
        throw std::out_of_range("scene " + spec.id + " has no object " + std::to_string(k));
    }
}

AlphaMask shadow_mask(const SceneSpec& spec, std::size_t k) {
    const auto& obj = spec.objects[k];
    const AlphaMask alpha = object_alpha(spec, k);
    const double side = std::min(spec.height, spec.width);
    const int oy = static_cast<int>(std::lround(obj.shadow.dy * side));
    const int ox = static_cast<int>(std::lround(obj.shadow.dx * side));
    AlphaMask shifted(spec.height, spec.width, 0.0f);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const int sy = y - oy;
            const int sx = x - ox;
            if (sy >= 0 && sy < spec.height && sx >= 0 && sx < spec.width) shifted.at(y, x) = alpha.at(sy, sx);
        }
    }
    AlphaMask out = obj.shadow.blur > 0.0 ? blur_boundary(shifted, obj.shadow.blur) : shifted;
    for (float& v : out.data()) v = static_cast<float>(std::clamp(v * obj.shadow.strength, 0.0, 1.0));
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const SceneSpec& spec) {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : spec.objects) {
        objects.push_back({{"name", o.name},
                           {"shape", shape_name(o.shape)},
                           {"center", {o.cy, o.cx}},
                           {"radius", {o.ry, o.rx}},
                           {"color", o.color},
                           {"softness", o.softness},
                           {"shadow",
                            {{"offset", {o.shadow.dy, o.shadow.dx}},
                             {"strength", o.shadow.strength},
                             {"blur", o.shadow.blur}}}});
    }
    j = nlohmann::json{{"id", spec.id},         {"height", spec.height},   {"width", spec.width},
                       {"top", spec.top},       {"bottom", spec.bottom},   {"texture", spec.texture},
                       {"objects", objects}};
}

void from_json(const nlohmann::json& j, SceneSpec& spec) {
    spec.id = j.at("id").get<std::string>();
    spec.height = j.at("height").get<int>();
    spec.width = j.at("width").get<int>();
    spec.top = j.at("top").get<std::array<float, 3>>();
    spec.bottom = j.at("bottom").get<std::array<float, 3>>();
    spec.texture = j.value("texture", 0.0);
    spec.objects.clear();
    for (const auto& o : j.at("objects")) {
        SceneObject obj;
        obj.name = o.at("name").get<std::string>();
        obj.shape = shape_from_name(o.at("shape").get<std::string>());
        obj.cy = o.at("center").at(0).get<double>();
        obj.cx = o.at("center").at(1).get<double>();
        obj.ry = o.at("radius").at(0).get<double>();
        obj.rx = o.at("radius").at(1).get<double>();
        obj.color = o.at("color").get<std::array<float, 3>>();
        obj.softness = o.value("softness", 1.5);
        if (o.contains("shadow")) {
            const auto& s = o["shadow"];
            obj.shadow.dy = s.at("offset").at(0).get<double>();
            obj.shadow.dx = s.at("offset").at(1).get<double>();
            obj.shadow.strength = s.value("strength", 0.0);
            obj.shadow.blur = s.value("blur", 0.0);
        }
        spec.objects.push_back(obj);
    }
}

Image render_background(const SceneSpec& spec) {
    Image img(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y) {
        const double t = spec.height > 1 ? static_cast<double>(y) / (spec.height - 1) : 0.0;
        for (int x = 0; x < spec.width; ++x) {
            const double tex = spec.texture * std::sin(0.37 * x + 0.11 * y) * std::cos(0.23 * y - 0.05 * x);
            for (int c = 0; c < 3; ++c) {
                const double v = spec.top[c] + t * (spec.bottom[c] - spec.top[c]) + tex;
                img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

AlphaMask object_alpha(const SceneSpec& spec, std::size_t k) {
    check_index(spec, k);
    const auto& o = spec.objects[k];
    const double side = std::min(spec.height, spec.width);
    const double cy = o.cy * spec.height;
    const double cx = o.cx * spec.width;
    const double ry = std::max(o.ry * side, 0.5);
    const double rx = o.shape == ShapeKind::disk ? ry : std::max(o.rx * side, 0.5);
    const double soft = std::max(o.softness, 1e-3);
    AlphaMask alpha(spec.height, spec.width, 0.0f);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double py = y + 0.5 - cy;
            const double px = x + 0.5 - cx;
            double d = 0.0;  // approximate signed distance to the outline, pixels
            if (o.shape == ShapeKind::rect) {
                d = std::max(std::abs(py) - ry, std::abs(px) - rx);
            } else {
                const double r = std::sqrt((py / ry) * (py / ry) + (px / rx) * (px / rx));
                d = (r - 1.0) * std::min(ry, rx);
            }
            alpha.at(y, x) = static_cast<float>(std::clamp(0.5 - d / soft, 0.0, 1.0));
        }
    }
    return alpha;
}

ForegroundLayer object_layer(const SceneSpec& spec, std::size_t k, int order_index) {
    check_index(spec, k);
    const auto& o = spec.objects[k];
    Image rgb(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y) {
        // Slight vertical shading so the layer is not a flat fill.
        const double shade = 1.0 - 0.12 * (static_cast<double>(y) / spec.height);
        for (int x = 0; x < spec.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                rgb.at(y, x, c) = static_cast<float>(std::clamp(o.color[c] * shade, 0.0, 1.0));
            }
        }
    }
    return {std::move(rgb), object_alpha(spec, k), order_index};
}

Image object_on_white(const SceneSpec& spec, std::size_t k) {
    const ForegroundLayer layer = object_layer(spec, k);
    return composite_on_white(layer.alpha, layer.rgb);
}

Image render_state(const SceneSpec& spec, std::size_t removed) {
    if (removed > spec.objects.size()) {
        throw std::out_of_range("scene " + spec.id + ": cannot remove " + std::to_string(removed) + " objects");
    }
    Image img = render_background(spec);
    for (std::size_t k = spec.objects.size(); k-- > removed;) {
        if (spec.objects[k].shadow.strength > 0.0) {
            const AlphaMask s = shadow_mask(spec, k);
            for (int y = 0; y < spec.height; ++y) {
                for (int x = 0; x < spec.width; ++x) {
                    for (int c = 0; c < 3; ++c) img.at(y, x, c) *= 1.0f - s.at(y, x);
                }
            }
        }
        img = alpha_over(object_layer(spec, k), img);
    }
    return img;
}

LayeredSample scene_truth(const SceneSpec& spec) {
    LayeredSample sample;
    sample.source = render_state(spec, 0);
    sample.background = render_background(spec);
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        sample.layers.push_back(object_layer(spec, k, static_cast<int>(k) + 1));
    }
    sample.shadow = shadow_residual(sample.source, composite(sample.background, sample.layers));
    return sample;
}

SceneSpec random_scene(std::uint64_t seed, const std::string& id, int height, int width, int n_objects) {
    if (n_objects < 0) throw std::invalid_argument("random_scene: negative object count");
    std::mt19937_64 rng(seed);
    static const std::array<std::array<float, 3>, 8> palette{{{0.85f, 0.15f, 0.12f},
                                                               {0.12f, 0.35f, 0.85f},
                                                               {0.15f, 0.65f, 0.2f},
                                                               {0.9f, 0.7f, 0.1f},
                                                               {0.55f, 0.2f, 0.7f},
                                                               {0.1f, 0.6f, 0.65f},
                                                               {0.9f, 0.4f, 0.1f},
                                                               {0.3f, 0.25f, 0.2f}}};
    static const std::array<const char*, 8> color_names{"red", "blue", "green", "yellow",
                                                        "purple", "teal", "orange", "brown"};

    SceneSpec spec;
    spec.id = id;
    spec.height = height;
    spec.width = width;
    // Near-neutral backdrop: light grey gradient with a faint tint.
    const double top = uniform(rng, 0.82, 0.92);
    const double bottom = uniform(rng, 0.72, 0.82);
    for (int c = 0; c < 3; ++c) {
        spec.top[c] = static_cast<float>(top + uniform(rng, -0.02, 0.02));
        spec.bottom[c] = static_cast<float>(bottom + uniform(rng, -0.02, 0.02));
    }
    spec.texture = 0.015;

    std::vector<std::size_t> colors(palette.size());
    for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
    for (std::size_t i = colors.size() - 1; i > 0; --i) std::swap(colors[i], colors[rng() % (i + 1)]);

    for (int k = 0; k < n_objects; ++k) {
        SceneObject o;
        o.shape = static_cast<ShapeKind>(rng() % 3);
        o.ry = uniform(rng, 0.1, 0.18);
        o.rx = o.shape == ShapeKind::disk ? o.ry : uniform(rng, 0.1, 0.18);
        // Prefer placements that keep objects mostly apart; accept the last
        // try regardless.
        for (int attempt = 0; attempt < 32; ++attempt) {
            o.cy = uniform(rng, 0.22, 0.78);
            o.cx = uniform(rng, 0.22, 0.78);
            bool clear = true;
            for (const auto& other : spec.objects) {
                const double dy = (o.cy - other.cy) * height / std::min(height, width);
                const double dx = (o.cx - other.cx) * width / std::min(height, width);
                const double reach = std::max(o.ry, o.rx) + std::max(other.ry, other.rx);
                if (std::sqrt(dy * dy + dx * dx) < 1.05 * reach) clear = false;
            }
            if (clear) break;
        }
        const std::size_t ci = colors[static_cast<std::size_t>(k) % colors.size()];
        o.color = palette[ci];
        o.name = std::string(color_names[ci]) + " " + shape_name(o.shape);
        o.softness = 1.5;
        o.shadow.dy = uniform(rng, 0.02, 0.04);
        o.shadow.dx = uniform(rng, 0.02, 0.04);
        o.shadow.strength = uniform(rng, 0.2, 0.35);
        o.shadow.blur = 1.5;
        spec.objects.push_back(o);
    }
    return spec;
}

std::filesystem::path scene_sidecar_path(const std::filesystem::path& image_path) {
    auto p = image_path;
    p.replace_extension(".scene.json");
    return p;
}

void write_scene_fixture(const SceneSpec& spec, const std::filesystem::path& image_path) {
    write_image_png(image_path, render_state(spec, 0));
    write_file(scene_sidecar_path(image_path), nlohmann::json(spec).dump(2) + "\n");
}

SceneSpec read_scene_sidecar(const std::filesystem::path& image_path) {
    const auto path = scene_sidecar_path(image_path);
    if (!std::filesystem::exists(path)) throw IoError("missing scene description " + path.string());
    const auto bytes = read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end()).get<SceneSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad scene description " + path.string() + ": " + e.what());
    }
}

}  // namespace layerforge
