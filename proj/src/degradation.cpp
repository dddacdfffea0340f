#include "layerforge/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <random>
#include <stdexcept>

namespace layerforge {

std::string to_string(DegradationKind kind) {
    switch (kind) {
        case DegradationKind::erode: return "erode";
        case DegradationKind::dilate: return "dilate";
        case DegradationKind::blur: return "blur";
        case DegradationKind::expand_then_erode: return "expand_then_erode";
    }
    return "unknown";
}

DegradationKind degradation_kind_from_string(const std::string& name) {
    if (name == "erode") return DegradationKind::erode;
    if (name == "dilate") return DegradationKind::dilate;
    if (name == "blur") return DegradationKind::blur;
    if (name == "expand_then_erode") return DegradationKind::expand_then_erode;
    throw std::invalid_argument("unknown degradation kind '" + name + "'");
}

void to_json(nlohmann::json& j, const DegradationSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)}, {"radius", spec.radius}, {"seed", spec.seed}};
    if (spec.blur_sigma) j["blur_sigma"] = *spec.blur_sigma;
}

void from_json(const nlohmann::json& j, DegradationSpec& spec) {
    spec.kind = degradation_kind_from_string(j.at("kind").get<std::string>());
    spec.radius = j.at("radius").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.blur_sigma.reset();
    if (j.contains("blur_sigma") && !j["blur_sigma"].is_null()) spec.blur_sigma = j["blur_sigma"].get<double>();
}

void to_json(nlohmann::json& j, const DegradationRanges& ranges) {
    std::vector<std::string> kinds;
    for (auto k : ranges.kinds) kinds.push_back(to_string(k));
    j = nlohmann::json{{"kinds", kinds},
                       {"radius", {ranges.radius_min, ranges.radius_max}},
                       {"sigma", {ranges.sigma_min, ranges.sigma_max}}};
}

void from_json(const nlohmann::json& j, DegradationRanges& ranges) {
    if (j.contains("kinds")) {
        ranges.kinds.clear();
        for (const auto& k : j["kinds"]) ranges.kinds.push_back(degradation_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("radius")) {
        ranges.radius_min = j["radius"].at(0).get<int>();
        ranges.radius_max = j["radius"].at(1).get<int>();
    }
    if (j.contains("sigma")) {
        ranges.sigma_min = j["sigma"].at(0).get<double>();
        ranges.sigma_max = j["sigma"].at(1).get<double>();
    }
}

namespace {

// Row-wise sliding extremum over [x - half, x + half] clipped to the row.
template <typename Better>
void sliding_extremum(std::span<const float> row, int half, std::span<float> out, Better better) {
    const int n = static_cast<int>(row.size());
    std::deque<int> window;
    int next = 0;
    for (int x = 0; x < n; ++x) {
        const int hi = std::min(n - 1, x + half);
        for (; next <= hi; ++next) {
            while (!window.empty() && !better(row[static_cast<std::size_t>(window.back())],
                                              row[static_cast<std::size_t>(next)])) {
                window.pop_back();
            }
            window.push_back(next);
        }
        while (window.front() < x - half) window.pop_front();
        out[static_cast<std::size_t>(x)] = row[static_cast<std::size_t>(window.front())];
    }
}

template <typename Better>
AlphaMask disk_morphology(const AlphaMask& mask, int radius, Better better) {
    if (radius < 1) throw std::invalid_argument("morphology radius must be >= 1, got " + std::to_string(radius));
    const int h = mask.height();
    const int w = mask.width();

    // Half-width of the disk for each row offset dy in [0, radius].
    std::vector<int> half(static_cast<std::size_t>(radius) + 1);
    for (int dy = 0; dy <= radius; ++dy) {
        int hw = 0;
        while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
        half[static_cast<std::size_t>(dy)] = hw;
    }

    // One horizontally filtered plane per distinct half-width.
    std::vector<std::vector<float>> planes(static_cast<std::size_t>(radius) + 1);
    const auto src = mask.data();
    for (int hw : half) {
        auto& plane = planes[static_cast<std::size_t>(hw)];
        if (!plane.empty()) continue;
        plane.resize(src.size());
        for (int y = 0; y < h; ++y) {
            const std::size_t off = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
            sliding_extremum(src.subspan(off, static_cast<std::size_t>(w)), hw,
                             std::span<float>(plane).subspan(off, static_cast<std::size_t>(w)), better);
        }
    }

    AlphaMask out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float best = src[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const auto& plane = planes[static_cast<std::size_t>(half[static_cast<std::size_t>(std::abs(dy))])];
                const float v = plane[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
                if (better(v, best)) best = v;
            }
            out.at(y, x) = best;
        }
    }
    return out;
}

}  // namespace

AlphaMask erode_alpha(const AlphaMask& mask, int radius) {
    return disk_morphology(mask, radius, [](float a, float b) { return a < b; });
}

AlphaMask dilate_alpha(const AlphaMask& mask, int radius) {
    return disk_morphology(mask, radius, [](float a, float b) { return a > b; });
}

AlphaMask blur_boundary(const AlphaMask& mask, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("blur sigma must be > 0");
    const int support = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * support + 1));
    for (int k = -support; k <= support; ++k) {
        kernel[static_cast<std::size_t>(k + support)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    }

    const int h = mask.height();
    const int w = mask.width();
    auto convolve_axis = [&](const std::vector<double>& in, std::vector<double>& out, bool horizontal) {
        const int n = horizontal ? w : h;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int pos = horizontal ? x : y;
                double acc = 0.0;
                double norm = 0.0;
                for (int k = -support; k <= support; ++k) {
                    const int q = pos + k;
                    if (q < 0 || q >= n) continue;
                    const double wt = kernel[static_cast<std::size_t>(k + support)];
                    const std::size_t idx = horizontal
                                                ? static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(q)
                                                : static_cast<std::size_t>(q) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
                    acc += wt * in[idx];
                    norm += wt;
                }
                out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc / norm;
            }
        }
    };

    std::vector<double> buf(mask.data().begin(), mask.data().end());
    std::vector<double> tmp(buf.size());
    convolve_axis(buf, tmp, true);
    convolve_axis(tmp, buf, false);

    AlphaMask out(h, w);
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp(static_cast<float>(buf[i]), 0.0f, 1.0f);
    return out;
}

void validate_spec(const DegradationSpec& spec, int height, int width) {
    if (spec.radius < 1) throw std::invalid_argument("degradation radius must be >= 1");
    if (spec.kind == DegradationKind::blur) {
        if (!spec.blur_sigma || !(*spec.blur_sigma > 0.0)) {
            throw std::invalid_argument("blur degradation requires blur_sigma > 0");
        }
        return;
    }
    if (spec.radius * 4 > std::min(height, width)) {
        throw std::invalid_argument("degradation radius " + std::to_string(spec.radius) +
                                    " exceeds min(H,W)/4 for a " + std::to_string(height) + "x" +
                                    std::to_string(width) + " layer");
    }
}

ForegroundLayer degrade_layer(const ForegroundLayer& layer, const DegradationSpec& spec) {
    require_same_dims(layer.rgb, layer.alpha, "degrade_layer");
    validate_spec(spec, layer.alpha.height(), layer.alpha.width());
    ForegroundLayer out = layer;
    switch (spec.kind) {
        case DegradationKind::erode: out.alpha = erode_alpha(layer.alpha, spec.radius); break;
        case DegradationKind::dilate: out.alpha = dilate_alpha(layer.alpha, spec.radius); break;
        case DegradationKind::blur: out.alpha = blur_boundary(layer.alpha, *spec.blur_sigma); break;
        case DegradationKind::expand_then_erode:
            out.alpha = erode_alpha(dilate_alpha(layer.alpha, spec.radius), 2 * spec.radius);
            break;
    }
    return out;
}

DegradationSpec sample_degradation(std::uint64_t seed, const DegradationRanges& ranges) {
    if (ranges.kinds.empty()) throw std::invalid_argument("sample_degradation: no degradation kinds enabled");
    if (ranges.radius_min < 1 || ranges.radius_max < ranges.radius_min) {
        throw std::invalid_argument("sample_degradation: invalid radius range");
    }
    if (!(ranges.sigma_min > 0.0) || ranges.sigma_max < ranges.sigma_min) {
        throw std::invalid_argument("sample_degradation: invalid sigma range");
    }
    std::mt19937_64 rng(seed);
    DegradationSpec spec;
    spec.seed = seed;
    spec.kind = ranges.kinds[rng() % ranges.kinds.size()];
    const auto span = static_cast<std::uint64_t>(ranges.radius_max - ranges.radius_min) + 1;
    spec.radius = ranges.radius_min + static_cast<int>(rng() % span);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (spec.kind == DegradationKind::blur) spec.blur_sigma = ranges.sigma_min + u * (ranges.sigma_max - ranges.sigma_min);
    return spec;
}

}  // namespace layerforge
