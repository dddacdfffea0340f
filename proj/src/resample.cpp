#include "layerforge/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace layerforge {

namespace {

struct Tap {
    int i0 = 0;
    int i1 = 0;
    float frac = 0.0f;
};

std::vector<Tap> axis_taps(int in, int out) {
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int o = 0; o < out; ++o) {
        const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(src));
        taps[static_cast<std::size_t>(o)] = {i0, std::min(i0 + 1, in - 1), static_cast<float>(src - i0)};
    }
    return taps;
}

template <typename Buffer>
Buffer resample(const Buffer& in, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) {
        throw DimensionError("resample target dimensions must be >= 1");
    }
    if (in.height() == target_h && in.width() == target_w) return in;

    const auto ty = axis_taps(in.height(), target_h);
    const auto tx = axis_taps(in.width(), target_w);
    Buffer out(target_h, target_w);
    constexpr int C = Buffer::channels;
    for (int y = 0; y < target_h; ++y) {
        const Tap& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < target_w; ++x) {
            const Tap& vx = tx[static_cast<std::size_t>(x)];
            for (int c = 0; c < C; ++c) {
                const float a = in.at(vy.i0, vx.i0, c);
                const float b = in.at(vy.i0, vx.i1, c);
                const float d = in.at(vy.i1, vx.i0, c);
                const float e = in.at(vy.i1, vx.i1, c);
                // a + f * (b - a) keeps constant regions exactly constant.
                const float top = a + vx.frac * (b - a);
                const float bottom = d + vx.frac * (e - d);
                out.at(y, x, c) = std::clamp(top + vy.frac * (bottom - top), Buffer::min_value, Buffer::max_value);
            }
        }
    }
    return out;
}

}  // namespace

Image resample_bilinear(const Image& image, int target_h, int target_w) {
    return resample(image, target_h, target_w);
}

AlphaMask resample_bilinear(const AlphaMask& mask, int target_h, int target_w) {
    return resample(mask, target_h, target_w);
}

}  // namespace layerforge
