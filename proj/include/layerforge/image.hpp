#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace layerforge {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct UnitRange {
    static constexpr float lo = 0.0f;
    static constexpr float hi = 1.0f;
};

struct SignedUnitRange {
    static constexpr float lo = -1.0f;
    static constexpr float hi = 1.0f;
};

// Interleaved row-major pixel storage. `Channels` values per pixel, each
// expected inside Range::lo..Range::hi. Distinct instantiations are distinct
// domain types (an alpha matte is never accepted where an image is expected).
template <int Channels, typename Range, typename Tag>
class PixelBuffer {
public:
    static constexpr int channels = Channels;
    static constexpr float min_value = Range::lo;
    static constexpr float max_value = Range::hi;

    PixelBuffer() = default;

    PixelBuffer(int height, int width, float fill = 0.0f)
        : height_(height), width_(width) {
        if (height < 1 || width < 1) {
            throw DimensionError("pixel buffer dimensions must be >= 1, got " +
                                 std::to_string(height) + "x" + std::to_string(width));
        }
        data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * Channels, fill);
    }

    // Takes ownership of `data` and checks size and value range.
    static PixelBuffer from_data(int height, int width, std::vector<float> data) {
        PixelBuffer out(height, width);
        if (data.size() != out.data_.size()) {
            throw DimensionError("data length " + std::to_string(data.size()) + " does not match " +
                                 std::to_string(height) + "x" + std::to_string(width) + "x" +
                                 std::to_string(Channels));
        }
        out.data_ = std::move(data);
        out.validate();
        return out;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
    float& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    template <typename Other>
    bool same_dims(const Other& other) const {
        return height_ == other.height() && width_ == other.width();
    }

    // Throws RangeError naming the first offending pixel.
    void validate() const {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const float v = data_[i];
            if (!(v >= Range::lo && v <= Range::hi)) {
                const std::size_t px = i / Channels;
                throw RangeError("value " + std::to_string(v) + " out of range at (y=" +
                                 std::to_string(px / static_cast<std::size_t>(width_)) + ", x=" +
                                 std::to_string(px % static_cast<std::size_t>(width_)) + ", c=" +
                                 std::to_string(i % Channels) + ")");
            }
        }
    }

    bool operator==(const PixelBuffer&) const = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   Channels +
               static_cast<std::size_t>(c);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

struct ImageTag {};
struct AlphaTag {};
struct ShadowTag {};

using Image = PixelBuffer<3, UnitRange, ImageTag>;
using AlphaMask = PixelBuffer<1, UnitRange, AlphaTag>;
using ShadowResidual = PixelBuffer<3, SignedUnitRange, ShadowTag>;

/// RGB appearance plus straight alpha. order_index 1 is the frontmost layer.
struct ForegroundLayer {
    Image rgb;
    AlphaMask alpha;
    int order_index = 1;

    bool operator==(const ForegroundLayer&) const = default;
};

/// Source image explained as background + front-to-back layers (+ optional
/// signed residual capturing illumination effects the stack cannot).
struct LayeredSample {
    Image source;
    Image background;
    std::vector<ForegroundLayer> layers;
    std::optional<ShadowResidual> shadow;
};

template <typename A, typename B>
void require_same_dims(const A& a, const B& b, const char* what) {
    if (!a.same_dims(b)) {
        throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a.height()) + "x" +
                             std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                             std::to_string(b.width()));
    }
}

// Checks member dimensions, layer rgb/alpha pairing, contiguous order indices
// and value ranges. Does not check the recomposition invariant.
void validate_sample(const LayeredSample& sample);

/// Mean opacity of a matte.
double coverage(const AlphaMask& alpha);

float max_abs_difference(std::span<const float> a, std::span<const float> b);

}  // namespace layerforge
