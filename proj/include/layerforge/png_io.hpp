#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "layerforge/image.hpp"

namespace layerforge {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw decoded PNG: interleaved samples, 8- or 16-bit, 1 or 3 channels.
struct PngRaster {
    int height = 0;
    int width = 0;
    int channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

std::vector<unsigned char> encode_png(const PngRaster& raster);
PngRaster decode_png(std::span<const unsigned char> bytes);

// 8-bit quantization: v -> round(v * 255).
std::vector<unsigned char> encode_image_png(const Image& image);
std::vector<unsigned char> encode_mask_png(const AlphaMask& mask);
Image decode_image_png(std::span<const unsigned char> bytes);
AlphaMask decode_mask_png(std::span<const unsigned char> bytes);

// 16-bit offset encoding per channel: code = round((s + 1) / 2 * 65535).
std::uint16_t encode_shadow_value(float s);
float decode_shadow_value(std::uint16_t code);
std::vector<unsigned char> encode_shadow_png(const ShadowResidual& shadow);
ShadowResidual decode_shadow_png(std::span<const unsigned char> bytes);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

Image read_image_png(const std::filesystem::path& path);
void write_image_png(const std::filesystem::path& path, const Image& image);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace layerforge
