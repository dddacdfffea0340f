#include "layerforge/png_io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace layerforge {

namespace {

struct ReadCursor {
    std::span<const unsigned char> bytes;
    std::size_t offset = 0;
};

void on_png_error(png_structp png, png_const_charp message) {
    auto* error = static_cast<std::string*>(png_get_error_ptr(png));
    *error = message;
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_bytes(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
    cursor->offset += length;
}

void write_bytes(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_bytes(png_structp) {}

unsigned char quantize8(float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

std::vector<unsigned char> encode_png(const PngRaster& raster) {
    if (raster.channels != 1 && raster.channels != 3) throw IoError("encode_png: unsupported channel count");
    if (raster.bit_depth != 8 && raster.bit_depth != 16) throw IoError("encode_png: unsupported bit depth");
    const std::size_t row_samples = static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.channels);
    if (raster.samples.size() != row_samples * static_cast<std::size_t>(raster.height)) {
        throw IoError("encode_png: sample count does not match dimensions");
    }

    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<unsigned char> out;
    std::vector<unsigned char> row(row_samples * (raster.bit_depth == 16 ? 2 : 1));

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + error);
    }
    png_set_write_fn(png, &out, write_bytes, flush_bytes);
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height),
                 raster.bit_depth, raster.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < raster.height; ++y) {
        const std::uint16_t* src = raster.samples.data() + static_cast<std::size_t>(y) * row_samples;
        for (std::size_t i = 0; i < row_samples; ++i) {
            if (raster.bit_depth == 16) {
                row[2 * i] = static_cast<unsigned char>(src[i] >> 8);  // PNG is big-endian
                row[2 * i + 1] = static_cast<unsigned char>(src[i] & 0xFF);
            } else {
                row[i] = static_cast<unsigned char>(src[i]);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

PngRaster decode_png(std::span<const unsigned char> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG stream");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, on_png_error, on_png_warning);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    PngRaster raster;
    std::vector<unsigned char> row;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed: " + error);
    }
    png_set_read_fn(png, &cursor, read_bytes);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    raster.width = static_cast<int>(png_get_image_width(png, info));
    raster.height = static_cast<int>(png_get_image_height(png, info));
    raster.channels = png_get_channels(png, info);
    depth = png_get_bit_depth(png, info);
    raster.bit_depth = depth == 16 ? 16 : 8;
    if (raster.channels != 1 && raster.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG channel layout");
    }

    const std::size_t row_samples = static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.channels);
    row.resize(png_get_rowbytes(png, info));
    raster.samples.resize(row_samples * static_cast<std::size_t>(raster.height));
    for (int y = 0; y < raster.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        std::uint16_t* dst = raster.samples.data() + static_cast<std::size_t>(y) * row_samples;
        for (std::size_t i = 0; i < row_samples; ++i) {
            dst[i] = raster.bit_depth == 16 ? static_cast<std::uint16_t>(row[2 * i] << 8 | row[2 * i + 1]) : row[i];
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raster;
}

std::vector<unsigned char> encode_image_png(const Image& image) {
    PngRaster raster{image.height(), image.width(), 3, 8, {}};
    raster.samples.reserve(image.size());
    for (float v : image.data()) raster.samples.push_back(quantize8(v));
    return encode_png(raster);
}

std::vector<unsigned char> encode_mask_png(const AlphaMask& mask) {
    PngRaster raster{mask.height(), mask.width(), 1, 8, {}};
    raster.samples.reserve(mask.size());
    for (float v : mask.data()) raster.samples.push_back(quantize8(v));
    return encode_png(raster);
}

Image decode_image_png(std::span<const unsigned char> bytes) {
    const PngRaster raster = decode_png(bytes);
    Image out(raster.height, raster.width);
    const float scale = raster.bit_depth == 16 ? 65535.0f : 255.0f;
    auto dst = out.data();
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t src = raster.channels == 3 ? p * 3 + c : p;
            dst[p * 3 + c] = static_cast<float>(raster.samples[src]) / scale;
        }
    }
    return out;
}

AlphaMask decode_mask_png(std::span<const unsigned char> bytes) {
    const PngRaster raster = decode_png(bytes);
    if (raster.channels != 1) throw IoError("alpha PNG must be single-channel");
    AlphaMask out(raster.height, raster.width);
    const float scale = raster.bit_depth == 16 ? 65535.0f : 255.0f;
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(raster.samples[i]) / scale;
    return out;
}

std::uint16_t encode_shadow_value(float s) {
    const double v = (std::clamp(static_cast<double>(s), -1.0, 1.0) + 1.0) / 2.0 * 65535.0;
    return static_cast<std::uint16_t>(std::lround(v));
}

float decode_shadow_value(std::uint16_t code) {
    return static_cast<float>(static_cast<double>(code) / 65535.0 * 2.0 - 1.0);
}

std::vector<unsigned char> encode_shadow_png(const ShadowResidual& shadow) {
    PngRaster raster{shadow.height(), shadow.width(), 3, 16, {}};
    raster.samples.reserve(shadow.size());
    for (float v : shadow.data()) raster.samples.push_back(encode_shadow_value(v));
    return encode_png(raster);
}

ShadowResidual decode_shadow_png(std::span<const unsigned char> bytes) {
    const PngRaster raster = decode_png(bytes);
    if (raster.channels != 3 || raster.bit_depth != 16) throw IoError("shadow PNG must be 16-bit RGB");
    ShadowResidual out(raster.height, raster.width);
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = decode_shadow_value(raster.samples[i]);
    return out;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

Image read_image_png(const std::filesystem::path& path) { return decode_image_png(read_file(path)); }

void write_image_png(const std::filesystem::path& path, const Image& image) {
    write_file(path, encode_image_png(image));
}

std::string base64_encode(std::span<const unsigned char> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw IoError("base64 input length is not a multiple of 4");
    std::vector<unsigned char> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw IoError("invalid base64 input");
    // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

}  // namespace layerforge
