#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "layerforge/image.hpp"

// JSON-over-HTTP protocol shared by the tool-service clients, the loopback
// host and the mocks.
//
//   request:  {"request_id": str, "seed": u64, "payload": {...}}
//   response: {"status": "ok", "payload": {...}}
//           | {"status": "error", "error": {"code": str, "message": str}}
//
// Images travel as base64 PNG (8-bit RGB), mattes as base64 8-bit gray PNG,
// shadows as base64 16-bit offset-encoded RGB PNG.
//
//   POST <agent>/detect_foreground                {image} -> {present, description}
//   POST <agent>/removal_instruction              {image, description} -> {instruction}
//   POST <agent>/background_removal_instruction   {image, description} -> {instruction}
//   POST <editor>/apply                           {image, instruction} -> {image}
//   POST <segmenter>/segment                      {image} -> {mask}
//   POST <embedder>/embed                         {image} -> {embedding: [number]}
//   POST <verifier>/verify                        {rendered, sample} -> {accept, reasons}
//
// sample = {source, background, layers: [{rgb, alpha, order_index}], shadow | null}
namespace layerforge::wire {

inline constexpr const char* kDetectForeground = "/detect_foreground";
inline constexpr const char* kRemovalInstruction = "/removal_instruction";
inline constexpr const char* kBackgroundRemovalInstruction = "/background_removal_instruction";
inline constexpr const char* kApply = "/apply";
inline constexpr const char* kSegment = "/segment";
inline constexpr const char* kEmbed = "/embed";
inline constexpr const char* kVerify = "/verify";

// Error codes. Only "unavailable" is worth retrying.
inline constexpr const char* kUnavailable = "unavailable";
inline constexpr const char* kBadRequest = "bad_request";
inline constexpr const char* kInternal = "internal";

std::string encode_image(const Image& image);
Image decode_image(const std::string& text);
std::string encode_mask(const AlphaMask& mask);
AlphaMask decode_mask(const std::string& text);

nlohmann::json encode_sample(const LayeredSample& sample);
LayeredSample decode_sample(const nlohmann::json& j);

nlohmann::json make_request(const std::string& request_id, std::uint64_t seed, nlohmann::json payload);
nlohmann::json make_ok(nlohmann::json payload);
nlohmann::json make_error(const std::string& code, const std::string& message);

}  // namespace layerforge::wire
