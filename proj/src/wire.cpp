#include "layerforge/wire.hpp"

#include "layerforge/png_io.hpp"

namespace layerforge::wire {

std::string encode_image(const Image& image) { return base64_encode(encode_image_png(image)); }
Image decode_image(const std::string& text) { return decode_image_png(base64_decode(text)); }
std::string encode_mask(const AlphaMask& mask) { return base64_encode(encode_mask_png(mask)); }
AlphaMask decode_mask(const std::string& text) { return decode_mask_png(base64_decode(text)); }

nlohmann::json encode_sample(const LayeredSample& sample) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : sample.layers) {
        layers.push_back({{"rgb", encode_image(layer.rgb)},
                          {"alpha", encode_mask(layer.alpha)},
                          {"order_index", layer.order_index}});
    }
    return {{"source", encode_image(sample.source)},
            {"background", encode_image(sample.background)},
            {"layers", layers},
            {"shadow", sample.shadow ? nlohmann::json(base64_encode(encode_shadow_png(*sample.shadow)))
                                     : nlohmann::json(nullptr)}};
}

LayeredSample decode_sample(const nlohmann::json& j) {
    LayeredSample sample;
    sample.source = decode_image(j.at("source").get<std::string>());
    sample.background = decode_image(j.at("background").get<std::string>());
    for (const auto& l : j.at("layers")) {
        sample.layers.push_back({decode_image(l.at("rgb").get<std::string>()),
                                 decode_mask(l.at("alpha").get<std::string>()), l.at("order_index").get<int>()});
    }
    if (j.contains("shadow") && !j["shadow"].is_null()) {
        sample.shadow = decode_shadow_png(base64_decode(j["shadow"].get<std::string>()));
    }
    return sample;
}

nlohmann::json make_request(const std::string& request_id, std::uint64_t seed, nlohmann::json payload) {
    return {{"request_id", request_id}, {"seed", seed}, {"payload", std::move(payload)}};
}

nlohmann::json make_ok(nlohmann::json payload) { return {{"status", "ok"}, {"payload", std::move(payload)}}; }

nlohmann::json make_error(const std::string& code, const std::string& message) {
    return {{"status", "error"}, {"error", {{"code", code}, {"message", message}}}};
}

}  // namespace layerforge::wire
