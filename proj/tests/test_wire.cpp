#include "doctest.h"

#include <random>

#include "generators.hpp"
#include "layerforge/compose.hpp"
#include "layerforge/png_io.hpp"
#include "layerforge/wire.hpp"

using namespace layerforge;

TEST_CASE("image and mask codecs") {
    std::mt19937_64 rng(91);
    const Image img = decode_image_png(encode_image_png(oracle::random_image(rng, 5, 6)));
    CHECK(wire::decode_image(wire::encode_image(img)) == img);
    const AlphaMask m = decode_mask_png(encode_mask_png(oracle::random_mask(rng, 5, 6)));
    CHECK(wire::decode_mask(wire::encode_mask(m)) == m);
    CHECK_THROWS(wire::decode_image("not base64!"));
}

TEST_CASE("sample codec keeps structure and shadow sign") {
    std::mt19937_64 rng(92);
    LayeredSample s = gen::random_sample(rng, 6, 7, 3);
    s.shadow = shadow_residual(s.source, composite(s.background, s.layers));
    const LayeredSample back = wire::decode_sample(wire::encode_sample(s));
    REQUIRE(back.layers.size() == 3);
    CHECK(back.layers[2].order_index == 3);
    CHECK(max_abs_difference(back.layers[1].alpha.data(), s.layers[1].alpha.data()) <= 1.0f / 255.0f);
    REQUIRE(back.shadow.has_value());
    CHECK(max_abs_difference(back.shadow->data(), s.shadow->data()) <= 1.0f / 65535.0f);

    s.shadow.reset();
    const auto j = wire::encode_sample(s);
    CHECK(j["shadow"].is_null());
    CHECK_FALSE(wire::decode_sample(j).shadow.has_value());
}

TEST_CASE("envelopes") {
    const auto req = wire::make_request("r/1", 42, {{"x", 1}});
    CHECK(req["request_id"] == "r/1");
    CHECK(req["seed"] == 42);
    CHECK(req["payload"]["x"] == 1);
    CHECK(wire::make_ok({{"a", true}})["status"] == "ok");
    const auto err = wire::make_error(wire::kUnavailable, "down");
    CHECK(err["status"] == "error");
    CHECK(err["error"]["code"] == "unavailable");
    CHECK(err["error"]["message"] == "down");
}
