#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "generators.hpp"
#include "layerforge/compose.hpp"
#include "layerforge/dataset_io.hpp"
#include "layerforge/png_io.hpp"

using namespace layerforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("layerforge-" + name + "-" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

LayeredSample sample_with_shadow(std::mt19937_64& rng, int h, int w, int k) {
    LayeredSample s = gen::random_sample(rng, h, w, k);
    s.shadow = shadow_residual(s.source, composite(s.background, s.layers));
    return s;
}

}  // namespace

TEST_CASE("write then read stays within quantization") {
    TempDir tmp("rt");
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 5; ++trial) {
        const LayeredSample s = sample_with_shadow(rng, 9 + trial, 13, 1 + trial);
        const fs::path dir = tmp.path / ("s" + std::to_string(trial));
        const SampleManifest m = write_sample(s, dir, {{"seed", trial}});
        CHECK(m.sample_id == "s" + std::to_string(trial));
        CHECK(m.bucket_key.layer_count == 1 + trial);
        CHECK(fs::exists(dir / "manifest.json"));
        CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));

        const LayeredSample r = read_sample(dir / "manifest.json");
        CHECK(max_abs_difference(r.source.data(), s.source.data()) <= 1.0f / 255.0f);
        CHECK(max_abs_difference(r.background.data(), s.background.data()) <= 1.0f / 255.0f);
        REQUIRE(r.layers.size() == s.layers.size());
        for (std::size_t k = 0; k < r.layers.size(); ++k) {
            CHECK(r.layers[k].order_index == static_cast<int>(k) + 1);
            CHECK(max_abs_difference(r.layers[k].rgb.data(), s.layers[k].rgb.data()) <= 1.0f / 255.0f);
            CHECK(max_abs_difference(r.layers[k].alpha.data(), s.layers[k].alpha.data()) <= 1.0f / 255.0f);
        }
        CHECK(max_abs_difference(r.shadow->data(), s.shadow->data()) <= 1.0f / 65535.0f);
        CHECK(load_manifest(dir / "manifest.json").provenance["seed"] == trial);
    }
}

TEST_CASE("a zero shadow is stored at the offset midpoint") {
    TempDir tmp("zero");
    LayeredSample s;
    s.source = Image(4, 4, 0.5f);
    s.background = s.source;
    s.layers.push_back({Image(4, 4, 0.2f), AlphaMask(4, 4), 1});
    s.shadow = ShadowResidual(4, 4);
    write_sample(s, tmp.path / "z");
    const PngRaster raw = decode_png(read_file(tmp.path / "z" / "shadow.png"));
    for (auto code : raw.samples) CHECK(std::abs(static_cast<int>(code) - 32768) <= 1);
}

TEST_CASE("manifests without shadow load without one") {
    TempDir tmp("noshadow");
    std::mt19937_64 rng(72);
    const LayeredSample s = gen::random_sample(rng, 6, 6, 2);
    const SampleManifest m = write_sample(s, tmp.path / "n");
    CHECK_FALSE(m.shadow_path.has_value());
    CHECK_FALSE(read_sample(tmp.path / "n" / "manifest.json").shadow.has_value());
}

TEST_CASE("interrupted writes never leave a readable sample") {
    TempDir tmp("crash");
    std::mt19937_64 rng(73);
    const LayeredSample s = sample_with_shadow(rng, 8, 8, 3);
    const std::vector<std::string> files{"source.png",      "background.png",    "layer_1_rgb.png",
                                         "layer_1_alpha.png", "layer_3_alpha.png", "shadow.png",
                                         "manifest.json"};
    for (const auto& victim : files) {
        const fs::path dir = tmp.path / "victim";
        // A committed older sample first, then an overwrite that dies.
        write_sample(s, dir);
        WriteOptions opts;
        opts.before_write = [&](std::string_view name) {
            if (name == victim) throw IoError("simulated crash before " + std::string(name));
        };
        CHECK_THROWS_AS(write_sample(s, dir, {}, opts), IoError);
        CHECK_FALSE(fs::exists(dir / "manifest.json"));
        CHECK(list_samples(tmp.path).empty());
        CHECK_THROWS_AS(read_sample(dir / "manifest.json"), MissingFileError);
        fs::remove_all(dir);
    }
}

TEST_CASE("read errors are typed") {
    TempDir tmp("errors");
    std::mt19937_64 rng(74);
    const LayeredSample s = sample_with_shadow(rng, 8, 8, 2);
    const fs::path dir = tmp.path / "e";
    write_sample(s, dir);
    const fs::path manifest = dir / "manifest.json";

    SUBCASE("unknown schema version") {
        auto j = nlohmann::json::parse(std::ifstream(manifest));
        j["schema_version"] = 99;
        std::ofstream(manifest) << j.dump();
        CHECK_THROWS_AS(read_sample(manifest), SchemaError);
    }
    SUBCASE("malformed json") {
        std::ofstream(manifest) << "{ not json";
        CHECK_THROWS_AS(read_sample(manifest), SchemaError);
    }
    SUBCASE("missing member") {
        fs::remove(dir / "layer_2_rgb.png");
        CHECK_THROWS_AS(read_sample(manifest), MissingFileError);
    }
    SUBCASE("corrupted alpha breaks the recomposition check") {
        AlphaMask a = s.layers[0].alpha;
        for (auto& v : a.data()) v = 1.0f - v;
        write_file(dir / "layer_1_alpha.png", encode_mask_png(a));
        CHECK_THROWS_AS(read_sample(manifest), InvariantError);
    }
    SUBCASE("wrong member size") {
        write_file(dir / "background.png", encode_image_png(Image(3, 3)));
        CHECK_THROWS_AS(read_sample(manifest), InvariantError);
    }
    SUBCASE("non-contiguous order") {
        auto j = nlohmann::json::parse(std::ifstream(manifest));
        j["layers"][1]["order_index"] = 5;
        std::ofstream(manifest) << j.dump();
        CHECK_THROWS_AS(read_sample(manifest), InvariantError);
    }
}

TEST_CASE("resize_within") {
    // height x width
    CHECK(resize_within(Image(600, 800)).width() == 800);
    CHECK(resize_within(Image(800, 600)).height() == 800);
    const Image a = resize_within(Image(1024, 2048));
    CHECK(a.height() == 512);
    CHECK(a.width() == 1024);
    const Image b = resize_within(Image(1000, 1500));
    CHECK(b.height() == 683);  // 1000 * 1024 / 1500 = 682.67
    CHECK(b.width() == 1024);
    const Image c = resize_within(Image(3, 4), 2);  // 1.5 rounds up
    CHECK(c.height() == 2);
    CHECK(c.width() == 2);
    const Image tiny = resize_within(Image(5, 5, 0.3f), 64);
    CHECK(tiny == Image(5, 5, 0.3f));
    CHECK_THROWS(resize_within(tiny, 0));
}

TEST_CASE("aspect bins and the tie rule") {
    CHECK(aspect_bin_for_ratio(1.0) == "1:1");
    CHECK(aspect_bin_for_ratio(1.7) == "16:9");
    CHECK(aspect_bin_for_ratio(10.0) == "2:1");
    CHECK(aspect_bin_for_ratio(0.01) == "1:2");
    // Geometric midpoints of neighbouring bins go to the lower ratio.
    const auto bins = default_aspect_bins();
    for (std::size_t i = 0; i + 1 < bins.size(); ++i) {
        const double mid = std::sqrt(bins[i].ratio * bins[i + 1].ratio);
        CHECK(aspect_bin_for_ratio(mid) == bins[i].label);
        CHECK(aspect_bin_for_ratio(mid * 1.001) == bins[i + 1].label);
    }
    CHECK_THROWS(aspect_bin_for_ratio(0.0));
    CHECK_THROWS(aspect_bin_for_ratio(1.0, {}));
}

TEST_CASE("bucketize is a partition") {
    std::vector<SampleManifest> square;
    for (int i = 0; i < 4; ++i) {
        SampleManifest m;
        m.sample_id = "sq" + std::to_string(i);
        m.height = m.width = 64;
        m.layers.resize(2);
        square.push_back(m);
    }
    const auto one = bucketize(square);
    REQUIRE(one.size() == 1);
    CHECK(one.begin()->first == BucketKey{"1:1", 2});

    std::mt19937_64 rng(75);
    std::vector<SampleManifest> mixed;
    for (int i = 0; i < 200; ++i) {
        SampleManifest m;
        m.sample_id = "m" + std::to_string(i);
        m.height = 16 + static_cast<int>(rng() % 2000);
        m.width = 16 + static_cast<int>(rng() % 2000);
        m.layers.resize(1 + rng() % 5);
        mixed.push_back(m);
    }
    std::size_t total = 0;
    std::set<std::string> seen;
    for (const auto& [key, members] : bucketize(mixed)) {
        total += members.size();
        for (const auto& m : members) {
            CHECK(seen.insert(m.sample_id).second);
            CHECK(key.layer_count == static_cast<int>(m.layers.size()));
        }
    }
    CHECK(total == mixed.size());
}

TEST_CASE("list_samples ignores uncommitted directories") {
    TempDir tmp("list");
    std::mt19937_64 rng(76);
    write_sample(gen::random_sample(rng, 4, 4, 1), tmp.path / "b");
    write_sample(gen::random_sample(rng, 4, 4, 1), tmp.path / "a");
    fs::create_directories(tmp.path / "c");
    std::ofstream(tmp.path / "c" / "source.png") << "partial";
    const auto all = list_samples(tmp.path);
    REQUIRE(all.size() == 2);
    CHECK(all[0].sample_id == "a");
    CHECK(all[1].sample_id == "b");
    CHECK(list_samples(tmp.path / "nope").empty());
}
