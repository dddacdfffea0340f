#pragma once

#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"
#include "layerforge/png_io.hpp"

namespace layerforge {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class MissingFileError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class InvariantError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

struct BucketKey {
    std::string aspect_bin;  // "w:h" label
    int layer_count = 0;

    auto operator<=>(const BucketKey&) const = default;
};

struct AspectBin {
    std::string label;
    double ratio = 1.0;  // width / height
};

/// {1:2, 9:16, 3:4, 1:1, 4:3, 16:9, 2:1}.
std::vector<AspectBin> default_aspect_bins();

/// Nearest bin in log-ratio; exact ties go to the bin with the lower ratio.
std::string aspect_bin_for_ratio(double ratio, const std::vector<AspectBin>& bins = default_aspect_bins());

struct LayerEntry {
    std::string rgb_path;
    std::string alpha_path;
    int order_index = 1;
};

/// On-disk description of one sample. Paths are relative to `directory`.
struct SampleManifest {
    int schema_version = kManifestSchemaVersion;
    std::string sample_id;
    int height = 0;
    int width = 0;
    std::string source_path;
    std::string background_path;
    std::vector<LayerEntry> layers;
    std::optional<std::string> shadow_path;
    nlohmann::json provenance = nlohmann::json::object();
    BucketKey bucket_key;

    std::filesystem::path directory;  // not serialized
};

void to_json(nlohmann::json& j, const SampleManifest& manifest);
void from_json(const nlohmann::json& j, SampleManifest& manifest);

struct WriteOptions {
    // Called before each file is written with the file name; throwing from
    // it simulates an interrupted write.
    std::function<void(std::string_view)> before_write;
    std::vector<AspectBin> bins = default_aspect_bins();
};

/// Writes <dir>/{source,background,layer_k_rgb,layer_k_alpha,shadow}.png and
/// commits with manifest.json last (write-then-rename). The sample id is the
/// directory name.
SampleManifest write_sample(const LayeredSample& sample, const std::filesystem::path& dir,
                            const nlohmann::json& provenance = nlohmann::json::object(),
                            const WriteOptions& options = {});

/// Parses and checks a manifest without loading pixel data.
SampleManifest load_manifest(const std::filesystem::path& manifest_path);

/// Quantization slack for the recomposition check on load.
inline constexpr float kStoredRoundTripTolerance = 3.0f / 255.0f;

/// Loads and validates a sample. Throws SchemaError, MissingFileError or
/// InvariantError; the recomposition invariant is re-checked when a shadow is
/// present.
LayeredSample read_sample(const std::filesystem::path& manifest_path);

/// Sample directories under `root` whose manifest parses, sorted by id.
std::vector<SampleManifest> list_samples(const std::filesystem::path& root);

/// Bilinear downscale so both sides are <= max_side; never upscales. New
/// sizes round half away from zero.
Image resize_within(const Image& image, int max_side = 1024);

BucketKey bucket_key_for(int height, int width, int layer_count,
                         const std::vector<AspectBin>& bins = default_aspect_bins());

std::map<BucketKey, std::vector<SampleManifest>> bucketize(const std::vector<SampleManifest>& manifests,
                                                           const std::vector<AspectBin>& bins = default_aspect_bins());

}  // namespace layerforge
