#include "layerforge/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "layerforge/compose.hpp"
#include "layerforge/resample.hpp"

namespace layerforge {

namespace fs = std::filesystem;

std::vector<AspectBin> default_aspect_bins() {
    return {{"1:2", 1.0 / 2.0}, {"9:16", 9.0 / 16.0}, {"3:4", 3.0 / 4.0}, {"1:1", 1.0},
            {"4:3", 4.0 / 3.0}, {"16:9", 16.0 / 9.0}, {"2:1", 2.0}};
}

std::string aspect_bin_for_ratio(double ratio, const std::vector<AspectBin>& bins) {
    if (bins.empty()) throw std::invalid_argument("aspect_bin_for_ratio: empty bin set");
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw std::invalid_argument("aspect ratio must be positive");
    const double lr = std::log(ratio);
    const AspectBin* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& bin : bins) {
        const double d = std::abs(lr - std::log(bin.ratio));
        // Distances equal up to rounding count as a tie.
        const double slack = 1e-12 * std::max(1.0, std::abs(d));
        if (d < best_dist - slack) {
            best = &bin;
            best_dist = d;
        } else if (std::abs(d - best_dist) <= slack && bin.ratio < best->ratio) {
            best = &bin;
        }
    }
    return best->label;
}

void to_json(nlohmann::json& j, const SampleManifest& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers) {
        layers.push_back({{"rgb_path", l.rgb_path}, {"alpha_path", l.alpha_path}, {"order_index", l.order_index}});
    }
    j = nlohmann::json{{"schema_version", m.schema_version},
                       {"sample_id", m.sample_id},
                       {"height", m.height},
                       {"width", m.width},
                       {"source_path", m.source_path},
                       {"background_path", m.background_path},
                       {"layers", layers},
                       {"shadow_path", m.shadow_path ? nlohmann::json(*m.shadow_path) : nlohmann::json(nullptr)},
                       {"provenance", m.provenance},
                       {"bucket_key", {{"aspect_bin", m.bucket_key.aspect_bin}, {"layer_count", m.bucket_key.layer_count}}}};
}

void from_json(const nlohmann::json& j, SampleManifest& m) {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
        throw SchemaError("unrecognized manifest schema_version " + std::to_string(m.schema_version));
    }
    m.sample_id = j.at("sample_id").get<std::string>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.source_path = j.at("source_path").get<std::string>();
    m.background_path = j.at("background_path").get<std::string>();
    m.layers.clear();
    for (const auto& l : j.at("layers")) {
        m.layers.push_back({l.at("rgb_path").get<std::string>(), l.at("alpha_path").get<std::string>(),
                            l.at("order_index").get<int>()});
    }
    m.shadow_path.reset();
    if (j.contains("shadow_path") && !j["shadow_path"].is_null()) m.shadow_path = j["shadow_path"].get<std::string>();
    m.provenance = j.value("provenance", nlohmann::json::object());
    const auto& key = j.at("bucket_key");
    m.bucket_key = {key.at("aspect_bin").get<std::string>(), key.at("layer_count").get<int>()};
}

BucketKey bucket_key_for(int height, int width, int layer_count, const std::vector<AspectBin>& bins) {
    return {aspect_bin_for_ratio(static_cast<double>(width) / static_cast<double>(height), bins), layer_count};
}

SampleManifest write_sample(const LayeredSample& sample, const fs::path& dir, const nlohmann::json& provenance,
                            const WriteOptions& options) {
    validate_sample(sample);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    // Any previous commit is retracted first so a failure below never leaves
    // a manifest describing a mix of old and new files.
    fs::remove(dir / kManifestFile, ec);

    SampleManifest m;
    m.sample_id = dir.filename().string();
    m.height = sample.source.height();
    m.width = sample.source.width();
    m.provenance = provenance;
    m.bucket_key = bucket_key_for(m.height, m.width, static_cast<int>(sample.layers.size()), options.bins);
    m.directory = dir;

    auto emit = [&](const std::string& name, const std::vector<unsigned char>& bytes) {
        if (options.before_write) options.before_write(name);
        write_file(dir / name, bytes);
        return name;
    };

    m.source_path = emit("source.png", encode_image_png(sample.source));
    m.background_path = emit("background.png", encode_image_png(sample.background));
    for (const auto& layer : sample.layers) {
        const std::string stem = "layer_" + std::to_string(layer.order_index);
        LayerEntry entry;
        entry.rgb_path = emit(stem + "_rgb.png", encode_image_png(layer.rgb));
        entry.alpha_path = emit(stem + "_alpha.png", encode_mask_png(layer.alpha));
        entry.order_index = layer.order_index;
        m.layers.push_back(entry);
    }
    if (sample.shadow) m.shadow_path = emit("shadow.png", encode_shadow_png(*sample.shadow));

    const std::string text = nlohmann::json(m).dump(2) + "\n";
    const fs::path tmp = dir / (std::string(kManifestFile) + ".tmp");
    if (options.before_write) options.before_write(kManifestFile);
    write_file(tmp, text);
    fs::rename(tmp, dir / kManifestFile, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot commit manifest in " + dir.string() + ": " + ec.message());
    }
    return m;
}

SampleManifest load_manifest(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) throw MissingFileError("missing manifest " + manifest_path.string());
    nlohmann::json j;
    try {
        const auto bytes = read_file(manifest_path);
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    SampleManifest m;
    try {
        m = j.get<SampleManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("manifest " + manifest_path.string() + " does not match the schema: " + e.what());
    }
    m.directory = manifest_path.parent_path();
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        if (m.layers[k].order_index != static_cast<int>(k) + 1) {
            throw InvariantError("manifest " + manifest_path.string() + ": layer order indices not contiguous from 1");
        }
    }
    return m;
}

namespace {

std::vector<unsigned char> read_member(const SampleManifest& m, const std::string& name) {
    const fs::path path = m.directory / name;
    if (!fs::exists(path)) throw MissingFileError("sample " + m.sample_id + ": missing file " + path.string());
    return read_file(path);
}

template <typename Buffer>
void check_dims(const SampleManifest& m, const Buffer& b, const std::string& what) {
    if (b.height() != m.height || b.width() != m.width) {
        throw InvariantError("sample " + m.sample_id + ": " + what + " is " + std::to_string(b.height()) + "x" +
                             std::to_string(b.width()) + ", manifest says " + std::to_string(m.height) + "x" +
                             std::to_string(m.width));
    }
}

}  // namespace

LayeredSample read_sample(const fs::path& manifest_path) {
    const SampleManifest m = load_manifest(manifest_path);
    LayeredSample sample;
    try {
        sample.source = decode_image_png(read_member(m, m.source_path));
        check_dims(m, sample.source, "source");
        sample.background = decode_image_png(read_member(m, m.background_path));
        check_dims(m, sample.background, "background");
        for (const auto& entry : m.layers) {
            ForegroundLayer layer;
            layer.rgb = decode_image_png(read_member(m, entry.rgb_path));
            check_dims(m, layer.rgb, entry.rgb_path);
            layer.alpha = decode_mask_png(read_member(m, entry.alpha_path));
            check_dims(m, layer.alpha, entry.alpha_path);
            layer.order_index = entry.order_index;
            sample.layers.push_back(std::move(layer));
        }
        if (m.shadow_path) {
            sample.shadow = decode_shadow_png(read_member(m, *m.shadow_path));
            check_dims(m, *sample.shadow, *m.shadow_path);
        }
    } catch (const IoError& e) {
        throw InvariantError("sample " + m.sample_id + ": undecodable member: " + e.what());
    }

    if (sample.shadow) {
        const Image recomposed = composite(sample.background, sample.layers);
        const Image restored = recompose(recomposed, *sample.shadow);
        const auto a = restored.data();
        const auto b = sample.source.data();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (std::abs(a[i] - b[i]) > kStoredRoundTripTolerance) {
                const std::size_t px = i / 3;
                throw InvariantError("sample " + m.sample_id + ": recomposition differs from source by " +
                                     std::to_string(std::abs(a[i] - b[i])) + " at (y=" +
                                     std::to_string(px / static_cast<std::size_t>(m.width)) + ", x=" +
                                     std::to_string(px % static_cast<std::size_t>(m.width)) + ", c=" +
                                     std::to_string(i % 3) + ")");
            }
        }
    }
    return sample;
}

std::vector<SampleManifest> list_samples(const fs::path& root) {
    std::vector<SampleManifest> out;
    if (!fs::is_directory(root)) return out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const fs::path manifest = entry.path() / kManifestFile;
        if (!fs::exists(manifest)) continue;
        try {
            out.push_back(load_manifest(manifest));
        } catch (const DatasetError&) {
            // Not a committed sample.
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
    return out;
}

Image resize_within(const Image& image, int max_side) {
    if (max_side < 1) throw std::invalid_argument("resize_within: max_side must be >= 1");
    const int longest = std::max(image.height(), image.width());
    if (longest <= max_side) return image;
    const double scale = static_cast<double>(max_side) / static_cast<double>(longest);
    const int h = std::clamp(static_cast<int>(std::lround(image.height() * scale)), 1, max_side);
    const int w = std::clamp(static_cast<int>(std::lround(image.width() * scale)), 1, max_side);
    return resample_bilinear(image, h, w);
}

std::map<BucketKey, std::vector<SampleManifest>> bucketize(const std::vector<SampleManifest>& manifests,
                                                           const std::vector<AspectBin>& bins) {
    std::map<BucketKey, std::vector<SampleManifest>> out;
    for (const auto& m : manifests) {
        out[bucket_key_for(m.height, m.width, static_cast<int>(m.layers.size()), bins)].push_back(m);
    }
    return out;
}

}  // namespace layerforge
