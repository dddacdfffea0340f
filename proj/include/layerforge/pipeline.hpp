#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/dataset_io.hpp"
#include "layerforge/degradation.hpp"
#include "layerforge/mask_fusion.hpp"
#include "layerforge/selector.hpp"
#include "layerforge/services.hpp"

namespace layerforge {

struct PipelineConfig {
    SelectorConfig selector;
    DegradationRanges degradation;
    FusionConfig fusion;
    int max_steps = 5;
    std::uint64_t seed = 0;
    int workers = 1;
    int max_side = 1024;
};

struct ImageOutcome {
    std::string image_id;
    bool ok = false;
    nlohmann::json error;  // null when ok
    std::vector<SampleManifest> manifests;
    nlohmann::json audit;
};

/// Services for one image job. Called once per image, possibly from several
/// worker threads at once.
using ServiceFactory =
    std::function<ServiceBundle(const std::string& image_id, const std::filesystem::path& image_path,
                                std::uint64_t image_seed)>;

std::uint64_t image_seed(std::uint64_t run_seed, const std::string& image_id);

/// BIC -> FIC -> LIC for one image, persisting accepted samples under
/// <out>/samples/<image_id>-NNN and the audit log at <out>/audit/<image_id>.json.
/// Never throws for per-image failures; they are reported in the outcome.
ImageOutcome run_pipeline(const std::string& image_id, const Image& image, ServiceBundle& services,
                          const PipelineConfig& config, const std::filesystem::path& out_dir);

struct BatchResult {
    std::vector<ImageOutcome> outcomes;  // sorted by image id
    std::size_t sample_count() const;
    std::size_t failure_count() const;
};

/// Every *.png directly under input_dir (sorted), processed by `workers`
/// threads. Unreadable images become failed outcomes.
BatchResult run_batch(const std::filesystem::path& input_dir, const std::filesystem::path& out_dir,
                      const PipelineConfig& config, const ServiceFactory& factory);

/// Input images of a batch: regular *.png files, sorted by name.
std::vector<std::filesystem::path> list_input_images(const std::filesystem::path& input_dir);

}  // namespace layerforge
