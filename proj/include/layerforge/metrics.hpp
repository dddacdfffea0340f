#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"

namespace layerforge {

/// sum(min(a, b)) / sum(max(a, b)); 1.0 when both mattes are all zero.
double alpha_soft_iou(const AlphaMask& a, const AlphaMask& b);

enum class RgbL1Mode {
    on_white,        // |M(a_p, rgb_p) - M(a_g, rgb_g)| over all pixels/channels
    alpha_weighted,  // |rgb_p - rgb_g| weighted by max(a_p, a_g)
};

double rgb_l1(const ForegroundLayer& pred, const ForegroundLayer& gt, RgbL1Mode mode = RgbL1Mode::on_white);

/// Mean absolute difference of two opaque images.
double image_l1(const Image& a, const Image& b);

struct MatchedPair {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double iou = 0.0;
    bool operator==(const MatchedPair&) const = default;
};

struct LayerMatching {
    std::vector<MatchedPair> pairs;  // sorted by gt_index
    std::vector<std::size_t> unmatched_pred;
    std::vector<std::size_t> unmatched_gt;

    double total_score() const;
};

/// Assignment maximizing the summed score; rows/cols may differ in count.
/// Each returns, per row, the assigned column or -1.
std::vector<int> exhaustive_assignment(const std::vector<std::vector<double>>& score);
std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& score);

/// One-to-one matching maximizing total soft IoU. Exhaustive up to 6 layers
/// per side, Hungarian beyond.
LayerMatching match_layers(std::span<const ForegroundLayer> pred, std::span<const ForegroundLayer> gt);

struct EvalConfig {
    RgbL1Mode rgb_mode = RgbL1Mode::on_white;
    bool edit_background = false;  // allow an edit to replace the background
};

struct EditMetrics {
    double rgb_l1 = 0.0;
    double alpha_soft_iou = 0.0;
};

/// Metrics after 0..max_edits greedy edits. An edit replaces a matched
/// prediction with its ground truth or inserts a missing ground-truth layer,
/// choosing the largest soft-IoU gain first (RGB gain, then index, break
/// ties). Means run over the ground-truth layers plus the background pair.
std::vector<EditMetrics> evaluate_edit_curve(const LayeredSample& pred, const LayeredSample& gt, int max_edits,
                                             const EvalConfig& config = {});

EditMetrics evaluate_with_edits(const LayeredSample& pred, const LayeredSample& gt, int max_edits,
                                const EvalConfig& config = {});

struct SampleEval {
    std::string sample_id;
    std::vector<EditMetrics> by_edits;  // index = e
};

struct EvalReport {
    int max_edits = 0;
    std::vector<SampleEval> samples;
    std::vector<EditMetrics> aggregate;  // arithmetic mean per e
    std::vector<std::string> failures;   // "<id>: <reason>", excluded from aggregates
};

struct EvalPair {
    std::string sample_id;
    std::filesystem::path pred_manifest;
    std::filesystem::path gt_manifest;
};

EvalReport evaluate_dataset(const std::vector<EvalPair>& pairs, int max_edits, const EvalConfig& config = {});

nlohmann::json to_json(const EvalReport& report);

/// Aligned text table in the layout of the usual layer-decomposition metric
/// tables: one block of columns per metric, one column per max-edits value.
std::string format_table(const EvalReport& report, const std::string& row_label = "prediction");

}  // namespace layerforge
