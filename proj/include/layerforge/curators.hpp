#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"
#include "layerforge/mask_fusion.hpp"
#include "layerforge/selector.hpp"
#include "layerforge/services.hpp"

namespace layerforge {

struct BicResult {
    std::vector<Image> backgrounds;        // B_1..B_n
    std::vector<Image> step_inputs;        // the image each step worked on (I_0..I_{n-1})
    std::vector<std::string> descriptions;  // foreground named at each step
    std::vector<std::string> instructions;  // removal instruction sent at each step
    std::vector<std::string> warnings;
};

/// Repeatedly asks the agent for a foreground and has the editor remove it.
/// Stops when nothing is detected, when the editor makes no change (warning)
/// or after max_steps (warning). Service failures propagate.
BicResult curate_backgrounds(const Image& image, AgentService& agent, EditorService& editor, int max_steps = 5);

struct FicLayer {
    std::size_t step = 0;
    ForegroundLayer layer;  // order_index = step + 1
    std::string instruction;
    std::vector<std::string> expert_ids;
};

struct FicResult {
    std::vector<FicLayer> layers;
    std::vector<std::string> failures;  // "step <k>: <reason>"
};

/// One RGBA layer per BIC step: the editor isolates the step's foreground on
/// white, every segmenter proposes a matte (concurrently), the mattes are
/// fused. A failing step is recorded and skipped.
FicResult curate_foregrounds(const std::vector<Image>& step_inputs, const std::vector<std::string>& descriptions,
                             AgentService& agent, EditorService& editor,
                             const std::vector<std::shared_ptr<SegmenterService>>& segmenters,
                             const FusionConfig& fusion = {});

enum class ProposalStatus { accepted, rejected, pending };

std::string to_string(ProposalStatus status);

struct ProposalRecord {
    Proposal proposal;  // indices into the caller's (undeduplicated) pools
    ProposalStatus status = ProposalStatus::pending;
    std::vector<std::string> reasons;
    std::optional<std::size_t> sample_index;  // into LicResult::samples when accepted
};

struct LicResult {
    std::vector<std::size_t> kept_backgrounds;
    std::vector<std::size_t> kept_foregrounds;
    std::vector<ProposalRecord> records;
    std::vector<LayeredSample> samples;
};

/// Deduplicates both pools, selects proposals, renders and verifies each.
/// Accepted proposals become samples with shadow = source - render. A
/// verifier ServiceError marks the proposal pending.
LicResult curate_layered(const Image& image, const std::vector<Image>& backgrounds,
                         const std::vector<ForegroundLayer>& foregrounds, const EmbeddingProvider& provider,
                         const SelectorConfig& config, VerifierService& verifier);

/// Image a proposal composes against: the input or one of the backgrounds.
const Image& proposal_source(const Proposal& proposal, const Image& image, const std::vector<Image>& backgrounds);

}  // namespace layerforge
