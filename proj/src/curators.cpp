#include "layerforge/curators.hpp"

#include <future>
#include <stdexcept>

#include "layerforge/compose.hpp"

namespace layerforge {

BicResult curate_backgrounds(const Image& image, AgentService& agent, EditorService& editor, int max_steps) {
    if (max_steps < 1) throw std::invalid_argument("curate_backgrounds: max_steps must be >= 1");
    BicResult out;
    Image current = image;
    for (int step = 0;; ++step) {
        const ForegroundDetection detection = agent.detect_foreground(current);
        if (!detection.present) break;
        if (step == max_steps) {
            out.warnings.push_back("step cap of " + std::to_string(max_steps) + " reached with a foreground left");
            break;
        }
        if (detection.description.empty()) {
            throw std::runtime_error("agent reported a foreground without a description at step " +
                                     std::to_string(step));
        }
        const std::string instruction = agent.removal_instruction(current, detection.description);
        Image next = editor.apply(current, instruction);
        require_same_dims(next, current, "editor output");
        if (next == current) {
            out.warnings.push_back("editor made no change at step " + std::to_string(step) + "; stopping");
            break;
        }
        out.step_inputs.push_back(current);
        out.descriptions.push_back(detection.description);
        out.instructions.push_back(instruction);
        out.backgrounds.push_back(next);
        current = std::move(next);
    }
    return out;
}

FicResult curate_foregrounds(const std::vector<Image>& step_inputs, const std::vector<std::string>& descriptions,
                             AgentService& agent, EditorService& editor,
                             const std::vector<std::shared_ptr<SegmenterService>>& segmenters,
                             const FusionConfig& fusion) {
    if (step_inputs.size() != descriptions.size()) {
        throw std::invalid_argument("curate_foregrounds: " + std::to_string(step_inputs.size()) + " inputs but " +
                                    std::to_string(descriptions.size()) + " descriptions");
    }
    if (segmenters.empty()) throw std::invalid_argument("curate_foregrounds: no segmenters");

    FicResult out;
    for (std::size_t step = 0; step < step_inputs.size(); ++step) {
        try {
            const Image& input = step_inputs[step];
            const std::string instruction = agent.background_removal_instruction(input, descriptions[step]);
            const Image white_bg = editor.apply(input, instruction);
            require_same_dims(white_bg, input, "isolated foreground");

            std::vector<std::future<AlphaMask>> pending;
            for (const auto& seg : segmenters) {
                pending.push_back(std::async(std::launch::async, [&seg, &white_bg] { return seg->segment(white_bg); }));
            }
            ExpertMaskSet set;
            std::string first_error;
            for (std::size_t i = 0; i < pending.size(); ++i) {
                try {
                    set.masks.push_back(pending[i].get());
                    set.expert_ids.push_back(segmenters[i]->id());
                } catch (const std::exception& e) {
                    if (first_error.empty()) first_error = segmenters[i]->id() + ": " + e.what();
                }
            }
            if (!first_error.empty()) throw std::runtime_error(first_error);

            const AlphaMask alpha = fuse_masks_resampled(set, white_bg.height(), white_bg.width(), fusion);
            out.layers.push_back({step, make_rgba(white_bg, alpha, static_cast<int>(step) + 1), instruction,
                                  set.expert_ids});
        } catch (const std::exception& e) {
            out.failures.push_back("step " + std::to_string(step) + ": " + e.what());
        }
    }
    return out;
}

std::string to_string(ProposalStatus status) {
    switch (status) {
        case ProposalStatus::accepted: return "accepted";
        case ProposalStatus::rejected: return "rejected";
        case ProposalStatus::pending: return "pending";
    }
    return "pending";
}

const Image& proposal_source(const Proposal& proposal, const Image& image, const std::vector<Image>& backgrounds) {
    if (proposal.source_ref == Proposal::kInputImage) return image;
    return backgrounds.at(static_cast<std::size_t>(proposal.source_ref));
}

LicResult curate_layered(const Image& image, const std::vector<Image>& backgrounds,
                         const std::vector<ForegroundLayer>& foregrounds, const EmbeddingProvider& provider,
                         const SelectorConfig& config, VerifierService& verifier) {
    if (backgrounds.empty() || foregrounds.empty()) {
        throw std::invalid_argument("curate_layered: background and foreground pools must be non-empty");
    }
    validate(config);

    LicResult out;
    out.kept_backgrounds = dedup(backgrounds, provider, config.tau_dup);
    std::vector<Image> fg_views;
    for (const auto& f : foregrounds) fg_views.push_back(composite_on_white(f.alpha, f.rgb));
    out.kept_foregrounds = dedup(fg_views, provider, config.tau_dup);

    std::vector<Image> bg_pool;
    for (auto i : out.kept_backgrounds) bg_pool.push_back(backgrounds[i]);
    std::vector<ForegroundLayer> fg_pool;
    for (auto i : out.kept_foregrounds) fg_pool.push_back(foregrounds[i]);

    for (const Proposal& local : select_proposals(image, bg_pool, fg_pool, provider, config)) {
        ProposalRecord record;
        record.proposal = local;
        if (local.source_ref != Proposal::kInputImage) {
            record.proposal.source_ref = static_cast<int>(out.kept_backgrounds[static_cast<std::size_t>(local.source_ref)]);
        }
        record.proposal.background_ref = out.kept_backgrounds[local.background_ref];
        for (auto& id : record.proposal.foreground_ids) id = out.kept_foregrounds[id];

        LayeredSample sample;
        sample.source = proposal_source(local, image, bg_pool);
        sample.background = bg_pool[local.background_ref];
        sample.layers = subset_layers(fg_pool, local.foreground_ids);
        const Image rendered = composite(sample.background, sample.layers);
        sample.shadow = shadow_residual(sample.source, rendered);

        try {
            const Verdict verdict = verifier.verify(rendered, sample);
            record.status = verdict.accept ? ProposalStatus::accepted : ProposalStatus::rejected;
            record.reasons = verdict.reasons;
        } catch (const ServiceError& e) {
            record.status = ProposalStatus::pending;
            record.reasons.push_back(std::string("verifier unavailable: ") + e.what());
        }

        if (record.status == ProposalStatus::accepted) {
            RecomposeDiagnostics diag;
            const Image restored = recompose(rendered, *sample.shadow, &diag);
            const float err = max_abs_difference(restored.data(), sample.source.data());
            if (err > 1e-6f || diag.clamped()) {
                record.status = ProposalStatus::rejected;
                record.reasons.push_back("recomposition error " + std::to_string(err));
            } else {
                record.sample_index = out.samples.size();
                out.samples.push_back(std::move(sample));
            }
        }
        out.records.push_back(std::move(record));
    }
    return out;
}

}  // namespace layerforge
