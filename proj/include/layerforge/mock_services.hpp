#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "layerforge/mock_scene.hpp"
#include "layerforge/services.hpp"

namespace layerforge {

/// Every state and isolated object of one scene, rendered once and shared by
/// the mocks (read-only, so safe across threads).
class SceneStates {
public:
    explicit SceneStates(SceneSpec spec);

    const SceneSpec& spec() const { return spec_; }
    std::size_t object_count() const { return spec_.objects.size(); }
    const Image& state(std::size_t removed) const { return states_.at(removed); }
    const Image& on_white(std::size_t k) const { return on_white_.at(k); }
    const AlphaMask& alpha(std::size_t k) const { return alphas_.at(k); }

    /// Index m of the state render_state(spec, m) nearest to `image` (mean
    /// absolute difference; ties go to the lower index).
    std::size_t closest_state(const Image& image) const;
    /// Object whose white composite is nearest to `image`.
    std::size_t closest_object(const Image& image) const;

private:
    SceneSpec spec_;
    std::vector<Image> states_;
    std::vector<Image> on_white_;
    std::vector<AlphaMask> alphas_;
};

/// Recognizes the scene state it is shown and names the frontmost remaining
/// object. Descriptions and instructions carry an "[object:k]" tag that the
/// mock editor reads back.
class MockAgent : public AgentService {
public:
    explicit MockAgent(std::shared_ptr<const SceneStates> states) : states_(std::move(states)) {}
    ForegroundDetection detect_foreground(const Image& image) override;
    std::string removal_instruction(const Image& image, const std::string& description) override;
    std::string background_removal_instruction(const Image& image, const std::string& description) override;

private:
    std::shared_ptr<const SceneStates> states_;
};

/// "Remove ... [object:k]" yields the scene without objects 0..k;
/// "Keep only ... [object:k]" yields object k over white. Anything else comes
/// back unchanged.
class MockEditor : public EditorService {
public:
    explicit MockEditor(std::shared_ptr<const SceneStates> states) : states_(std::move(states)) {}
    Image apply(const Image& image, const std::string& instruction) override;

private:
    std::shared_ptr<const SceneStates> states_;
};

enum class MaskVariant { exact, eroded, dilated, blurred };

/// Returns the true matte of the object shown, perturbed per variant by one
/// pixel of erosion/dilation or a sigma-1 blur.
class MockSegmenter : public SegmenterService {
public:
    MockSegmenter(std::shared_ptr<const SceneStates> states, MaskVariant variant);
    AlphaMask segment(const Image& image) override;
    std::string id() const override { return id_; }

private:
    std::shared_ptr<const SceneStates> states_;
    MaskVariant variant_;
    std::string id_;
};

/// Always returns the same matte.
class FixedSegmenter : public SegmenterService {
public:
    FixedSegmenter(AlphaMask mask, std::string id) : mask_(std::move(mask)), id_(std::move(id)) {}
    AlphaMask segment(const Image&) override { return mask_; }
    std::string id() const override { return id_; }

private:
    AlphaMask mask_;
    std::string id_;
};

struct MockVerifierConfig {
    double min_coverage = 0.005;  // per layer, fraction of the frame
    double max_coverage = 0.90;
    double support_threshold = 0.01;  // alpha above this counts as foreground support
    double max_residual = 0.01;       // mean |source - render| outside all supports
};

/// Rule-based stand-in for the model verifier.
class MockVerifier : public VerifierService {
public:
    explicit MockVerifier(MockVerifierConfig config = {}) : config_(config) {}
    Verdict verify(const Image& rendered, const LayeredSample& sample) override;

private:
    MockVerifierConfig config_;
};

class AcceptAllVerifier : public VerifierService {
public:
    Verdict verify(const Image&, const LayeredSample&) override { return {true, {}}; }
};

/// Chroma thumbnail: per-cell means of (R - G, G - B) on a grid x grid
/// layout plus one constant component. Neutral (white or grey) regions carry
/// no signal, so two renders agree only where the same coloured content sits
/// in the same place.
EmbeddingProvider chroma_embedder(int grid = 16);

class MockEmbedder : public EmbedderService {
public:
    explicit MockEmbedder(int grid = 16) : provider_(chroma_embedder(grid)) {}
    EmbeddingVector embed(const Image& image) override { return provider_(image); }

private:
    EmbeddingProvider provider_;
};

/// Agent, editor, three segmenters (exact, eroded, dilated), embedder and
/// rule verifier for one scene.
ServiceBundle make_mock_bundle(const SceneSpec& spec, const MockVerifierConfig& verifier = {});

}  // namespace layerforge
