#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "layerforge/compose.hpp"
#include "layerforge/curators.hpp"
#include "layerforge/mask_fusion.hpp"
#include "layerforge/metrics.hpp"
#include "layerforge/mock_scene.hpp"
#include "layerforge/mock_services.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace layerforge;

namespace {

class NeverAgent : public AgentService {
public:
    ForegroundDetection detect_foreground(const Image&) override { return {}; }
    std::string removal_instruction(const Image&, const std::string&) override { return {}; }
    std::string background_removal_instruction(const Image&, const std::string&) override { return {}; }
};

// Sees a foreground forever.
class AlwaysAgent : public NeverAgent {
public:
    int detections = 0;
    ForegroundDetection detect_foreground(const Image&) override {
        ++detections;
        return {true, "thing"};
    }
    std::string removal_instruction(const Image&, const std::string& d) override { return "remove " + d; }
    std::string background_removal_instruction(const Image&, const std::string& d) override { return "keep " + d; }
};

class IdentityEditor : public EditorService {
public:
    Image apply(const Image& image, const std::string&) override { return image; }
};

// Darkens a little each call so every step makes progress.
class DimmingEditor : public EditorService {
public:
    Image apply(const Image& image, const std::string&) override {
        Image out = image;
        for (auto& v : out.data()) v *= 0.9f;
        return out;
    }
};

class DownVerifier : public VerifierService {
public:
    Verdict verify(const Image&, const LayeredSample&) override { throw ServiceError("verifier", "verify", "r/0", 3, "down"); }
};

class BrokenSegmenter : public SegmenterService {
public:
    AlphaMask segment(const Image&) override { throw std::runtime_error("no mask"); }
    std::string id() const override { return "broken"; }
};

struct Curated {
    SceneSpec spec;
    ServiceBundle services;
    Image image;
    BicResult bic;
    FicResult fic;
};

Curated curate(std::uint64_t seed, int objects) {
    Curated c{random_scene(seed, "c", 40, 48, objects), {}, {}, {}, {}};
    c.services = make_mock_bundle(c.spec);
    c.image = render_state(c.spec, 0);
    c.bic = curate_backgrounds(c.image, *c.services.agent, *c.services.editor, 5);
    c.fic = curate_foregrounds(c.bic.step_inputs, c.bic.descriptions, *c.services.agent, *c.services.editor,
                               c.services.segmenters);
    return c;
}

std::vector<ForegroundLayer> layers_of(const FicResult& fic) {
    std::vector<ForegroundLayer> out;
    for (const auto& l : fic.layers) out.push_back(l.layer);
    return out;
}

}  // namespace

TEST_CASE("BIC on an empty scene produces nothing") {
    const Curated c = curate(1, 0);
    CHECK(c.bic.backgrounds.empty());
    CHECK(c.bic.warnings.empty());
    CHECK(c.fic.layers.empty());
}

TEST_CASE("BIC peels one object per step") {
    const Curated c = curate(2, 2);
    REQUIRE(c.bic.backgrounds.size() == 2);
    CHECK(c.bic.backgrounds[0] == render_state(c.spec, 1));
    CHECK(c.bic.backgrounds[1] == render_state(c.spec, 2));
    CHECK(c.bic.step_inputs[0] == c.image);
    CHECK(c.bic.step_inputs[1] == c.bic.backgrounds[0]);
    CHECK(c.bic.warnings.empty());
}

TEST_CASE("BIC stops when the editor makes no progress") {
    AlwaysAgent agent;
    IdentityEditor editor;
    const BicResult r = curate_backgrounds(Image(4, 4, 0.5f), agent, editor, 5);
    CHECK(r.backgrounds.empty());
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("no change") != std::string::npos);
}

TEST_CASE("BIC step cap") {
    AlwaysAgent agent;
    DimmingEditor editor;
    const BicResult r = curate_backgrounds(Image(4, 4, 0.5f), agent, editor, 3);
    CHECK(r.backgrounds.size() == 3);
    CHECK(agent.detections == 4);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("step cap") != std::string::npos);
    CHECK_THROWS_AS(curate_backgrounds(Image(4, 4), agent, editor, 0), std::invalid_argument);
}

TEST_CASE("FIC fuses expert mattes by mean") {
    std::mt19937_64 rng(41);
    const Image input = oracle::random_image(rng, 6, 7);
    std::vector<AlphaMask> masks;
    std::vector<std::shared_ptr<SegmenterService>> segs;
    for (int i = 0; i < 3; ++i) {
        masks.push_back(oracle::random_mask(rng, 6, 7));
        segs.push_back(std::make_shared<FixedSegmenter>(masks.back(), "fixed" + std::to_string(i)));
    }
    AlwaysAgent agent;
    DimmingEditor editor;
    const FicResult r = curate_foregrounds({input}, {"thing"}, agent, editor, segs);
    REQUIRE(r.layers.size() == 1);
    CHECK(r.failures.empty());
    const auto& layer = r.layers[0];
    CHECK(layer.layer.order_index == 1);
    CHECK(layer.instruction == "keep thing");
    CHECK(layer.expert_ids == std::vector<std::string>{"fixed0", "fixed1", "fixed2"});
    for (std::size_t i = 0; i < layer.layer.alpha.size(); ++i) {
        const double mean = (double(masks[0].data()[i]) + masks[1].data()[i] + masks[2].data()[i]) / 3.0;
        CHECK(layer.layer.alpha.data()[i] == doctest::Approx(mean).epsilon(1e-6));
    }
    Image dimmed = input;
    for (auto& v : dimmed.data()) v *= 0.9f;
    CHECK(layer.layer.rgb == dimmed);
}

TEST_CASE("FIC with one expert keeps its matte") {
    std::mt19937_64 rng(42);
    const AlphaMask m = oracle::random_mask(rng, 5, 5);
    AlwaysAgent agent;
    DimmingEditor editor;
    const FicResult r = curate_foregrounds({Image(5, 5, 0.3f)}, {"x"}, agent, editor,
                                           {std::make_shared<FixedSegmenter>(m, "only")});
    REQUIRE(r.layers.size() == 1);
    CHECK(r.layers[0].layer.alpha == m);
}

TEST_CASE("FIC records a failing step and continues") {
    AlwaysAgent agent;
    DimmingEditor editor;
    std::vector<std::shared_ptr<SegmenterService>> segs = {std::make_shared<FixedSegmenter>(AlphaMask(3, 3, 0.5f), "ok"),
                                                           std::make_shared<BrokenSegmenter>()};
    const FicResult r = curate_foregrounds({Image(3, 3), Image(3, 3)}, {"a", "b"}, agent, editor, segs);
    CHECK(r.layers.empty());
    REQUIRE(r.failures.size() == 2);
    CHECK(r.failures[0].rfind("step 0: broken", 0) == 0);
    CHECK_THROWS_AS(curate_foregrounds({Image(3, 3)}, {}, agent, editor, segs), std::invalid_argument);
    CHECK_THROWS_AS(curate_foregrounds({Image(3, 3)}, {"a"}, agent, editor, {}), std::invalid_argument);
}

TEST_CASE("mock FIC layers track the true objects") {
    const Curated c = curate(3, 3);
    REQUIRE(c.fic.layers.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const AlphaMask truth = object_alpha(c.spec, k);
        CHECK(alpha_soft_iou(c.fic.layers[k].layer.alpha, truth) > 0.7);
        CHECK(c.fic.layers[k].layer.order_index == static_cast<int>(k) + 1);
        CHECK(c.fic.layers[k].expert_ids.size() == 3);
    }
}

TEST_CASE("LIC accepts every proposal under an accept-all verifier") {
    const Curated c = curate(4, 3);
    AcceptAllVerifier verifier;
    const LicResult r = curate_layered(c.image, c.bic.backgrounds, layers_of(c.fic), c.services.embedder, {}, verifier);
    CHECK(r.samples.size() == r.records.size());
    for (const auto& rec : r.records) {
        CHECK(rec.status == ProposalStatus::accepted);
        REQUIRE(rec.sample_index.has_value());
        const LayeredSample& s = r.samples[*rec.sample_index];
        CHECK(max_abs_difference(gen::reassemble(s).data(), s.source.data()) <= 1e-5f);
        CHECK(s.background == c.bic.backgrounds[rec.proposal.background_ref]);
        CHECK(s.source == proposal_source(rec.proposal, c.image, c.bic.backgrounds));
    }
}

TEST_CASE("LIC records each selected proposal exactly once") {
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
        const Curated c = curate(seed, 1 + static_cast<int>(seed % 3));
        if (c.fic.layers.empty()) continue;
        const auto fgs = layers_of(c.fic);
        const LicResult r = curate_layered(c.image, c.bic.backgrounds, fgs, c.services.embedder, {}, *c.services.verifier);
        std::set<std::string> seen;
        std::size_t accepted = 0;
        for (const auto& rec : r.records) {
            CHECK(seen.insert(nlohmann::json(rec.proposal).dump()).second);
            CHECK(rec.status != ProposalStatus::pending);
            if (rec.status == ProposalStatus::accepted) ++accepted;
            else CHECK_FALSE(rec.reasons.empty());
            CHECK(rec.sample_index.has_value() == (rec.status == ProposalStatus::accepted));
        }
        CHECK(accepted == r.samples.size());
        CHECK(accepted >= 1);
        for (const auto& s : r.samples) {
            CHECK(max_abs_difference(gen::reassemble(s).data(), s.source.data()) <= 1e-5f);
            CHECK_NOTHROW(validate_sample(s));
        }
    }
}

TEST_CASE("mock verifier rules") {
    const SceneSpec spec = random_scene(5, "v", 32, 32, 2);
    LayeredSample truth = scene_truth(spec);
    MockVerifier verifier;
    CHECK(verifier.verify(composite(truth.background, truth.layers), truth).accept);

    LayeredSample tiny = truth;
    tiny.layers[0].alpha = AlphaMask(32, 32, 0.0f);
    tiny.layers[0].alpha.at(0, 0) = 1.0f;
    const Verdict v = verifier.verify(composite(tiny.background, tiny.layers), tiny);
    CHECK_FALSE(v.accept);
    CHECK(v.reasons[0].find("coverage") != std::string::npos);

    LayeredSample wrong_bg = truth;
    for (auto& p : wrong_bg.background.data()) p = 1.0f - p;
    const Verdict w = verifier.verify(composite(wrong_bg.background, wrong_bg.layers), wrong_bg);
    CHECK_FALSE(w.accept);
    CHECK(w.reasons.back().find("background residual") != std::string::npos);
}

TEST_CASE("verifier outage leaves proposals pending") {
    const Curated c = curate(6, 2);
    DownVerifier verifier;
    const LicResult r = curate_layered(c.image, c.bic.backgrounds, layers_of(c.fic), c.services.embedder, {}, verifier);
    REQUIRE_FALSE(r.records.empty());
    CHECK(r.samples.empty());
    for (const auto& rec : r.records) {
        CHECK(rec.status == ProposalStatus::pending);
        CHECK(rec.reasons[0].find("verifier unavailable") != std::string::npos);
    }
    CHECK(to_string(ProposalStatus::pending) == "pending");
}

TEST_CASE("LIC rejects empty pools") {
    AcceptAllVerifier v;
    const auto provider = chroma_embedder();
    CHECK_THROWS_AS(curate_layered(Image(4, 4), {}, {make_rgba(Image(4, 4), AlphaMask(4, 4, 1.0f))}, provider, {}, v),
                    std::invalid_argument);
    CHECK_THROWS_AS(curate_layered(Image(4, 4), {Image(4, 4)}, {}, provider, {}, v), std::invalid_argument);
}
