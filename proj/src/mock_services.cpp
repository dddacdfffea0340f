#include "layerforge/mock_services.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "layerforge/compose.hpp"
#include "layerforge/degradation.hpp"

namespace layerforge {

namespace {

double mean_abs_diff(const Image& a, const Image& b) {
    require_same_dims(a, b, "mock scene lookup");
    const auto x = a.data();
    const auto y = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(static_cast<double>(x[i]) - y[i]);
    return sum / static_cast<double>(x.size());
}

std::size_t nearest(const std::vector<Image>& candidates, const Image& image) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = mean_abs_diff(candidates[i], image);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::string tag(std::size_t k) { return "[object:" + std::to_string(k) + "]"; }

// -1 when the text carries no tag.
long parse_tag(const std::string& text) {
    const auto pos = text.find("[object:");
    if (pos == std::string::npos) return -1;
    std::size_t end = 0;
    const std::string rest = text.substr(pos + 8);
    long k = -1;
    try {
        k = std::stol(rest, &end);
    } catch (const std::exception&) {
        return -1;
    }
    if (end >= rest.size() || rest[end] != ']') return -1;
    return k;
}

}  // namespace

SceneStates::SceneStates(SceneSpec spec) : spec_(std::move(spec)) {
    for (std::size_t m = 0; m <= spec_.objects.size(); ++m) states_.push_back(render_state(spec_, m));
    for (std::size_t k = 0; k < spec_.objects.size(); ++k) {
        on_white_.push_back(object_on_white(spec_, k));
        alphas_.push_back(object_alpha(spec_, k));
    }
}

std::size_t SceneStates::closest_state(const Image& image) const { return nearest(states_, image); }

std::size_t SceneStates::closest_object(const Image& image) const {
    if (on_white_.empty()) throw std::invalid_argument("scene " + spec_.id + " has no objects");
    return nearest(on_white_, image);
}

ForegroundDetection MockAgent::detect_foreground(const Image& image) {
    const std::size_t m = states_->closest_state(image);
    if (m >= states_->object_count()) return {false, ""};
    return {true, states_->spec().objects[m].name + " " + tag(m)};
}

std::string MockAgent::removal_instruction(const Image&, const std::string& description) {
    const long k = parse_tag(description);
    if (k < 0) throw std::invalid_argument("mock agent: description carries no object tag");
    const auto& name = states_->spec().objects.at(static_cast<std::size_t>(k)).name;
    return "Remove the " + name + " and fill in what is behind it " + tag(static_cast<std::size_t>(k));
}

std::string MockAgent::background_removal_instruction(const Image&, const std::string& description) {
    const long k = parse_tag(description);
    if (k < 0) throw std::invalid_argument("mock agent: description carries no object tag");
    const auto& name = states_->spec().objects.at(static_cast<std::size_t>(k)).name;
    return "Keep only the " + name + " on a white background " + tag(static_cast<std::size_t>(k));
}

Image MockEditor::apply(const Image& image, const std::string& instruction) {
    const long k = parse_tag(instruction);
    if (k < 0 || static_cast<std::size_t>(k) >= states_->object_count()) return image;
    const auto idx = static_cast<std::size_t>(k);
    if (instruction.rfind("Remove", 0) == 0) return states_->state(idx + 1);
    if (instruction.rfind("Keep only", 0) == 0) return states_->on_white(idx);
    return image;
}

MockSegmenter::MockSegmenter(std::shared_ptr<const SceneStates> states, MaskVariant variant)
    : states_(std::move(states)), variant_(variant) {
    switch (variant_) {
        case MaskVariant::exact: id_ = "mock-seg-exact"; break;
        case MaskVariant::eroded: id_ = "mock-seg-eroded"; break;
        case MaskVariant::dilated: id_ = "mock-seg-dilated"; break;
        case MaskVariant::blurred: id_ = "mock-seg-blurred"; break;
    }
}

AlphaMask MockSegmenter::segment(const Image& image) {
    const AlphaMask& truth = states_->alpha(states_->closest_object(image));
    switch (variant_) {
        case MaskVariant::exact: return truth;
        case MaskVariant::eroded: return erode_alpha(truth, 1);
        case MaskVariant::dilated: return dilate_alpha(truth, 1);
        case MaskVariant::blurred: return blur_boundary(truth, 1.0);
    }
    return truth;
}

Verdict MockVerifier::verify(const Image& rendered, const LayeredSample& sample) {
    Verdict verdict{true, {}};
    require_same_dims(rendered, sample.source, "mock verifier");
    for (std::size_t k = 0; k < sample.layers.size(); ++k) {
        const double cov = coverage(sample.layers[k].alpha);
        if (cov < config_.min_coverage || cov > config_.max_coverage) {
            verdict.accept = false;
            verdict.reasons.push_back("layer " + std::to_string(k + 1) + " coverage " + std::to_string(cov) +
                                      " outside [" + std::to_string(config_.min_coverage) + ", " +
                                      std::to_string(config_.max_coverage) + "]");
        }
    }

    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < rendered.height(); ++y) {
        for (int x = 0; x < rendered.width(); ++x) {
            float support = 0.0f;
            for (const auto& layer : sample.layers) support = std::max(support, layer.alpha.at(y, x));
            if (support > config_.support_threshold) continue;
            for (int c = 0; c < 3; ++c) {
                sum += std::abs(static_cast<double>(sample.source.at(y, x, c)) - rendered.at(y, x, c));
            }
            ++count;
        }
    }
    if (count > 0) {
        const double residual = sum / (3.0 * static_cast<double>(count));
        if (residual > config_.max_residual) {
            verdict.accept = false;
            verdict.reasons.push_back("background residual " + std::to_string(residual) + " exceeds " +
                                      std::to_string(config_.max_residual));
        }
    }
    return verdict;
}

namespace {
constexpr double kChromaAnchor = 0.5;
}

EmbeddingProvider chroma_embedder(int grid) {
    if (grid < 1) throw std::invalid_argument("chroma_embedder: grid must be >= 1");
    return [grid](const Image& image) {
        const auto cells = static_cast<std::size_t>(grid * grid);
        std::vector<double> sums(2 * cells, 0.0);
        std::vector<double> counts(cells, 0.0);
        const int h = image.height();
        const int w = image.width();
        for (int y = 0; y < h; ++y) {
            const auto cy = static_cast<std::size_t>(static_cast<long long>(y) * grid / h);
            for (int x = 0; x < w; ++x) {
                const auto cx = static_cast<std::size_t>(static_cast<long long>(x) * grid / w);
                const std::size_t cell = cy * static_cast<std::size_t>(grid) + cx;
                const double r = image.at(y, x, 0);
                const double g = image.at(y, x, 1);
                const double b = image.at(y, x, 2);
                sums[2 * cell] += r - g;
                sums[2 * cell + 1] += g - b;
                counts[cell] += 1.0;
            }
        }
        for (std::size_t i = 0; i < sums.size(); ++i) {
            // Cells no pixel maps to (image smaller than the grid) stay zero.
            if (counts[i / 2] > 0.0) sums[i] /= counts[i / 2];
        }
        // A constant component: faint colour casts then look like a neutral
        // image instead of a scaled-down copy of a strong one.
        sums.push_back(kChromaAnchor);
        return EmbeddingVector(std::move(sums));
    };
}

ServiceBundle make_mock_bundle(const SceneSpec& spec, const MockVerifierConfig& verifier) {
    auto states = std::make_shared<const SceneStates>(spec);
    ServiceBundle b;
    b.agent = std::make_shared<MockAgent>(states);
    b.editor = std::make_shared<MockEditor>(states);
    for (auto v : {MaskVariant::exact, MaskVariant::eroded, MaskVariant::dilated}) {
        b.segmenters.push_back(std::make_shared<MockSegmenter>(states, v));
    }
    b.embedder = as_provider(std::make_shared<MockEmbedder>());
    b.verifier = std::make_shared<MockVerifier>(verifier);
    b.ids = {{"agent", "mock-agent"},
             {"editor", "mock-editor"},
             {"embedder", "mock-chroma-16"},
             {"verifier", "mock-verifier"}};
    for (std::size_t i = 0; i < b.segmenters.size(); ++i) {
        b.ids["segmenter/" + std::to_string(i)] = b.segmenters[i]->id();
    }
    return b;
}

}  // namespace layerforge
