#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"

namespace layerforge {

/// L2-normalized embedding. A zero input vector normalizes to the uniform
/// unit vector so the norm invariant always holds.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dims() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

/// phi(.): deterministic, fixed dimension.
using EmbeddingProvider = std::function<EmbeddingVector(const Image&)>;

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// grid x grid grayscale box downsample, flattened and normalized. With
/// `centered` the cell mean is subtracted first, so cosine becomes a
/// correlation and a flat image carries no signal.
EmbeddingProvider downsample_embedder(int grid = 8, bool centered = false);

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct SelectorConfig {
    double tau_local = 0.85;
    double tau_global = 0.80;
    double tau_dup = 0.95;
    int max_foregrounds = 5;
};

void validate(const SelectorConfig& config);
void to_json(nlohmann::json& j, const SelectorConfig& config);
void from_json(const nlohmann::json& j, SelectorConfig& config);

/// Greedy scan in input order: an image is dropped iff its similarity with an
/// already kept representative exceeds tau_dup.
std::vector<std::size_t> dedup(const std::vector<Image>& images, const EmbeddingProvider& provider, double tau_dup);

struct MaskedFeatures {
    // fg[i][j] = phi(M(alpha_i, F~_j)), K x K.
    std::vector<std::vector<EmbeddingVector>> fg;
    // bg[i][j] = phi(M(alpha_i, B_j)), K x |B|.
    std::vector<std::vector<EmbeddingVector>> bg;
};

MaskedFeatures masked_features(const std::vector<ForegroundLayer>& foregrounds, const std::vector<Image>& backgrounds,
                               const EmbeddingProvider& provider);

/// Subset of pool indices, ascending.
using Subset = std::vector<std::size_t>;

/// Every non-empty subset of size <= max_foregrounds with no pair i < j where
/// cos(fg[i][i], fg[i][j]) > tau_local. Ordered by ascending bitmask.
std::vector<Subset> valid_foreground_subsets(const std::vector<std::vector<EmbeddingVector>>& fg, double tau_local,
                                             int max_foregrounds);

struct Proposal {
    static constexpr int kInputImage = -1;

    int source_ref = kInputImage;  // kInputImage or a background index
    std::size_t background_ref = 0;
    Subset foreground_ids;
    double global_similarity = 0.0;

    bool operator==(const Proposal&) const = default;
};

void to_json(nlohmann::json& j, const Proposal& proposal);
void from_json(const nlohmann::json& j, Proposal& proposal);

/// Stack of pool layers for `subset`, renumbered 1..k front-to-back.
std::vector<ForegroundLayer> subset_layers(const std::vector<ForegroundLayer>& pool, const Subset& subset);

/// Sources are {input} then the backgrounds. For every source, every other
/// background, and every valid subset: reject on FG-BG overlap, composite the
/// survivors, accept when cos(phi(I_c), phi(I_src)) >= tau_global.
std::vector<Proposal> select_proposals(const Image& source, const std::vector<Image>& backgrounds,
                                       const std::vector<ForegroundLayer>& foregrounds,
                                       const EmbeddingProvider& provider, const SelectorConfig& config);

}  // namespace layerforge
