#include "layerforge/selector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "layerforge/compose.hpp"
#include "layerforge/resample.hpp"

namespace layerforge {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    double norm2 = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw EmbeddingError("embedding contains non-finite values");
        norm2 += v * v;
    }
    if (values_.empty()) return;
    if (norm2 == 0.0) {
        std::fill(values_.begin(), values_.end(), 1.0 / std::sqrt(static_cast<double>(values_.size())));
        return;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : values_) v *= inv;
}

EmbeddingProvider downsample_embedder(int grid, bool centered) {
    if (grid < 1) throw std::invalid_argument("downsample_embedder: grid must be >= 1");
    return [grid, centered](const Image& image) {
        const bool small = image.height() < grid || image.width() < grid;
        const Image resized =
            small ? resample_bilinear(image, std::max(grid, image.height()), std::max(grid, image.width())) : Image{};
        const Image& img = small ? resized : image;

        std::vector<double> sums(static_cast<std::size_t>(grid * grid), 0.0);
        std::vector<double> counts(sums.size(), 0.0);
        const int h = img.height();
        const int w = img.width();
        for (int y = 0; y < h; ++y) {
            const int cy = static_cast<int>(static_cast<long long>(y) * grid / h);
            for (int x = 0; x < w; ++x) {
                const int cx = static_cast<int>(static_cast<long long>(x) * grid / w);
                const double gray = (static_cast<double>(img.at(y, x, 0)) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
                const auto cell = static_cast<std::size_t>(cy * grid + cx);
                sums[cell] += gray;
                counts[cell] += 1.0;
            }
        }
        for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= counts[i];
        if (centered) {
            double mean = 0.0;
            for (double v : sums) mean += v;
            mean /= static_cast<double>(sums.size());
            for (double& v : sums) {
                v -= mean;
                if (std::abs(v) < 1e-9) v = 0.0;  // rounding noise on flat images
            }
        }
        return EmbeddingVector(std::move(sums));
    };
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dims() != v.dims()) {
        throw DimensionError("cosine: embedding dims " + std::to_string(u.dims()) + " vs " + std::to_string(v.dims()));
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.dims(); ++i) {
        dot += u.values()[i] * v.values()[i];
        nu += u.values()[i] * u.values()[i];
        nv += v.values()[i] * v.values()[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

void validate(const SelectorConfig& config) {
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(config.tau_local)) throw std::invalid_argument("tau_local must lie in (0, 1]");
    if (!in_unit(config.tau_global)) throw std::invalid_argument("tau_global must lie in (0, 1]");
    if (!in_unit(config.tau_dup)) throw std::invalid_argument("tau_dup must lie in (0, 1]");
    if (config.max_foregrounds < 1 || config.max_foregrounds > 5) {
        throw std::invalid_argument("max_foregrounds must lie in [1, 5]");
    }
}

void to_json(nlohmann::json& j, const SelectorConfig& config) {
    j = nlohmann::json{{"tau_local", config.tau_local},
                       {"tau_global", config.tau_global},
                       {"tau_dup", config.tau_dup},
                       {"max_foregrounds", config.max_foregrounds}};
}

void from_json(const nlohmann::json& j, SelectorConfig& config) {
    config.tau_local = j.value("tau_local", config.tau_local);
    config.tau_global = j.value("tau_global", config.tau_global);
    config.tau_dup = j.value("tau_dup", config.tau_dup);
    config.max_foregrounds = j.value("max_foregrounds", config.max_foregrounds);
}

std::vector<std::size_t> dedup(const std::vector<Image>& images, const EmbeddingProvider& provider, double tau_dup) {
    std::vector<std::size_t> kept;
    std::vector<EmbeddingVector> reps;
    for (std::size_t i = 0; i < images.size(); ++i) {
        EmbeddingVector e = provider(images[i]);
        const bool duplicate =
            std::any_of(reps.begin(), reps.end(), [&](const EmbeddingVector& r) { return cosine(e, r) > tau_dup; });
        if (duplicate) continue;
        kept.push_back(i);
        reps.push_back(std::move(e));
    }
    return kept;
}

namespace {

EmbeddingVector embed_masked(const AlphaMask& alpha, const Image& target, const EmbeddingProvider& provider,
                             const char* matrix, std::size_t i, std::size_t j) {
    try {
        const AlphaMask a = resample_bilinear(alpha, target.height(), target.width());
        return provider(composite_on_white(a, target));
    } catch (const std::exception& e) {
        throw EmbeddingError(std::string("embedding failed for ") + matrix + "[" + std::to_string(i) + "][" +
                             std::to_string(j) + "]: " + e.what());
    }
}

}  // namespace

MaskedFeatures masked_features(const std::vector<ForegroundLayer>& foregrounds, const std::vector<Image>& backgrounds,
                               const EmbeddingProvider& provider) {
    if (foregrounds.empty()) throw std::invalid_argument("masked_features: empty foreground pool");
    if (backgrounds.empty()) throw std::invalid_argument("masked_features: empty background pool");
    MaskedFeatures out;
    const std::size_t k = foregrounds.size();
    out.fg.resize(k);
    out.bg.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const AlphaMask& alpha = foregrounds[i].alpha;
        for (std::size_t j = 0; j < k; ++j) {
            out.fg[i].push_back(embed_masked(alpha, foregrounds[j].rgb, provider, "fF", i, j));
        }
        for (std::size_t j = 0; j < backgrounds.size(); ++j) {
            out.bg[i].push_back(embed_masked(alpha, backgrounds[j], provider, "fB", i, j));
        }
    }
    return out;
}

std::vector<Subset> valid_foreground_subsets(const std::vector<std::vector<EmbeddingVector>>& fg, double tau_local,
                                             int max_foregrounds) {
    const std::size_t k = fg.size();
    if (k > 20) throw std::invalid_argument("valid_foreground_subsets: pool of " + std::to_string(k) + " is too large");
    for (const auto& row : fg) {
        if (row.size() != k) throw DimensionError("valid_foreground_subsets: fF must be square");
    }

    // conflict[i] has bit j set when the pair (i, j), i < j, overlaps.
    std::vector<std::uint32_t> conflict(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (cosine(fg[i][i], fg[i][j]) > tau_local) conflict[i] |= 1u << j;
        }
    }

    std::vector<Subset> out;
    const std::uint32_t limit = 1u << k;
    for (std::uint32_t bits = 1; bits < limit; ++bits) {
        if (std::popcount(bits) > max_foregrounds) continue;
        bool clean = true;
        for (std::size_t i = 0; i < k && clean; ++i) {
            if ((bits >> i & 1u) && (conflict[i] & bits)) clean = false;
        }
        if (!clean) continue;
        Subset subset;
        for (std::size_t i = 0; i < k; ++i) {
            if (bits >> i & 1u) subset.push_back(i);
        }
        out.push_back(std::move(subset));
    }
    return out;
}

void to_json(nlohmann::json& j, const Proposal& proposal) {
    j = nlohmann::json{{"source_ref", proposal.source_ref == Proposal::kInputImage
                                          ? nlohmann::json("input")
                                          : nlohmann::json(proposal.source_ref)},
                       {"background_ref", proposal.background_ref},
                       {"foreground_ids", proposal.foreground_ids},
                       {"global_similarity", proposal.global_similarity}};
}

void from_json(const nlohmann::json& j, Proposal& proposal) {
    const auto& src = j.at("source_ref");
    proposal.source_ref = src.is_string() ? Proposal::kInputImage : src.get<int>();
    proposal.background_ref = j.at("background_ref").get<std::size_t>();
    proposal.foreground_ids = j.at("foreground_ids").get<Subset>();
    proposal.global_similarity = j.value("global_similarity", 0.0);
}

std::vector<ForegroundLayer> subset_layers(const std::vector<ForegroundLayer>& pool, const Subset& subset) {
    std::vector<ForegroundLayer> out;
    out.reserve(subset.size());
    for (std::size_t idx : subset) {
        out.push_back(pool.at(idx));
        out.back().order_index = static_cast<int>(out.size());
    }
    return out;
}

std::vector<Proposal> select_proposals(const Image& source, const std::vector<Image>& backgrounds,
                                       const std::vector<ForegroundLayer>& foregrounds,
                                       const EmbeddingProvider& provider, const SelectorConfig& config) {
    validate(config);
    if (backgrounds.empty()) throw std::invalid_argument("select_proposals: empty background pool");
    if (foregrounds.empty()) return {};

    const MaskedFeatures features = masked_features(foregrounds, backgrounds, provider);
    const std::vector<Subset> valid = valid_foreground_subsets(features.fg, config.tau_local, config.max_foregrounds);

    // FG-BG overlap depends only on (foreground, background), not on the source.
    const std::size_t k = foregrounds.size();
    std::vector<std::vector<bool>> overlaps(k, std::vector<bool>(backgrounds.size()));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < backgrounds.size(); ++j) {
            overlaps[i][j] = cosine(features.fg[i][i], features.bg[i][j]) > config.tau_local;
        }
    }

    std::vector<Proposal> out;
    const int n_sources = static_cast<int>(backgrounds.size()) + 1;
    for (int s = 0; s < n_sources; ++s) {
        const int source_ref = s - 1;
        const Image& src = source_ref == Proposal::kInputImage ? source : backgrounds[static_cast<std::size_t>(source_ref)];
        const EmbeddingVector src_embedding = provider(src);
        for (std::size_t j = 0; j < backgrounds.size(); ++j) {
            if (static_cast<int>(j) == source_ref) continue;
            for (const Subset& subset : valid) {
                const bool overlap =
                    std::any_of(subset.begin(), subset.end(), [&](std::size_t i) { return overlaps[i][j]; });
                if (overlap) continue;
                const Image recomposed = composite(backgrounds[j], subset_layers(foregrounds, subset));
                const double score = cosine(provider(recomposed), src_embedding);
                if (score >= config.tau_global) out.push_back({source_ref, j, subset, score});
            }
        }
    }
    return out;
}

}  // namespace layerforge
