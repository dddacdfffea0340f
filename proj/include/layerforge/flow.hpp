#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "layerforge/image.hpp"

namespace layerforge {

/// Dense real tensor. Shape product always equals data length.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> shape_{0};
    std::vector<double> data_;
};

/// Standard-normal tensor, deterministic in `seed`.
Tensor gaussian_tensor(std::vector<std::size_t> shape, std::uint64_t seed);

// Channel-major [C, H, W] tensors from pixel buffers. Layers become
// 4-channel RGBA tensors.
Tensor to_tensor(const Image& image);
Tensor to_tensor(const ShadowResidual& shadow);
Tensor to_tensor(const ForegroundLayer& layer);

/// z_t = (1 - t) * eps + t * x0.
Tensor interpolate(const Tensor& x0, const Tensor& eps, double t);

/// z_t^aux = (1 - t) * (xd + eps) + t * x0.
Tensor interpolate_aux(const Tensor& x0, const Tensor& xd, const Tensor& eps, double t);

struct VelocityTargets {
    Tensor v;                    // x0 - eps
    std::optional<Tensor> v_aux;  // x0 - xd - eps
};

VelocityTargets velocity_targets(const Tensor& x0, const std::optional<Tensor>& xd, const Tensor& eps);

enum class TargetRole { shadow, background, foreground };
std::string to_string(TargetRole role);

struct FlowTarget {
    TargetRole role = TargetRole::foreground;
    Tensor x0;
    Tensor eps;
};

struct DegradedEntry {
    std::size_t foreground_index = 0;  // index into FlowBatch::targets()
    Tensor xd;
    Tensor eps;  // independent of the main-path noise of the same target
};

/// One training batch for the combined objective. Degraded inputs are only
/// reachable through degraded(), which counts reads so callers can prove a
/// code path never touched them.
class FlowBatch {
public:
    FlowBatch(std::vector<FlowTarget> targets, std::vector<DegradedEntry> degraded, double t, double lambda);

    const std::vector<FlowTarget>& targets() const { return targets_; }
    std::size_t degraded_count() const { return degraded_.size(); }
    const DegradedEntry& degraded(std::size_t i) const;
    double t() const { return t_; }
    double lambda() const { return lambda_; }

    std::size_t degraded_reads() const { return reads_->load(); }

private:
    std::vector<FlowTarget> targets_;
    std::vector<DegradedEntry> degraded_;
    double t_ = 0.0;
    double lambda_ = 1.0;
    std::shared_ptr<std::atomic<std::size_t>> reads_ = std::make_shared<std::atomic<std::size_t>>(0);
};

/// Draws one eps per target and a fresh eps per degraded entry from named
/// sub-seeds of `seed`.
FlowBatch make_flow_batch(std::vector<std::pair<TargetRole, Tensor>> targets,
                          std::vector<std::pair<std::size_t, Tensor>> degraded, double t, double lambda,
                          std::uint64_t seed);

enum class FlowPath { main, aux };

struct PredictorContext {
    FlowPath path = FlowPath::main;
    std::size_t target_index = 0;  // main: target; aux: degraded entry
    TargetRole role = TargetRole::foreground;
};

/// v_theta contract: shape-preserving and deterministic.
using VelocityPredictor = std::function<Tensor(const Tensor& z, double t, const PredictorContext& context)>;

/// Returns the true velocity of each path of `batch` (looked up by context),
/// making the combined loss exactly zero. `batch` must outlive the predictor.
VelocityPredictor make_oracle_predictor(const FlowBatch& batch);

struct Predictions {
    std::vector<Tensor> main;
    std::vector<Tensor> aux;
};

/// Evaluates `predictor` on z_t for every main target and on z_t^aux for
/// every degraded entry.
Predictions predict(const VelocityPredictor& predictor, const FlowBatch& batch);

struct LossBreakdown {
    double main = 0.0;  // mean over targets of per-element MSE
    double aux = 0.0;   // mean over degraded entries of per-element MSE
    double total = 0.0; // main + lambda * aux
};

LossBreakdown combined_loss_breakdown(std::span<const Tensor> pred_main, std::span<const Tensor> pred_aux,
                                      const FlowBatch& batch);

double combined_loss(std::span<const Tensor> pred_main, std::span<const Tensor> pred_aux, const FlowBatch& batch);

/// Euler integration of the main path from each target's eps over `steps`
/// uniform steps. Only the main path is ever evaluated.
std::vector<Tensor> generate_main_path(const VelocityPredictor& predictor, const FlowBatch& batch, int steps);

}  // namespace layerforge
