#include "layerforge/flow.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "layerforge/seeds.hpp"

namespace layerforge {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": tensor shape mismatch");
}

void require_unit_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("t must lie in [0, 1], got " + std::to_string(t));
}

template <typename Buffer>
Tensor planar_tensor(const Buffer& buf) {
    constexpr int C = Buffer::channels;
    const std::size_t hw = buf.pixel_count();
    std::vector<double> data(hw * C);
    const auto src = buf.data();
    for (std::size_t p = 0; p < hw; ++p) {
        for (int c = 0; c < C; ++c) data[static_cast<std::size_t>(c) * hw + p] = src[p * C + static_cast<std::size_t>(c)];
    }
    return Tensor({static_cast<std::size_t>(C), static_cast<std::size_t>(buf.height()),
                   static_cast<std::size_t>(buf.width())},
                  std::move(data));
}

double mean_squared_error(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "combined_loss");
    if (target.size() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(target.size());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_)) throw DimensionError("tensor data length does not match shape");
    for (double v : data_) {
        if (!std::isfinite(v)) throw RangeError("tensor values must be finite");
    }
}

Tensor gaussian_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor out(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.data()) v = normal(rng);
    return out;
}

Tensor to_tensor(const Image& image) { return planar_tensor(image); }
Tensor to_tensor(const ShadowResidual& shadow) { return planar_tensor(shadow); }

Tensor to_tensor(const ForegroundLayer& layer) {
    require_same_dims(layer.rgb, layer.alpha, "to_tensor");
    const Tensor rgb = planar_tensor(layer.rgb);
    const Tensor alpha = planar_tensor(layer.alpha);
    std::vector<double> data(rgb.data().begin(), rgb.data().end());
    data.insert(data.end(), alpha.data().begin(), alpha.data().end());
    return Tensor({4, static_cast<std::size_t>(layer.rgb.height()), static_cast<std::size_t>(layer.rgb.width())},
                  std::move(data));
}

Tensor interpolate(const Tensor& x0, const Tensor& eps, double t) {
    require_same_shape(x0, eps, "interpolate");
    require_unit_t(t);
    Tensor out(x0.shape());
    // Endpoints are exact: t == 0 yields eps and t == 1 yields x0.
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * eps[i] + t * x0[i];
    return out;
}

Tensor interpolate_aux(const Tensor& x0, const Tensor& xd, const Tensor& eps, double t) {
    require_same_shape(x0, xd, "interpolate_aux");
    require_same_shape(x0, eps, "interpolate_aux");
    require_unit_t(t);
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * (xd[i] + eps[i]) + t * x0[i];
    return out;
}

VelocityTargets velocity_targets(const Tensor& x0, const std::optional<Tensor>& xd, const Tensor& eps) {
    require_same_shape(x0, eps, "velocity_targets");
    VelocityTargets out{Tensor(x0.shape()), std::nullopt};
    for (std::size_t i = 0; i < x0.size(); ++i) out.v[i] = x0[i] - eps[i];
    if (xd) {
        require_same_shape(x0, *xd, "velocity_targets");
        Tensor v_aux(x0.shape());
        for (std::size_t i = 0; i < x0.size(); ++i) v_aux[i] = x0[i] - (*xd)[i] - eps[i];
        out.v_aux = std::move(v_aux);
    }
    return out;
}

std::string to_string(TargetRole role) {
    switch (role) {
        case TargetRole::shadow: return "shadow";
        case TargetRole::background: return "background";
        case TargetRole::foreground: return "foreground";
    }
    return "unknown";
}

FlowBatch::FlowBatch(std::vector<FlowTarget> targets, std::vector<DegradedEntry> degraded, double t, double lambda)
    : targets_(std::move(targets)), degraded_(std::move(degraded)), t_(t), lambda_(lambda) {
    require_unit_t(t_);
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("lambda must be finite and >= 0");
    for (const auto& target : targets_) require_same_shape(target.x0, target.eps, "flow batch target");
    for (const auto& entry : degraded_) {
        if (entry.foreground_index >= targets_.size() ||
            targets_[entry.foreground_index].role != TargetRole::foreground) {
            throw std::invalid_argument("degraded entry must reference a foreground target");
        }
        require_same_shape(targets_[entry.foreground_index].x0, entry.xd, "degraded entry");
        require_same_shape(entry.xd, entry.eps, "degraded entry noise");
    }
}

const DegradedEntry& FlowBatch::degraded(std::size_t i) const {
    reads_->fetch_add(1);
    return degraded_.at(i);
}

FlowBatch make_flow_batch(std::vector<std::pair<TargetRole, Tensor>> targets,
                          std::vector<std::pair<std::size_t, Tensor>> degraded, double t, double lambda,
                          std::uint64_t seed) {
    std::vector<FlowTarget> flow_targets;
    flow_targets.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto& [role, x0] = targets[i];
        Tensor eps = gaussian_tensor(x0.shape(), derive_seed(seed, "eps/main/" + std::to_string(i)));
        flow_targets.push_back({role, std::move(x0), std::move(eps)});
    }
    std::vector<DegradedEntry> entries;
    entries.reserve(degraded.size());
    for (std::size_t i = 0; i < degraded.size(); ++i) {
        auto& [index, xd] = degraded[i];
        Tensor eps = gaussian_tensor(xd.shape(), derive_seed(seed, "eps/aux/" + std::to_string(i)));
        entries.push_back({index, std::move(xd), std::move(eps)});
    }
    return FlowBatch(std::move(flow_targets), std::move(entries), t, lambda);
}

VelocityPredictor make_oracle_predictor(const FlowBatch& batch) {
    return [&batch](const Tensor& z, double, const PredictorContext& ctx) {
        Tensor v;
        if (ctx.path == FlowPath::main) {
            const auto& target = batch.targets().at(ctx.target_index);
            v = velocity_targets(target.x0, std::nullopt, target.eps).v;
        } else {
            const auto& entry = batch.degraded(ctx.target_index);
            const auto& target = batch.targets().at(entry.foreground_index);
            v = *velocity_targets(target.x0, entry.xd, entry.eps).v_aux;
        }
        require_same_shape(z, v, "oracle predictor");
        return v;
    };
}

Predictions predict(const VelocityPredictor& predictor, const FlowBatch& batch) {
    Predictions out;
    const double t = batch.t();
    for (std::size_t i = 0; i < batch.targets().size(); ++i) {
        const auto& target = batch.targets()[i];
        out.main.push_back(predictor(interpolate(target.x0, target.eps, t), t, {FlowPath::main, i, target.role}));
    }
    for (std::size_t i = 0; i < batch.degraded_count(); ++i) {
        const auto& entry = batch.degraded(i);
        const auto& target = batch.targets()[entry.foreground_index];
        out.aux.push_back(
            predictor(interpolate_aux(target.x0, entry.xd, entry.eps, t), t, {FlowPath::aux, i, target.role}));
    }
    return out;
}

LossBreakdown combined_loss_breakdown(std::span<const Tensor> pred_main, std::span<const Tensor> pred_aux,
                                      const FlowBatch& batch) {
    if (pred_main.size() != batch.targets().size()) {
        throw std::invalid_argument("combined_loss: " + std::to_string(pred_main.size()) +
                                    " main predictions for " + std::to_string(batch.targets().size()) + " targets");
    }
    if (pred_aux.size() != batch.degraded_count()) {
        throw std::invalid_argument("combined_loss: " + std::to_string(pred_aux.size()) +
                                    " auxiliary predictions for " + std::to_string(batch.degraded_count()) +
                                    " degraded entries");
    }
    LossBreakdown loss;
    for (std::size_t i = 0; i < pred_main.size(); ++i) {
        const auto& target = batch.targets()[i];
        loss.main += mean_squared_error(pred_main[i], velocity_targets(target.x0, std::nullopt, target.eps).v);
    }
    if (!pred_main.empty()) loss.main /= static_cast<double>(pred_main.size());

    if (batch.lambda() > 0.0) {
        for (std::size_t i = 0; i < pred_aux.size(); ++i) {
            const auto& entry = batch.degraded(i);
            const auto& target = batch.targets()[entry.foreground_index];
            loss.aux += mean_squared_error(pred_aux[i], *velocity_targets(target.x0, entry.xd, entry.eps).v_aux);
        }
        if (!pred_aux.empty()) loss.aux /= static_cast<double>(pred_aux.size());
    }
    loss.total = loss.main + batch.lambda() * loss.aux;
    return loss;
}

double combined_loss(std::span<const Tensor> pred_main, std::span<const Tensor> pred_aux, const FlowBatch& batch) {
    return combined_loss_breakdown(pred_main, pred_aux, batch).total;
}

std::vector<Tensor> generate_main_path(const VelocityPredictor& predictor, const FlowBatch& batch, int steps) {
    if (steps < 1) throw std::invalid_argument("generate_main_path: steps must be >= 1");
    std::vector<Tensor> out;
    const double dt = 1.0 / steps;
    for (std::size_t i = 0; i < batch.targets().size(); ++i) {
        const auto& target = batch.targets()[i];
        Tensor z = target.eps;
        for (int s = 0; s < steps; ++s) {
            const double t = s * dt;
            const Tensor v = predictor(z, t, {FlowPath::main, i, target.role});
            require_same_shape(z, v, "generate_main_path");
            for (std::size_t k = 0; k < z.size(); ++k) z[k] += dt * v[k];
        }
        out.push_back(std::move(z));
    }
    return out;
}

}  // namespace layerforge
