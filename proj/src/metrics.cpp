#include "layerforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "layerforge/compose.hpp"
#include "layerforge/dataset_io.hpp"

namespace layerforge {

double alpha_soft_iou(const AlphaMask& a, const AlphaMask& b) {
    require_same_dims(a, b, "alpha_soft_iou");
    double inter = 0.0;
    double uni = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        inter += std::min(da[i], db[i]);
        uni += std::max(da[i], db[i]);
    }
    if (uni == 0.0) return 1.0;
    return inter / uni;
}

double image_l1(const Image& a, const Image& b) {
    require_same_dims(a, b, "image_l1");
    double acc = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) acc += std::abs(static_cast<double>(da[i]) - db[i]);
    return acc / static_cast<double>(da.size());
}

double rgb_l1(const ForegroundLayer& pred, const ForegroundLayer& gt, RgbL1Mode mode) {
    require_same_dims(pred.rgb, gt.rgb, "rgb_l1");
    require_same_dims(pred.alpha, gt.alpha, "rgb_l1 alpha");
    if (mode == RgbL1Mode::on_white) {
        return image_l1(composite_on_white(pred.alpha, pred.rgb), composite_on_white(gt.alpha, gt.rgb));
    }
    double acc = 0.0;
    double weight = 0.0;
    for (std::size_t p = 0; p < pred.alpha.size(); ++p) {
        const double w = std::max(pred.alpha.data()[p], gt.alpha.data()[p]);
        if (w == 0.0) continue;
        for (std::size_t c = 0; c < 3; ++c) {
            acc += w * std::abs(static_cast<double>(pred.rgb.data()[p * 3 + c]) - gt.rgb.data()[p * 3 + c]);
        }
        weight += 3.0 * w;
    }
    return weight == 0.0 ? 0.0 : acc / weight;
}

double LayerMatching::total_score() const {
    double total = 0.0;
    for (const auto& p : pairs) total += p.iou;
    return total;
}

namespace {

void check_rectangular(const std::vector<std::vector<double>>& score) {
    for (const auto& row : score) {
        if (row.size() != score.front().size()) throw DimensionError("assignment: ragged score matrix");
    }
}

struct ExhaustiveSearch {
    const std::vector<std::vector<double>>& score;
    std::size_t cols;
    std::size_t skips_allowed;
    std::vector<int> current;
    std::vector<int> best;
    std::vector<bool> used;
    double best_total = -std::numeric_limits<double>::infinity();

    void run(std::size_t row, double total, std::size_t skips) {
        if (row == score.size()) {
            if (total > best_total) {
                best_total = total;
                best = current;
            }
            return;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (used[c]) continue;
            used[c] = true;
            current[row] = static_cast<int>(c);
            run(row + 1, total + score[row][c], skips);
            used[c] = false;
        }
        if (skips < skips_allowed) {
            current[row] = -1;
            run(row + 1, total, skips + 1);
        }
    }
};

}  // namespace

std::vector<int> exhaustive_assignment(const std::vector<std::vector<double>>& score) {
    if (score.empty()) return {};
    check_rectangular(score);
    const std::size_t rows = score.size();
    const std::size_t cols = score.front().size();
    ExhaustiveSearch search{score, cols, rows > cols ? rows - cols : 0, std::vector<int>(rows, -1), {},
                            std::vector<bool>(cols, false)};
    search.run(0, 0.0, 0);
    return search.best;
}

std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& score) {
    if (score.empty()) return {};
    check_rectangular(score);
    const std::size_t rows = score.size();
    const std::size_t cols = score.front().size();
    if (cols == 0) return std::vector<int>(rows, -1);
    const bool transpose = rows > cols;
    const std::size_t n = transpose ? cols : rows;  // n <= m
    const std::size_t m = transpose ? rows : cols;
    auto cost = [&](std::size_t i, std::size_t j) { return transpose ? -score[j][i] : -score[i][j]; };

    // Shortest augmenting path with potentials; 1-based with column 0 as root.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        if (transpose) {
            out[j - 1] = static_cast<int>(p[j] - 1);
        } else {
            out[p[j] - 1] = static_cast<int>(j - 1);
        }
    }
    return out;
}

LayerMatching match_layers(std::span<const ForegroundLayer> pred, std::span<const ForegroundLayer> gt) {
    LayerMatching out;
    std::vector<std::vector<double>> score(pred.size(), std::vector<double>(gt.size(), 0.0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) score[i][j] = alpha_soft_iou(pred[i].alpha, gt[j].alpha);
    }
    std::vector<int> assign;
    if (!pred.empty() && !gt.empty()) {
        assign = (pred.size() <= 6 && gt.size() <= 6) ? exhaustive_assignment(score) : hungarian_assignment(score);
    } else {
        assign.assign(pred.size(), -1);
    }
    std::vector<bool> gt_used(gt.size(), false);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (assign[i] < 0) {
            out.unmatched_pred.push_back(i);
            continue;
        }
        const auto j = static_cast<std::size_t>(assign[i]);
        gt_used[j] = true;
        out.pairs.push_back({i, j, score[i][j]});
    }
    for (std::size_t j = 0; j < gt.size(); ++j) {
        if (!gt_used[j]) out.unmatched_gt.push_back(j);
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) { return a.gt_index < b.gt_index; });
    return out;
}

std::vector<EditMetrics> evaluate_edit_curve(const LayeredSample& pred, const LayeredSample& gt, int max_edits,
                                             const EvalConfig& config) {
    if (max_edits < 0) throw std::invalid_argument("max_edits must be >= 0");
    require_same_dims(pred.background, gt.background, "evaluate_with_edits");

    const LayerMatching matching = match_layers(pred.layers, gt.layers);
    const std::size_t n = gt.layers.size();
    std::vector<double> iou(n, 0.0);
    std::vector<double> l1(n, 0.0);
    for (const auto& pair : matching.pairs) {
        iou[pair.gt_index] = pair.iou;
        l1[pair.gt_index] = rgb_l1(pred.layers[pair.pred_index], gt.layers[pair.gt_index], config.rgb_mode);
    }
    for (std::size_t g : matching.unmatched_gt) {
        const auto& truth = gt.layers[g];
        const ForegroundLayer missing{Image(truth.rgb.height(), truth.rgb.width()),
                                      AlphaMask(truth.alpha.height(), truth.alpha.width()), truth.order_index};
        iou[g] = alpha_soft_iou(missing.alpha, truth.alpha);
        l1[g] = rgb_l1(missing, truth, config.rgb_mode);
    }
    double bg_l1 = image_l1(pred.background, gt.background);

    auto snapshot = [&] {
        double sum_l1 = bg_l1;
        double sum_iou = 1.0;  // background pair: both fully opaque
        for (std::size_t g = 0; g < n; ++g) {
            sum_l1 += l1[g];
            sum_iou += iou[g];
        }
        const double terms = static_cast<double>(n + 1);
        return EditMetrics{sum_l1 / terms, sum_iou / terms};
    };

    std::vector<EditMetrics> curve{snapshot()};
    for (int e = 1; e <= max_edits; ++e) {
        // Candidate index n stands for the background.
        std::size_t best = n + 1;
        double best_iou_gain = 0.0;
        double best_l1_gain = 0.0;
        for (std::size_t g = 0; g <= n; ++g) {
            if (g == n && !config.edit_background) continue;
            const double iou_gain = g == n ? 0.0 : 1.0 - iou[g];
            const double l1_gain = g == n ? bg_l1 : l1[g];
            if (iou_gain <= 0.0 && l1_gain <= 0.0) continue;
            if (best == n + 1 || iou_gain > best_iou_gain ||
                (iou_gain == best_iou_gain && l1_gain > best_l1_gain)) {
                best = g;
                best_iou_gain = iou_gain;
                best_l1_gain = l1_gain;
            }
        }
        if (best == n) {
            bg_l1 = 0.0;
        } else if (best < n) {
            iou[best] = 1.0;
            l1[best] = 0.0;
        }
        curve.push_back(snapshot());
    }
    return curve;
}

EditMetrics evaluate_with_edits(const LayeredSample& pred, const LayeredSample& gt, int max_edits,
                                const EvalConfig& config) {
    return evaluate_edit_curve(pred, gt, max_edits, config).back();
}

EvalReport evaluate_dataset(const std::vector<EvalPair>& pairs, int max_edits, const EvalConfig& config) {
    if (max_edits < 0) throw std::invalid_argument("max_edits must be >= 0");
    EvalReport report;
    report.max_edits = max_edits;
    for (const auto& pair : pairs) {
        try {
            const LayeredSample pred = read_sample(pair.pred_manifest);
            const LayeredSample gt = read_sample(pair.gt_manifest);
            report.samples.push_back({pair.sample_id, evaluate_edit_curve(pred, gt, max_edits, config)});
        } catch (const std::exception& e) {
            report.failures.push_back(pair.sample_id + ": " + e.what());
        }
    }
    if (!report.samples.empty()) {
        report.aggregate.assign(static_cast<std::size_t>(max_edits) + 1, EditMetrics{});
        for (const auto& s : report.samples) {
            for (std::size_t e = 0; e < s.by_edits.size(); ++e) {
                report.aggregate[e].rgb_l1 += s.by_edits[e].rgb_l1;
                report.aggregate[e].alpha_soft_iou += s.by_edits[e].alpha_soft_iou;
            }
        }
        const double count = static_cast<double>(report.samples.size());
        for (auto& m : report.aggregate) {
            m.rgb_l1 /= count;
            m.alpha_soft_iou /= count;
        }
    }
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    auto metrics_json = [](const std::vector<EditMetrics>& curve) {
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t e = 0; e < curve.size(); ++e) {
            arr.push_back({{"max_edits", e}, {"rgb_l1", curve[e].rgb_l1}, {"alpha_soft_iou", curve[e].alpha_soft_iou}});
        }
        return arr;
    };
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : report.samples) samples.push_back({{"sample_id", s.sample_id}, {"metrics", metrics_json(s.by_edits)}});
    return {{"max_edits", report.max_edits},
            {"sample_count", report.samples.size()},
            {"failure_count", report.failures.size()},
            {"failures", report.failures},
            {"aggregate", metrics_json(report.aggregate)},
            {"samples", samples}};
}

std::string format_table(const EvalReport& report, const std::string& row_label) {
    const std::size_t cols = static_cast<std::size_t>(report.max_edits) + 1;
    const int label_w = static_cast<int>(std::max<std::size_t>(row_label.size(), 12));
    const int cell_w = 8;
    const int block_w = static_cast<int>(cols) * cell_w;
    std::ostringstream out;
    out << std::left << std::setw(label_w) << "Metric" << " | " << std::setw(block_w) << "RGB L1 (lower)"
        << " | " << "Alpha soft IoU (higher)" << "\n";
    out << std::setw(label_w) << "# Max Edits" << " |";
    for (int block = 0; block < 2; ++block) {
        for (std::size_t e = 0; e < cols; ++e) out << std::right << std::setw(cell_w) << e;
        out << (block == 0 ? " |" : "");
    }
    out << "\n" << std::left << std::setw(label_w) << row_label << " |" << std::right << std::fixed
        << std::setprecision(4);
    for (int block = 0; block < 2; ++block) {
        for (std::size_t e = 0; e < cols; ++e) {
            if (report.aggregate.empty()) {
                out << std::setw(cell_w) << "-";
            } else {
                out << std::setw(cell_w)
                    << (block == 0 ? report.aggregate[e].rgb_l1 : report.aggregate[e].alpha_soft_iou);
            }
        }
        out << (block == 0 ? " |" : "");
    }
    out << "\n";
    return out.str();
}

}  // namespace layerforge
