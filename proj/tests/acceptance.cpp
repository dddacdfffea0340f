// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "generators.hpp"
#include "layerforge/cli.hpp"
#include "layerforge/compose.hpp"
#include "layerforge/dataset_io.hpp"
#include "layerforge/degradation.hpp"
#include "layerforge/flow.hpp"
#include "layerforge/metrics.hpp"
#include "layerforge/selector.hpp"
#include "oracles.hpp"

using namespace layerforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Records the first failure; later ones only bump the count.
struct Checker {
    Outcome out;
    std::size_t failures = 0;
    void require(bool ok, const std::string& what) {
        if (ok) return;
        if (failures++ == 0) out.detail = what;
        out.pass = false;
    }
    Outcome done(const std::string& summary) {
        if (out.pass) out.detail = summary;
        else if (failures > 1) out.detail += " (+" + std::to_string(failures - 1) + " more)";
        return out;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("lf_accept_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Outcome recomposition_exactness() {
    Checker c;
    std::mt19937_64 rng(1001);
    float worst = 0.0f;
    double slowest_full = 0.0;
    for (int i = 0; i < 100; ++i) {
        // Every tenth sample is full size; the rest are random up to 256.
        const bool full = i % 10 == 0;
        const int h = full ? 1024 : 1 + static_cast<int>(rng() % 256);
        const int w = full ? 1024 : 1 + static_cast<int>(rng() % 256);
        const int k = static_cast<int>(rng() % 6);
        LayeredSample s = gen::random_sample(rng, h, w, k);

        const auto t0 = Clock::now();
        const Image rendered = composite(s.background, s.layers);
        s.shadow = shadow_residual(s.source, rendered);
        RecomposeDiagnostics diag;
        const Image back = recompose(rendered, *s.shadow, &diag);
        const double dt = seconds_since(t0);

        const float err = max_abs_difference(back.data(), s.source.data());
        worst = std::max(worst, err);
        c.require(err <= 1e-6f, "sample " + std::to_string(i) + " error " + fmt(err));
        c.require(!diag.clamped(), "sample " + std::to_string(i) + " clamped");
        if (full) {
            slowest_full = std::max(slowest_full, dt);
            c.require(dt <= 1.0, "1024x1024 sample took " + fmt(dt) + " s");
        }
        if (i < 20) {
            // Cross-check the blend itself against the double-precision oracle.
            const auto expect = oracle::blend_stack(s.background, s.layers);
            double blend_err = 0.0;
            for (std::size_t j = 0; j < expect.size(); ++j)
                blend_err = std::max(blend_err, std::abs(rendered.data()[j] - expect[j]));
            c.require(blend_err <= 1e-6, "blend differs from oracle by " + fmt(blend_err));
        }
    }
    return c.done("max error " + fmt(worst) + ", slowest 1024x1024 " + fmt(slowest_full) + " s");
}

Outcome flow_paths() {
    Checker c;
    std::mt19937_64 rng(1002);
    const double h = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::size_t> shape;
        const std::size_t rank = 1 + rng() % 3;
        for (std::size_t r = 0; r < rank; ++r) shape.push_back(1 + rng() % 6);
        const Tensor x0 = gaussian_tensor(shape, rng()), xd = gaussian_tensor(shape, rng()),
                     eps = gaussian_tensor(shape, rng());
        Tensor start(shape);
        for (std::size_t j = 0; j < start.size(); ++j) start[j] = xd[j] + eps[j];
        c.require(interpolate(x0, eps, 0.0) == eps, "main path misses eps at t=0");
        c.require(interpolate(x0, eps, 1.0) == x0, "main path misses x0 at t=1");
        c.require(interpolate_aux(x0, xd, eps, 0.0) == start, "aux path misses xd+eps at t=0");
        c.require(interpolate_aux(x0, xd, eps, 1.0) == x0, "aux path misses x0 at t=1");

        const double t = (1.0 - h) * oracle::unit(rng);
        const auto v = velocity_targets(x0, xd, eps);
        const Tensor a = interpolate(x0, eps, t), b = interpolate(x0, eps, t + h);
        const Tensor p = interpolate_aux(x0, xd, eps, t), q = interpolate_aux(x0, xd, eps, t + h);
        for (std::size_t j = 0; j < x0.size(); ++j) {
            // Compare against the velocities written out here, not the library's.
            const double dm = std::abs((b[j] - a[j]) / h - (x0[j] - eps[j]));
            const double da = std::abs((q[j] - p[j]) / h - (x0[j] - xd[j] - eps[j]));
            worst = std::max({worst, dm, da});
            c.require(dm <= 1e-6 && da <= 1e-6, "finite difference off by " + fmt(std::max(dm, da)));
            c.require(v.v[j] == x0[j] - eps[j], "velocity target mismatch");
        }
    }
    return c.done("1000 tensors, worst velocity residual " + fmt(worst));
}

Outcome oracle_loss_zero() {
    Checker c;
    std::mt19937_64 rng(1003);
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
        std::vector<std::size_t> shape{1 + rng() % 4, 1 + rng() % 5, 1 + rng() % 5};
        std::vector<std::pair<TargetRole, Tensor>> targets{{TargetRole::shadow, gaussian_tensor(shape, rng())},
                                                           {TargetRole::background, gaussian_tensor(shape, rng())}};
        std::vector<std::pair<std::size_t, Tensor>> degraded;
        const std::size_t k = rng() % 5;
        for (std::size_t f = 0; f < k; ++f) {
            targets.emplace_back(TargetRole::foreground, gaussian_tensor(shape, rng()));
            if (rng() % 3) degraded.emplace_back(targets.size() - 1, gaussian_tensor(shape, rng()));
        }
        const double lambda = i % 7 == 0 ? 0.0 : 10.0 * oracle::unit(rng);
        const FlowBatch batch = make_flow_batch(std::move(targets), std::move(degraded), oracle::unit(rng), lambda, rng());
        const Predictions p = predict(make_oracle_predictor(batch), batch);
        const double loss = combined_loss(p.main, p.aux, batch);
        worst = std::max(worst, loss);
        c.require(loss <= 1e-10, "batch " + std::to_string(i) + " loss " + fmt(loss));
    }
    return c.done("300 batches, max oracle loss " + fmt(worst));
}

Outcome attention_contracts() {
    Checker c;
    std::mt19937_64 rng(1004);
    std::size_t total = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t v = gen::layout_violations(gen::random_layout(rng));
        total += v;
        c.require(v == 0, "layout " + std::to_string(i) + " has " + std::to_string(v) + " violations");
    }
    return c.done("1000 layouts, " + std::to_string(total) + " violations");
}

Outcome selector_equivalence() {
    Checker c;
    const auto phi = downsample_embedder();
    std::size_t pools = 0, proposals = 0;
    for (std::uint64_t scene = 0; scene < 50; ++scene) {
        for (std::size_t k = 1; k <= 4; ++k) {
            for (std::size_t nb = 1; nb <= 3; ++nb) {
                std::mt19937_64 rng(1005 + 1000 * scene + 10 * k + nb);
                const auto pool = gen::selector_pool(rng, k, nb);
                const std::string where = "scene " + std::to_string(scene) + " K=" + std::to_string(k) +
                                          " B=" + std::to_string(nb);
                ++pools;
                const MaskedFeatures f = masked_features(pool.foregrounds, pool.backgrounds, phi);
                std::size_t prev_valid = 0;
                std::set<oracle::ProposalKey> prev_local;
                for (double tl : {0.9, 0.97, 0.99, 1.0}) {
                    const auto valid = valid_foreground_subsets(f.fg, tl, 5);
                    c.require(valid.size() >= prev_valid, where + ": valid subsets shrank as tau_local rose");
                    prev_valid = valid.size();
                    std::set<oracle::ProposalKey> prev_global;
                    bool first = true;
                    for (double tg : {0.9, 0.97, 0.99, 0.999}) {
                        const SelectorConfig cfg{tl, tg, 0.95, 5};
                        const auto got =
                            gen::proposal_keys(select_proposals(pool.source, pool.backgrounds, pool.foregrounds, phi, cfg));
                        c.require(got == oracle::select_proposals(pool.source, pool.backgrounds, pool.foregrounds, phi, cfg),
                                  where + ": differs from brute force");
                        if (!first)
                            c.require(std::includes(prev_global.begin(), prev_global.end(), got.begin(), got.end()),
                                      where + ": raising tau_global added proposals");
                        if (tg == 0.9) {
                            c.require(std::includes(got.begin(), got.end(), prev_local.begin(), prev_local.end()),
                                      where + ": raising tau_local removed proposals");
                            prev_local = got;
                        }
                        prev_global = got;
                        first = false;
                        proposals += got.size();
                    }
                }
            }
        }
    }
    c.require(proposals > 0, "no scene produced a proposal");
    return c.done(std::to_string(pools) + " pools, " + std::to_string(proposals) + " proposals matched");
}

Outcome morphology_oracles() {
    Checker c;
    std::mt19937_64 rng(1006);
    for (int i = 0; i < 50; ++i) {
        const AlphaMask m = oracle::random_binary_mask(rng, 32, 32, 0.2 + 0.6 * oracle::unit(rng));
        const int r = 1 + static_cast<int>(rng() % 4);
        c.require(erode_alpha(m, r) == oracle::disk_morphology(m, r, true), "erode mismatch on mask " + std::to_string(i));
        c.require(dilate_alpha(m, r) == oracle::disk_morphology(m, r, false), "dilate mismatch on mask " + std::to_string(i));
    }
    double worst = 0.0;
    for (double sigma : {0.5, 1.0, 2.0, 3.0}) {
        AlphaMask blob(64, 64);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if ((y - 32) * (y - 32) + (x - 30) * (x - 30) <= 100) blob.at(y, x) = 1.0f;
        double m0 = 0.0, m1 = 0.0;
        for (float v : blob.data()) m0 += v;
        const AlphaMask blurred = blur_boundary(blob, sigma);
        for (float v : blurred.data()) m1 += v;
        const double rel = std::abs(m1 - m0) / m0;
        worst = std::max(worst, rel);
        c.require(rel <= 1e-4, "blur sigma " + fmt(sigma) + " mass error " + fmt(rel));
    }
    return c.done("50 masks exact, worst blur mass error " + fmt(worst));
}

Outcome metric_monotonicity() {
    Checker c;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const LayeredSample gt = scene_truth(random_scene(1007 + s, "gt", 32, 40, 1 + static_cast<int>(s % 4)));
        for (const auto& m : evaluate_edit_curve(gt, gt, 5)) {
            c.require(m.rgb_l1 == 0.0, "ground truth rgb_l1 " + fmt(m.rgb_l1));
            c.require(m.alpha_soft_iou == 1.0, "ground truth iou " + fmt(m.alpha_soft_iou));
        }
    }
    std::mt19937_64 rng(1007);
    double gain = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto f = gen::corrupted_fixture(rng, i);
        const auto curve = evaluate_edit_curve(f.pred, f.gt, 5);
        c.require(curve.size() == 6, "curve length");
        for (std::size_t e = 0; e + 1 < curve.size(); ++e) {
            c.require(curve[e + 1].rgb_l1 <= curve[e].rgb_l1, "fixture " + std::to_string(i) + ": rgb_l1 rose");
            c.require(curve[e + 1].alpha_soft_iou >= curve[e].alpha_soft_iou, "fixture " + std::to_string(i) + ": iou fell");
        }
        gain += curve.back().alpha_soft_iou - curve.front().alpha_soft_iou;
    }
    return c.done("50 fixtures monotone, mean iou gain " + fmt(gain / 50.0));
}

Outcome soft_iou_hand_values() {
    Checker c;
    const auto row = [](std::vector<float> v) {
        const int n = static_cast<int>(v.size());
        return AlphaMask::from_data(1, n, std::move(v));
    };
    const AlphaMask a = row({1, 1, 0, 0}), b = row({0, 1, 1, 0});
    c.require(alpha_soft_iou(a, a) == 1.0, "identical != 1");
    c.require(alpha_soft_iou(row({1, 1, 0, 0}), row({0, 0, 1, 1})) == 0.0, "disjoint != 0");
    c.require(alpha_soft_iou(a, b) == 1.0 / 3.0, "overlap != 1/3, got " + fmt(alpha_soft_iou(a, b)));
    return c.done("1, 0, 1/3 exact");
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        out[fs::relative(e.path(), root).string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return out;
}

Outcome mock_determinism() {
    Checker c;
    TempDir t("e2e");
    const auto t0 = Clock::now();
    std::ostringstream out, err;
    c.require(cli::run({"make-fixture", "--out", (t.path / "in").string(), "--scenes", "3", "--seed", "2024"}, out, err) == 0,
              "make-fixture failed: " + err.str());
    for (const char* run : {"a", "b"}) {
        const int code = cli::run({"curate", "--input", (t.path / "in").string(), "--out", (t.path / run).string(), "--mock",
                                   "--seed", "2024"},
                                  out, err);
        c.require(code == 0, std::string("curate run ") + run + " exited " + std::to_string(code));
    }
    const double dt = seconds_since(t0);
    c.require(dt <= 60.0, "took " + fmt(dt) + " s");
    if (!c.out.pass) return c.done("");

    const auto a = snapshot(t.path / "a"), b = snapshot(t.path / "b");
    c.require(a == b, "output trees differ");
    std::size_t manifests = 0;
    for (const auto& [name, bytes] : a) manifests += fs::path(name).filename() == kManifestFile;
    std::size_t scenes = 0;
    for (const auto& img : fs::directory_iterator(t.path / "in")) {
        if (img.path().extension() != ".png") continue;
        ++scenes;
        const std::string id = img.path().stem().string();
        const auto audit = nlohmann::json::parse(a.at("audit/" + id + ".json"));
        c.require(audit["status"] == "ok", id + " failed");
        c.require(!audit["samples"].empty(), id + " has no accepted sample");
    }
    c.require(scenes == 3, "expected 3 scenes, found " + std::to_string(scenes));
    return c.done(std::to_string(a.size()) + " files identical across runs, " + std::to_string(manifests) +
                  " samples, " + fmt(dt) + " s");
}

Outcome storage_round_trip() {
    Checker c;
    TempDir t("store");
    std::mt19937_64 rng(1010);
    float rgb = 0.0f, sh = 0.0f, rt = 0.0f;
    for (int i = 0; i < 20; ++i) {
        LayeredSample s = gen::random_sample(rng, 4 + static_cast<int>(rng() % 40), 4 + static_cast<int>(rng() % 40),
                                             static_cast<int>(rng() % 6));
        s.shadow = shadow_residual(s.source, composite(s.background, s.layers));
        const fs::path dir = t.path / ("s" + std::to_string(i));
        write_sample(s, dir);
        const LayeredSample r = read_sample(dir / kManifestFile);
        rgb = std::max({rgb, max_abs_difference(r.source.data(), s.source.data()),
                        max_abs_difference(r.background.data(), s.background.data())});
        c.require(r.layers.size() == s.layers.size(), "layer count changed");
        for (std::size_t k = 0; k < std::min(r.layers.size(), s.layers.size()); ++k) {
            rgb = std::max({rgb, max_abs_difference(r.layers[k].rgb.data(), s.layers[k].rgb.data()),
                            max_abs_difference(r.layers[k].alpha.data(), s.layers[k].alpha.data())});
        }
        sh = std::max(sh, max_abs_difference(r.shadow->data(), s.shadow->data()));
        rt = std::max(rt, max_abs_difference(gen::reassemble(r).data(), r.source.data()));
    }
    c.require(rgb <= 1.0f / 255.0f, "rgb/alpha error " + fmt(rgb));
    c.require(sh <= 1.0f / 65535.0f, "shadow error " + fmt(sh));
    c.require(rt <= kStoredRoundTripTolerance, "stored round trip " + fmt(rt));

    // Kill a rewrite before each file it would write.
    LayeredSample s = gen::random_sample(rng, 10, 12, 3);
    s.shadow = shadow_residual(s.source, composite(s.background, s.layers));
    std::vector<std::string> files;
    WriteOptions record;
    record.before_write = [&](std::string_view name) { files.emplace_back(name); };
    write_sample(s, t.path / "probe", {}, record);
    c.require(files.size() >= 9, "expected every file to pass through the write hook");
    for (const auto& victim : files) {
        const fs::path dir = t.path / "crash";
        write_sample(s, dir);
        WriteOptions opts;
        opts.before_write = [&](std::string_view name) {
            if (name == victim) throw IoError("simulated crash");
        };
        bool threw = false;
        try {
            write_sample(s, dir, {}, opts);
        } catch (const IoError&) {
            threw = true;
        }
        c.require(threw, "crash before " + victim + " did not surface");
        bool readable = true;
        try {
            read_sample(dir / kManifestFile);
        } catch (const DatasetError&) {
            readable = false;
        }
        c.require(!readable, "partial sample readable after crash before " + victim);
        for (const auto& m : list_samples(t.path)) c.require(m.sample_id != "crash", "partial sample listed");
        fs::remove_all(dir);
    }
    return c.done("rgb " + fmt(rgb) + ", shadow " + fmt(sh) + ", round trip " + fmt(rt) + ", " +
                  std::to_string(files.size()) + " crash points safe");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"recomposition exactness", recomposition_exactness},
        {"flow path endpoints and velocities", flow_paths},
        {"oracle loss is zero", oracle_loss_zero},
        {"attention and position contracts", attention_contracts},
        {"selector equals brute force, monotone", selector_equivalence},
        {"morphology oracles and blur mass", morphology_oracles},
        {"metric fixed points and monotonicity", metric_monotonicity},
        {"soft IoU hand values", soft_iou_hand_values},
        {"end-to-end mock determinism", mock_determinism},
        {"storage round trip and crash consistency", storage_round_trip},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
