#include "layerforge/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "layerforge/compose.hpp"
#include "layerforge/dataset_io.hpp"
#include "layerforge/degradation.hpp"
#include "layerforge/flow.hpp"
#include "layerforge/http_services.hpp"
#include "layerforge/metrics.hpp"
#include "layerforge/mock_scene.hpp"
#include "layerforge/png_io.hpp"
#include "layerforge/seeds.hpp"

namespace layerforge::cli {

namespace fs = std::filesystem;

namespace {

// Signals an exit code from deep inside a command.
struct Exit {
    int code;
    std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw Exit{kExitUsage, message}; }

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig rc;
    try {
        check_keys(j,
                   {"mode", "seed", "workers", "max_steps", "max_side", "selector", "degradation", "fusion_weights",
                    "endpoints", "mock_verifier", "retry_base_delay_ms"},
                   "run config");
        const std::string mode = j.value("mode", "http");
        if (mode != "mock" && mode != "http") throw ConfigError("mode must be \"mock\" or \"http\", got \"" + mode + "\"");
        rc.mock = mode == "mock";
        if (j.contains("seed")) rc.seed = j["seed"].get<std::uint64_t>();
        rc.pipeline.workers = j.value("workers", rc.pipeline.workers);
        rc.pipeline.max_steps = j.value("max_steps", rc.pipeline.max_steps);
        rc.pipeline.max_side = j.value("max_side", rc.pipeline.max_side);
        if (j.contains("selector")) {
            check_keys(j["selector"], {"tau_local", "tau_global", "tau_dup", "max_foregrounds"}, "selector");
            rc.pipeline.selector = j["selector"].get<SelectorConfig>();
        }
        if (j.contains("degradation")) {
            check_keys(j["degradation"], {"kinds", "radius", "sigma"}, "degradation");
            rc.pipeline.degradation = j["degradation"].get<DegradationRanges>();
        }
        rc.pipeline.fusion.weights = j.value("fusion_weights", rc.pipeline.fusion.weights);
        if (j.contains("endpoints")) {
            check_keys(j["endpoints"],
                       {"agent_url", "editor_url", "segmenter_urls", "embedder_url", "verifier_url", "timeout",
                        "retries"},
                       "endpoints");
            rc.endpoints = j["endpoints"].get<ToolEndpoints>();
        }
        if (j.contains("mock_verifier")) {
            const auto& v = j["mock_verifier"];
            check_keys(v, {"min_coverage", "max_coverage", "support_threshold", "max_residual"}, "mock_verifier");
            rc.mock_verifier.min_coverage = v.value("min_coverage", rc.mock_verifier.min_coverage);
            rc.mock_verifier.max_coverage = v.value("max_coverage", rc.mock_verifier.max_coverage);
            rc.mock_verifier.support_threshold = v.value("support_threshold", rc.mock_verifier.support_threshold);
            rc.mock_verifier.max_residual = v.value("max_residual", rc.mock_verifier.max_residual);
        }
        rc.retry_base_delay_ms = j.value("retry_base_delay_ms", rc.retry_base_delay_ms);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    return rc;
}

RunConfig load_run_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
    const auto bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

void apply_env_overrides(ToolEndpoints& endpoints) {
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    };
    if (auto v = env("LAYERFORGE_AGENT_URL")) endpoints.agent_url = *v;
    if (auto v = env("LAYERFORGE_EDITOR_URL")) endpoints.editor_url = *v;
    if (auto v = env("LAYERFORGE_EMBEDDER_URL")) endpoints.embedder_url = *v;
    if (auto v = env("LAYERFORGE_VERIFIER_URL")) endpoints.verifier_url = *v;
    if (auto v = env("LAYERFORGE_SEGMENTER_URLS")) {
        endpoints.segmenter_urls.clear();
        std::stringstream ss(*v);
        for (std::string item; std::getline(ss, item, ',');) {
            if (!item.empty()) endpoints.segmenter_urls.push_back(item);
        }
    }
}

namespace {

struct CurateArgs {
    std::string input;
    std::string out;
    std::string config;
    bool mock = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> max_steps;
    std::optional<double> tau_local, tau_global, tau_dup;
    std::optional<std::string> agent_url, editor_url, embedder_url, verifier_url;
    std::vector<std::string> segmenter_urls;
};

int cmd_curate(const CurateArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    apply_env_overrides(rc.endpoints);
    if (a.mock) rc.mock = true;
    if (a.seed) rc.seed = a.seed;
    if (a.workers) rc.pipeline.workers = *a.workers;
    if (a.max_steps) rc.pipeline.max_steps = *a.max_steps;
    if (a.tau_local) rc.pipeline.selector.tau_local = *a.tau_local;
    if (a.tau_global) rc.pipeline.selector.tau_global = *a.tau_global;
    if (a.tau_dup) rc.pipeline.selector.tau_dup = *a.tau_dup;
    if (a.agent_url) rc.endpoints.agent_url = *a.agent_url;
    if (a.editor_url) rc.endpoints.editor_url = *a.editor_url;
    if (a.embedder_url) rc.endpoints.embedder_url = *a.embedder_url;
    if (a.verifier_url) rc.endpoints.verifier_url = *a.verifier_url;
    if (!a.segmenter_urls.empty()) rc.endpoints.segmenter_urls = a.segmenter_urls;

    if (rc.mock && !rc.seed) throw ConfigError("mock mode requires a seed (--seed or \"seed\" in the config)");
    if (rc.pipeline.workers < 1) throw ConfigError("workers must be >= 1");
    if (rc.pipeline.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (rc.pipeline.max_side < 1) throw ConfigError("max_side must be >= 1");
    try {
        validate(rc.pipeline.selector);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!rc.mock) validate(rc.endpoints);
    rc.pipeline.seed = rc.seed.value_or(0);

    if (!fs::is_directory(a.input)) usage_error("input directory " + a.input + " does not exist");

    ServiceFactory factory;
    if (rc.mock) {
        factory = [verifier = rc.mock_verifier](const std::string&, const fs::path& path, std::uint64_t) {
            return make_mock_bundle(read_scene_sidecar(path), verifier);
        };
    } else {
        factory = [endpoints = rc.endpoints, delay = rc.retry_base_delay_ms](
                      const std::string& image_id, const fs::path&, std::uint64_t seed) {
            return make_http_bundle(endpoints, image_id, seed, std::chrono::milliseconds(delay));
        };
    }

    const BatchResult result = run_batch(a.input, a.out, rc.pipeline, factory);
    for (const auto& o : result.outcomes) {
        if (o.ok) {
            out << o.image_id << ": " << o.manifests.size() << " sample(s)\n";
        } else {
            err << o.image_id << ": failed: " << o.error.dump() << "\n";
        }
    }
    out << "images " << result.outcomes.size() << ", samples " << result.sample_count() << ", failed "
        << result.failure_count() << "\n";
    return kExitOk;
}

LayeredSample load_sample_arg(const std::string& manifest) {
    fs::path p = manifest;
    if (fs::is_directory(p)) p /= kManifestFile;
    return read_sample(p);
}

int cmd_compose(const std::string& manifest, const std::string& out_path, std::ostream& out) {
    const LayeredSample sample = load_sample_arg(manifest);
    const Image recomposed = composite(sample.background, sample.layers);
    write_image_png(out_path, recomposed);
    nlohmann::json report = {{"output", out_path}, {"layers", sample.layers.size()}};
    if (sample.shadow) {
        float worst = 0.0f;
        const auto s = sample.source.data();
        const auto r = recomposed.data();
        const auto d = sample.shadow->data();
        for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs((s[i] - d[i]) - r[i]));
        report["max_abs_diff_vs_source_minus_shadow"] = worst;
    }
    out << report.dump(2) << "\n";
    return kExitOk;
}

int cmd_shadow(const std::string& manifest, const std::string& out_path, std::ostream& out) {
    const LayeredSample sample = load_sample_arg(manifest);
    const Image recomposed = composite(sample.background, sample.layers);
    const ShadowResidual shadow = shadow_residual(sample.source, recomposed);
    write_file(out_path, encode_shadow_png(shadow));
    RecomposeDiagnostics diag;
    const Image restored = recompose(recomposed, shadow, &diag);
    const float err = max_abs_difference(restored.data(), sample.source.data());
    // Also check what a reader of the written file gets back.
    const ShadowResidual stored = decode_shadow_png(read_file(out_path));
    const float stored_err = max_abs_difference(recompose(recomposed, stored).data(), sample.source.data());
    out << nlohmann::json{{"output", out_path},
                          {"round_trip_max_abs_error", err},
                          {"stored_round_trip_max_abs_error", stored_err},
                          {"clamped_values", diag.clamped_values}}
               .dump(2)
        << "\n";
    return kExitOk;
}

struct DegradeArgs {
    std::string manifest;
    int layer = 1;
    std::string kind;
    std::optional<int> radius;
    std::optional<double> sigma;
    std::optional<std::uint64_t> sample_seed;
    std::string out;
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out) {
    DegradationSpec spec;
    if (a.sample_seed) {
        if (!a.kind.empty() || a.radius) usage_error("--sample-seed cannot be combined with --kind/--radius");
        spec = sample_degradation(*a.sample_seed);
    } else {
        if (a.kind.empty()) usage_error("--kind or --sample-seed is required");
        try {
            spec.kind = degradation_kind_from_string(a.kind);
        } catch (const std::invalid_argument& e) {
            usage_error(e.what());
        }
        if (!a.radius) usage_error("--radius is required");
        spec.radius = *a.radius;
        spec.blur_sigma = a.sigma;
        if (spec.kind == DegradationKind::blur && !spec.blur_sigma) spec.blur_sigma = spec.radius / 2.0;
        if (spec.radius < 1) usage_error("--radius must be >= 1");
    }

    const LayeredSample sample = load_sample_arg(a.manifest);
    if (a.layer < 1 || a.layer > static_cast<int>(sample.layers.size())) {
        usage_error("--layer must be in 1.." + std::to_string(sample.layers.size()));
    }
    const ForegroundLayer& layer = sample.layers[static_cast<std::size_t>(a.layer - 1)];
    try {
        validate_spec(spec, layer.alpha.height(), layer.alpha.width());
    } catch (const std::invalid_argument& e) {
        usage_error(e.what());
    }
    const ForegroundLayer degraded = degrade_layer(layer, spec);
    write_file(a.out, encode_mask_png(degraded.alpha));
    out << nlohmann::json{{"output", a.out}, {"layer", a.layer}, {"spec", spec}}.dump(2) << "\n";
    return kExitOk;
}

struct ObjectiveArgs {
    std::string manifest;
    double t = 0.5;
    std::uint64_t seed = 0;
    double lambda = 1.0;
    int sweep = 16;
};

double max_abs(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

int cmd_objective_check(const ObjectiveArgs& a, std::ostream& out) {
    if (!(a.t >= 0.0 && a.t <= 1.0)) usage_error("--t must lie in [0, 1]");
    if (!(a.lambda >= 0.0)) usage_error("--lambda must be >= 0");
    if (a.sweep < 0) usage_error("--sweep must be >= 0");
    const LayeredSample sample = load_sample_arg(a.manifest);

    std::vector<std::pair<TargetRole, Tensor>> targets;
    if (sample.shadow) targets.emplace_back(TargetRole::shadow, to_tensor(*sample.shadow));
    targets.emplace_back(TargetRole::background, to_tensor(sample.background));
    const std::size_t first_fg = targets.size();
    for (const auto& layer : sample.layers) targets.emplace_back(TargetRole::foreground, to_tensor(layer));

    std::vector<std::pair<std::size_t, Tensor>> degraded;
    nlohmann::json degraded_json = nlohmann::json::array();
    for (std::size_t k = 0; k < sample.layers.size(); ++k) {
        const DegradationSpec spec = sample_degradation(derive_seed(a.seed, "degrade/" + std::to_string(k + 1)));
        nlohmann::json entry = {{"layer", k + 1}, {"spec", spec}};
        try {
            validate_spec(spec, sample.layers[k].alpha.height(), sample.layers[k].alpha.width());
            degraded.emplace_back(first_fg + k, to_tensor(degrade_layer(sample.layers[k], spec)));
        } catch (const std::invalid_argument& e) {
            entry["skipped"] = e.what();
        }
        degraded_json.push_back(entry);
    }

    const FlowBatch batch = make_flow_batch(targets, degraded, a.t, a.lambda, a.seed);
    const Predictions pred = predict(make_oracle_predictor(batch), batch);
    const LossBreakdown loss = combined_loss_breakdown(pred.main, pred.aux, batch);

    bool t0 = true;
    bool t1 = true;
    for (const auto& target : batch.targets()) {
        t0 = t0 && interpolate(target.x0, target.eps, 0.0) == target.eps;
        t1 = t1 && interpolate(target.x0, target.eps, 1.0) == target.x0;
    }
    for (std::size_t i = 0; i < batch.degraded_count(); ++i) {
        const auto& d = batch.degraded(i);
        const auto& x0 = batch.targets()[d.foreground_index].x0;
        Tensor start = d.xd;
        for (std::size_t e = 0; e < start.size(); ++e) start[e] += d.eps[e];
        t0 = t0 && interpolate_aux(x0, d.xd, d.eps, 0.0) == start;
        t1 = t1 && interpolate_aux(x0, d.xd, d.eps, 1.0) == x0;
    }

    // Central differences along the path at seeded times.
    std::mt19937_64 rng(derive_seed(a.seed, "objective-check/sweep"));
    const double h = 1e-3;
    double worst_main = 0.0;
    double worst_aux = 0.0;
    for (int s = 0; s < a.sweep; ++s) {
        const double t = 0.01 + 0.98 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        for (const auto& target : batch.targets()) {
            const Tensor lo = interpolate(target.x0, target.eps, t - h);
            const Tensor hi = interpolate(target.x0, target.eps, t + h);
            const VelocityTargets v = velocity_targets(target.x0, std::nullopt, target.eps);
            Tensor fd = hi;
            for (std::size_t e = 0; e < fd.size(); ++e) fd[e] = (hi[e] - lo[e]) / (2 * h);
            worst_main = std::max(worst_main, max_abs(fd, v.v));
        }
        for (std::size_t i = 0; i < batch.degraded_count(); ++i) {
            const auto& d = batch.degraded(i);
            const auto& x0 = batch.targets()[d.foreground_index].x0;
            const Tensor lo = interpolate_aux(x0, d.xd, d.eps, t - h);
            const Tensor hi = interpolate_aux(x0, d.xd, d.eps, t + h);
            const VelocityTargets v = velocity_targets(x0, d.xd, d.eps);
            Tensor fd = hi;
            for (std::size_t e = 0; e < fd.size(); ++e) fd[e] = (hi[e] - lo[e]) / (2 * h);
            worst_aux = std::max(worst_aux, max_abs(fd, *v.v_aux));
        }
    }

    nlohmann::json target_json = nlohmann::json::array();
    for (const auto& target : batch.targets()) {
        target_json.push_back({{"role", to_string(target.role)}, {"shape", target.x0.shape()}});
    }
    out << nlohmann::json{
               {"manifest", a.manifest},
               {"t", a.t},
               {"seed", a.seed},
               {"lambda", a.lambda},
               {"targets", target_json},
               {"degraded", degraded_json},
               {"oracle_loss", {{"main", loss.main}, {"aux", loss.aux}, {"total", loss.total}}},
               {"oracle_loss_ok", loss.total <= 1e-10},
               {"endpoints", {{"t0_equals_eps", t0}, {"t1_equals_x0", t1}}},
               {"velocity_residual",
                {{"samples", a.sweep}, {"max_main", worst_main}, {"max_aux", worst_aux},
                 {"ok", worst_main <= 1e-6 && worst_aux <= 1e-6}}}}
               .dump(2)
        << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string pred;
    std::string gt;
    int max_edits = 5;
    std::string out;
    std::string rgb_mode = "on_white";
    bool edit_background = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    if (!fs::is_directory(a.gt)) usage_error("ground-truth directory " + a.gt + " does not exist");
    if (!fs::is_directory(a.pred)) usage_error("prediction directory " + a.pred + " does not exist");
    if (a.max_edits < 0) usage_error("--max-edits must be >= 0");
    EvalConfig config;
    if (a.rgb_mode == "on_white") {
        config.rgb_mode = RgbL1Mode::on_white;
    } else if (a.rgb_mode == "alpha_weighted") {
        config.rgb_mode = RgbL1Mode::alpha_weighted;
    } else {
        usage_error("--rgb-mode must be on_white or alpha_weighted");
    }
    config.edit_background = a.edit_background;

    std::map<std::string, fs::path> pred;
    std::map<std::string, fs::path> gt;
    for (const auto& m : list_samples(a.pred)) pred[m.sample_id] = m.directory / kManifestFile;
    for (const auto& m : list_samples(a.gt)) gt[m.sample_id] = m.directory / kManifestFile;

    std::vector<EvalPair> pairs;
    std::vector<std::string> unmatched;
    for (const auto& [id, path] : gt) {
        auto it = pred.find(id);
        if (it == pred.end()) {
            unmatched.push_back(id + " (no prediction)");
        } else {
            pairs.push_back({id, it->second, path});
        }
    }
    for (const auto& [id, path] : pred) {
        if (!gt.contains(id)) unmatched.push_back(id + " (no ground truth)");
    }

    const EvalReport report = evaluate_dataset(pairs, a.max_edits, config);
    const std::string table = format_table(report);
    out << table;
    for (const auto& u : unmatched) err << "unmatched: " << u << "\n";
    for (const auto& f : report.failures) err << "failed: " << f << "\n";

    if (!a.out.empty()) {
        std::error_code ec;
        fs::create_directories(a.out, ec);
        if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
        nlohmann::json j = to_json(report);
        j["unmatched"] = unmatched;
        write_file(fs::path(a.out) / "report.json", j.dump(2) + "\n");
        write_file(fs::path(a.out) / "table.txt", table);
    }
    return kExitOk;
}

int cmd_bucket(const std::string& root, const std::string& out_path, std::ostream& out) {
    if (!fs::is_directory(root)) usage_error("dataset directory " + root + " does not exist");
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, manifests] : bucketize(list_samples(root))) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& m : manifests) ids.push_back(m.sample_id);
        j[key.aspect_bin + "/" + std::to_string(key.layer_count)] = ids;
    }
    const std::string text = j.dump(2) + "\n";
    if (!out_path.empty()) write_file(out_path, text);
    out << text;
    return kExitOk;
}

struct FixtureArgs {
    std::string out;
    int scenes = 3;
    std::uint64_t seed = 0;
    int height = 96;
    int width = 128;
    int min_objects = 2;
    int max_objects = 3;
};

int cmd_make_fixture(const FixtureArgs& a, std::ostream& out) {
    if (a.scenes < 0) usage_error("--scenes must be >= 0");
    if (a.min_objects < 0 || a.max_objects < a.min_objects) usage_error("bad object count range");
    if (a.height < 8 || a.width < 8) usage_error("scene size must be at least 8x8");
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
    for (int i = 0; i < a.scenes; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%02d", i);
        const std::uint64_t s = derive_seed(a.seed, name);
        const int span = a.max_objects - a.min_objects + 1;
        const int n = a.min_objects + static_cast<int>(s % static_cast<std::uint64_t>(span));
        write_scene_fixture(random_scene(s, name, a.height, a.width, n), fs::path(a.out) / (std::string(name) + ".png"));
        out << name << ": " << n << " object(s)\n";
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layered-image dataset curation and evaluation", "layerforge"};
    app.require_subcommand(1);

    CurateArgs curate;
    auto* c = app.add_subcommand("curate", "Run the curation pipeline over a directory of images");
    c->add_option("--input", curate.input, "Directory of input PNGs")->required();
    c->add_option("--out", curate.out, "Output directory")->required();
    c->add_option("--config", curate.config, "JSON run configuration");
    c->add_flag("--mock", curate.mock, "Use the offline mock services (needs <image>.scene.json sidecars)");
    c->add_option("--seed", curate.seed, "Run seed");
    c->add_option("--workers", curate.workers, "Concurrent image jobs");
    c->add_option("--max-steps", curate.max_steps, "Background curation step cap");
    c->add_option("--tau-local", curate.tau_local);
    c->add_option("--tau-global", curate.tau_global);
    c->add_option("--tau-dup", curate.tau_dup);
    c->add_option("--agent-url", curate.agent_url);
    c->add_option("--editor-url", curate.editor_url);
    c->add_option("--segmenter-url", curate.segmenter_urls, "Repeatable");
    c->add_option("--embedder-url", curate.embedder_url);
    c->add_option("--verifier-url", curate.verifier_url);

    std::string compose_manifest, compose_out;
    auto* co = app.add_subcommand("compose", "Composite a sample's layers over its background");
    co->add_option("--manifest", compose_manifest, "Sample manifest or directory")->required();
    co->add_option("--out", compose_out, "Output PNG")->required();

    std::string shadow_manifest, shadow_out;
    auto* sh = app.add_subcommand("shadow", "Compute a sample's shadow residual");
    sh->add_option("--manifest", shadow_manifest, "Sample manifest or directory")->required();
    sh->add_option("--out", shadow_out, "Output 16-bit shadow PNG")->required();

    DegradeArgs degrade;
    auto* dg = app.add_subcommand("degrade", "Degrade one layer's alpha boundary");
    dg->add_option("--manifest", degrade.manifest, "Sample manifest or directory")->required();
    dg->add_option("--layer", degrade.layer, "1-based layer index");
    dg->add_option("--kind", degrade.kind, "erode | dilate | blur | expand_then_erode");
    dg->add_option("--radius", degrade.radius);
    dg->add_option("--sigma", degrade.sigma, "Blur sigma");
    dg->add_option("--sample-seed", degrade.sample_seed, "Draw a random degradation from this seed");
    dg->add_option("--out", degrade.out, "Output alpha PNG")->required();

    ObjectiveArgs objective;
    auto* ob = app.add_subcommand("objective-check", "Check the flow objective on a sample with the oracle predictor");
    ob->add_option("--manifest", objective.manifest, "Sample manifest or directory")->required();
    ob->add_option("--t", objective.t, "Path time in [0, 1]");
    ob->add_option("--seed", objective.seed);
    ob->add_option("--lambda", objective.lambda, "Auxiliary loss weight");
    ob->add_option("--sweep", objective.sweep, "Number of random times for the velocity check");

    EvalArgs eval;
    auto* ev = app.add_subcommand("eval", "Score predicted decompositions against ground truth");
    ev->add_option("--pred", eval.pred, "Prediction dataset root")->required();
    ev->add_option("--gt", eval.gt, "Ground-truth dataset root")->required();
    ev->add_option("--max-edits", eval.max_edits, "Largest edit budget");
    ev->add_option("--out", eval.out, "Directory for report.json and table.txt");
    ev->add_option("--rgb-mode", eval.rgb_mode, "on_white | alpha_weighted");
    ev->add_flag("--edit-background", eval.edit_background, "Allow edits to replace the background");

    std::string bucket_root, bucket_out;
    auto* bk = app.add_subcommand("bucket", "Group samples by aspect bin and layer count");
    bk->add_option("--root", bucket_root, "Dataset root")->required();
    bk->add_option("--out", bucket_out, "Write the bucket map to this file");

    FixtureArgs fixture;
    auto* fx = app.add_subcommand("make-fixture", "Write synthetic scenes for offline runs");
    fx->add_option("--out", fixture.out, "Output directory")->required();
    fx->add_option("--scenes", fixture.scenes);
    fx->add_option("--seed", fixture.seed);
    fx->add_option("--height", fixture.height);
    fx->add_option("--width", fixture.width);
    fx->add_option("--min-objects", fixture.min_objects);
    fx->add_option("--max-objects", fixture.max_objects);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (c->parsed()) return cmd_curate(curate, out, err);
        if (co->parsed()) return cmd_compose(compose_manifest, compose_out, out);
        if (sh->parsed()) return cmd_shadow(shadow_manifest, shadow_out, out);
        if (dg->parsed()) return cmd_degrade(degrade, out);
        if (ob->parsed()) return cmd_objective_check(objective, out);
        if (ev->parsed()) return cmd_eval(eval, out, err);
        if (bk->parsed()) return cmd_bucket(bucket_root, bucket_out, out);
        if (fx->parsed()) return cmd_make_fixture(fixture, out);
    } catch (const Exit& e) {
        err << e.message << "\n";
        return e.code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        err << "dataset error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace layerforge::cli
