#include "layerforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "layerforge/curators.hpp"
#include "layerforge/png_io.hpp"
#include "layerforge/seeds.hpp"

namespace layerforge {

namespace fs = std::filesystem;

namespace {

nlohmann::json error_json(const std::exception& e) {
    if (const auto* se = dynamic_cast<const ServiceError*>(&e)) return se->to_json();
    return {{"type", "error"}, {"message", e.what()}};
}

std::string sample_name(const std::string& image_id, std::size_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%03zu", n);
    return image_id + "-" + buf;
}

void write_audit(const fs::path& out_dir, const std::string& image_id, const nlohmann::json& audit) {
    const fs::path dir = out_dir / "audit";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / (image_id + ".json"), audit.dump(2) + "\n");
}

nlohmann::json services_json(const ServiceBundle& services) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : services.ids) j[k] = v;
    return j;
}

}  // namespace

std::uint64_t image_seed(std::uint64_t run_seed, const std::string& image_id) {
    return derive_seed(run_seed, "image/" + image_id);
}

ImageOutcome run_pipeline(const std::string& image_id, const Image& image, ServiceBundle& services,
                          const PipelineConfig& config, const fs::path& out_dir) {
    ImageOutcome outcome;
    outcome.image_id = image_id;
    const std::uint64_t seed = image_seed(config.seed, image_id);

    nlohmann::json audit = {{"image_id", image_id},
                            {"image_seed", seed},
                            {"input", {{"height", image.height()}, {"width", image.width()}}},
                            {"services", services_json(services)},
                            {"selector", config.selector},
                            {"samples", nlohmann::json::array()}};
    try {
        const BicResult bic = curate_backgrounds(image, *services.agent, *services.editor, config.max_steps);
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t i = 0; i < bic.backgrounds.size(); ++i) {
            steps.push_back({{"description", bic.descriptions[i]}, {"instruction", bic.instructions[i]}});
        }
        audit["bic"] = {{"steps", steps}, {"warnings", bic.warnings}};

        const FicResult fic = curate_foregrounds(bic.step_inputs, bic.descriptions, *services.agent,
                                                 *services.editor, services.segmenters, config.fusion);
        nlohmann::json fic_layers = nlohmann::json::array();
        std::vector<ForegroundLayer> pool;
        for (const auto& item : fic.layers) {
            fic_layers.push_back({{"step", item.step},
                                  {"instruction", item.instruction},
                                  {"experts", item.expert_ids},
                                  {"coverage", coverage(item.layer.alpha)}});
            pool.push_back(item.layer);
        }
        audit["fic"] = {{"layers", fic_layers}, {"failures", fic.failures}};

        nlohmann::json lic = {{"proposals", nlohmann::json::array()}};
        if (bic.backgrounds.empty() || pool.empty()) {
            lic["skipped"] = bic.backgrounds.empty() ? "no backgrounds" : "no foregrounds";
        } else {
            const LicResult result =
                curate_layered(image, bic.backgrounds, pool, services.embedder, config.selector, *services.verifier);
            lic["kept_backgrounds"] = result.kept_backgrounds;
            lic["kept_foregrounds"] = result.kept_foregrounds;

            std::vector<std::string> sample_ids(result.samples.size());
            for (std::size_t s = 0; s < result.samples.size(); ++s) sample_ids[s] = sample_name(image_id, s);

            for (const auto& record : result.records) {
                nlohmann::json entry = {{"proposal", record.proposal},
                                        {"status", to_string(record.status)},
                                        {"reasons", record.reasons},
                                        {"sample_id", nullptr}};
                if (record.sample_index) entry["sample_id"] = sample_ids[*record.sample_index];
                lic["proposals"].push_back(entry);
            }
            audit["lic"] = lic;

            for (const auto& record : result.records) {
                if (!record.sample_index) continue;
                const std::string& sid = sample_ids[*record.sample_index];
                const LayeredSample& sample = result.samples[*record.sample_index];

                nlohmann::json degradations = nlohmann::json::array();
                for (std::size_t k = 0; k < sample.layers.size(); ++k) {
                    degradations.push_back(sample_degradation(
                        derive_seed(seed, "degrade/" + sid + "/" + std::to_string(k + 1)), config.degradation));
                }
                nlohmann::json steps_used = nlohmann::json::array();
                for (auto f : record.proposal.foreground_ids) steps_used.push_back(fic.layers[f].step);

                const nlohmann::json provenance = {{"image_id", image_id},
                                                   {"run_seed", config.seed},
                                                   {"image_seed", seed},
                                                   {"selector", config.selector},
                                                   {"services", services_json(services)},
                                                   {"proposal", record.proposal},
                                                   {"foreground_steps", steps_used},
                                                   {"degradations", degradations},
                                                   {"degradation_ranges", config.degradation}};
                outcome.manifests.push_back(write_sample(sample, out_dir / "samples" / sid, provenance));
                audit["samples"].push_back(sid);
            }
        }
        if (!audit.contains("lic")) audit["lic"] = lic;
        outcome.ok = true;
        outcome.error = nullptr;
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = error_json(e);
    }
    audit["status"] = outcome.ok ? "ok" : "failed";
    audit["error"] = outcome.error;
    outcome.audit = audit;
    try {
        write_audit(out_dir, image_id, audit);
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = error_json(e);
    }
    return outcome;
}

std::size_t BatchResult::sample_count() const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += o.manifests.size();
    return n;
}

std::size_t BatchResult::failure_count() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.ok; }));
}

std::vector<fs::path> list_input_images(const fs::path& input_dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(input_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

BatchResult run_batch(const fs::path& input_dir, const fs::path& out_dir, const PipelineConfig& config,
                      const ServiceFactory& factory) {
    const auto images = list_input_images(input_dir);
    BatchResult result;
    result.outcomes.resize(images.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < images.size(); i = next.fetch_add(1)) {
            const std::string image_id = images[i].stem().string();
            try {
                const Image original = read_image_png(images[i]);
                const Image image = resize_within(original, config.max_side);
                ServiceBundle services = factory(image_id, images[i], image_seed(config.seed, image_id));
                result.outcomes[i] = run_pipeline(image_id, image, services, config, out_dir);
                if (image.height() != original.height() || image.width() != original.width()) {
                    result.outcomes[i].audit["input"]["original"] = {{"height", original.height()},
                                                                     {"width", original.width()}};
                    write_audit(out_dir, image_id, result.outcomes[i].audit);
                }
            } catch (const std::exception& e) {
                ImageOutcome& o = result.outcomes[i];
                o.image_id = image_id;
                o.ok = false;
                o.error = error_json(e);
                o.audit = {{"image_id", image_id}, {"status", "failed"}, {"error", o.error}};
                try {
                    write_audit(out_dir, image_id, o.audit);
                } catch (const std::exception&) {
                    // Reported through the outcome already.
                }
            }
        }
    };

    const int n = std::clamp(config.workers, 1, std::max(1, static_cast<int>(images.size())));
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
    }
    return result;
}

}  // namespace layerforge
