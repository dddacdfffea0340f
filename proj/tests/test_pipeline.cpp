#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "generators.hpp"
#include "layerforge/dataset_io.hpp"
#include "layerforge/http_services.hpp"
#include "layerforge/mock_scene.hpp"
#include "layerforge/mock_services.hpp"
#include "layerforge/pipeline.hpp"
#include "layerforge/png_io.hpp"

using namespace layerforge;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("lf_pipe_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ServiceBundle mock_factory(const std::string&, const fs::path& path, std::uint64_t) {
    return make_mock_bundle(read_scene_sidecar(path));
}

void make_scenes(const fs::path& dir, int n, std::uint64_t seed = 100) {
    fs::create_directories(dir);
    for (int i = 0; i < n; ++i) {
        const std::string id = "scene" + std::to_string(i);
        write_scene_fixture(random_scene(seed + i, id, 40, 48, 1 + i % 3), dir / (id + ".png"));
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every file below root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

}  // namespace

TEST_CASE("image seeds depend on run seed and id") {
    CHECK(image_seed(1, "a") == image_seed(1, "a"));
    CHECK(image_seed(1, "a") != image_seed(2, "a"));
    CHECK(image_seed(1, "a") != image_seed(1, "b"));
}

TEST_CASE("empty input directory") {
    TempDir t("empty");
    fs::create_directories(t.path / "in");
    const BatchResult r = run_batch(t.path / "in", t.path / "out", {}, mock_factory);
    CHECK(r.outcomes.empty());
    CHECK(r.sample_count() == 0);
    CHECK(r.failure_count() == 0);
}

TEST_CASE("mock batch writes audits and loadable samples") {
    TempDir t("batch");
    make_scenes(t.path / "in", 3);
    std::ofstream(t.path / "in" / "notes.txt") << "ignored";
    PipelineConfig cfg;
    cfg.seed = 7;
    const BatchResult r = run_batch(t.path / "in", t.path / "out", cfg, mock_factory);
    REQUIRE(r.outcomes.size() == 3);
    CHECK(r.failure_count() == 0);
    for (const auto& o : r.outcomes) {
        CHECK(o.ok);
        CHECK(o.error.is_null());
        CHECK(o.manifests.size() >= 1);
        const fs::path audit_path = t.path / "out" / "audit" / (o.image_id + ".json");
        REQUIRE(fs::exists(audit_path));
        const auto audit = nlohmann::json::parse(slurp(audit_path));
        CHECK(audit == o.audit);
        CHECK(audit["status"] == "ok");
        CHECK(audit["samples"].size() == o.manifests.size());
        CHECK(audit["bic"]["steps"].size() == audit["fic"]["layers"].size());
        for (const auto& p : audit["lic"]["proposals"]) CHECK(p["status"] != "pending");
        for (const auto& m : o.manifests) {
            const fs::path dir = t.path / "out" / "samples" / m.sample_id;
            const LayeredSample s = read_sample(dir / "manifest.json");
            CHECK(max_abs_difference(gen::reassemble(s).data(), s.source.data()) <= kStoredRoundTripTolerance);
        }
    }
    CHECK(list_samples(t.path / "out" / "samples").size() == r.sample_count());
}

TEST_CASE("one broken image does not stop the batch") {
    TempDir t("iso");
    make_scenes(t.path / "in", 2);
    std::ofstream(t.path / "in" / "a_corrupt.png") << "not a png";
    write_image_png(t.path / "in" / "z_nosidecar.png", render_state(random_scene(9, "z_nosidecar", 24, 24, 1), 0));
    PipelineConfig cfg;
    cfg.workers = 2;
    const BatchResult r = run_batch(t.path / "in", t.path / "out", cfg, mock_factory);
    REQUIRE(r.outcomes.size() == 4);
    CHECK(r.failure_count() == 2);
    CHECK(r.outcomes[0].image_id == "a_corrupt");
    CHECK_FALSE(r.outcomes[0].ok);
    CHECK(r.outcomes[0].error["message"].get<std::string>().size() > 0);
    CHECK(r.outcomes[1].ok);
    CHECK(r.outcomes[2].ok);
    CHECK_FALSE(r.outcomes[3].ok);
    CHECK(fs::exists(t.path / "out" / "audit" / "a_corrupt.json"));
    CHECK(fs::exists(t.path / "out" / "audit" / "z_nosidecar.json"));
    CHECK(r.sample_count() >= 2);
}

TEST_CASE("output does not depend on the worker count") {
    TempDir t("det");
    make_scenes(t.path / "in", 4, 300);
    PipelineConfig cfg;
    cfg.seed = 11;
    cfg.workers = 1;
    run_batch(t.path / "in", t.path / "one", cfg, mock_factory);
    cfg.workers = 3;
    run_batch(t.path / "in", t.path / "three", cfg, mock_factory);
    const auto a = snapshot(t.path / "one");
    const auto b = snapshot(t.path / "three");
    CHECK(a.size() > 4);
    CHECK(a == b);
}

TEST_CASE("large inputs are downscaled and the original size is audited") {
    TempDir t("big");
    fs::create_directories(t.path / "in");
    write_scene_fixture(random_scene(5, "big", 60, 80, 1), t.path / "in" / "big.png");
    PipelineConfig cfg;
    cfg.max_side = 40;
    // The mocks recognise states at scene resolution, so render them at the working size.
    const BatchResult r = run_batch(t.path / "in", t.path / "out", cfg,
                                    [](const std::string&, const fs::path& p, std::uint64_t) {
                                        SceneSpec s = read_scene_sidecar(p);
                                        s.height = 30;
                                        s.width = 40;
                                        return make_mock_bundle(s);
                                    });
    REQUIRE(r.outcomes.size() == 1);
    const auto& audit = r.outcomes[0].audit;
    CHECK(audit["input"]["height"] == 30);
    CHECK(audit["input"]["original"]["width"] == 80);
}

TEST_CASE("editor outage becomes a structured per-image failure") {
    TempDir t("fault");
    make_scenes(t.path / "in", 1);
    const SceneSpec spec = read_scene_sidecar(t.path / "in" / "scene0.png");
    ServiceBundle local = make_mock_bundle(spec);
    ServiceHost host;
    host.mount_editor(local.editor);
    host.inject_fault("/editor/apply", {100, 503});
    host.start();

    ToolEndpoints ep;
    ep.editor_url = host.url("/editor");
    ep.timeout_seconds = 5;
    ep.retries = 1;
    const BatchResult r = run_batch(t.path / "in", t.path / "out", {}, [&](const std::string&, const fs::path&, std::uint64_t) {
        ServiceBundle b = local;
        b.editor = std::make_shared<HttpEditor>(ep.editor_url, ClientOptions{5.0, {2, 5ms, 2.0}, 0, "job"});
        return b;
    });
    REQUIRE(r.outcomes.size() == 1);
    const auto& o = r.outcomes[0];
    CHECK_FALSE(o.ok);
    CHECK(o.error["service"] == "editor");
    CHECK(o.error["operation"] == "apply");
    CHECK(o.error["attempts"] == 2);
    CHECK(o.manifests.empty());
    const auto audit = nlohmann::json::parse(slurp(t.path / "out" / "audit" / "scene0.json"));
    CHECK(audit["status"] == "failed");
    CHECK(audit["error"]["request_id"] == o.error["request_id"]);
}
