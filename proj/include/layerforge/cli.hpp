#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "layerforge/mock_services.hpp"
#include "layerforge/pipeline.hpp"
#include "layerforge/services.hpp"

namespace layerforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitIo = 4;

struct RunConfig {
    bool mock = false;
    std::optional<std::uint64_t> seed;
    PipelineConfig pipeline;
    ToolEndpoints endpoints;
    MockVerifierConfig mock_verifier;
    int retry_base_delay_ms = 200;
};

/// Parses a JSON run configuration. Unknown keys are rejected. Throws
/// ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// LAYERFORGE_{AGENT,EDITOR,EMBEDDER,VERIFIER}_URL and
/// LAYERFORGE_SEGMENTER_URLS (comma separated).
void apply_env_overrides(ToolEndpoints& endpoints);

/// Entry point behind the executable. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace layerforge::cli
