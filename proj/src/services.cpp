#include "layerforge/services.hpp"

#include <regex>

namespace layerforge {

ServiceError::ServiceError(std::string service, std::string operation, std::string request_id, int attempts,
                           std::string message)
    : std::runtime_error(service + "." + operation + " failed after " + std::to_string(attempts) +
                         " attempt(s) [" + request_id + "]: " + message),
      service_(std::move(service)),
      operation_(std::move(operation)),
      request_id_(std::move(request_id)),
      attempts_(attempts),
      detail_(std::move(message)) {}

nlohmann::json ServiceError::to_json() const {
    return {{"service", service_},
            {"operation", operation_},
            {"request_id", request_id_},
            {"attempts", attempts_},
            {"message", detail_}};
}

bool is_valid_service_url(const std::string& url) {
    static const std::regex pattern(R"(^https?://[A-Za-z0-9.\-]+(:[0-9]{1,5})?(/[A-Za-z0-9._~\-/]*)?$)");
    return std::regex_match(url, pattern);
}

void validate(const ToolEndpoints& endpoints) {
    auto check = [](const std::string& name, const std::string& url) {
        if (!is_valid_service_url(url)) throw ConfigError("invalid " + name + " URL '" + url + "'");
    };
    check("agent", endpoints.agent_url);
    check("editor", endpoints.editor_url);
    if (endpoints.segmenter_urls.empty()) throw ConfigError("at least one segmenter URL is required");
    for (const auto& url : endpoints.segmenter_urls) check("segmenter", url);
    check("embedder", endpoints.embedder_url);
    check("verifier", endpoints.verifier_url);
    if (endpoints.retries < 0) throw ConfigError("retries must be >= 0");
    if (!(endpoints.timeout_seconds > 0.0)) throw ConfigError("timeout must be > 0");
}

void to_json(nlohmann::json& j, const ToolEndpoints& e) {
    j = nlohmann::json{{"agent_url", e.agent_url},       {"editor_url", e.editor_url},
                       {"segmenter_urls", e.segmenter_urls}, {"embedder_url", e.embedder_url},
                       {"verifier_url", e.verifier_url}, {"timeout", e.timeout_seconds},
                       {"retries", e.retries}};
}

void from_json(const nlohmann::json& j, ToolEndpoints& e) {
    e.agent_url = j.value("agent_url", e.agent_url);
    e.editor_url = j.value("editor_url", e.editor_url);
    e.segmenter_urls = j.value("segmenter_urls", e.segmenter_urls);
    e.embedder_url = j.value("embedder_url", e.embedder_url);
    e.verifier_url = j.value("verifier_url", e.verifier_url);
    e.timeout_seconds = j.value("timeout", e.timeout_seconds);
    e.retries = j.value("retries", e.retries);
}

EmbeddingProvider as_provider(std::shared_ptr<EmbedderService> service) {
    return [service = std::move(service)](const Image& image) { return service->embed(image); };
}

}  // namespace layerforge
