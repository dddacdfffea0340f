#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/image.hpp"
#include "layerforge/selector.hpp"

namespace layerforge {

struct ForegroundDetection {
    bool present = false;
    std::string description;
};

class AgentService {
public:
    virtual ~AgentService() = default;
    virtual ForegroundDetection detect_foreground(const Image& image) = 0;
    virtual std::string removal_instruction(const Image& image, const std::string& description) = 0;
    virtual std::string background_removal_instruction(const Image& image, const std::string& description) = 0;
};

class EditorService {
public:
    virtual ~EditorService() = default;
    /// Returns an image of the same dimensions.
    virtual Image apply(const Image& image, const std::string& instruction) = 0;
};

class SegmenterService {
public:
    virtual ~SegmenterService() = default;
    virtual AlphaMask segment(const Image& image) = 0;
    virtual std::string id() const = 0;
};

struct Verdict {
    bool accept = false;
    std::vector<std::string> reasons;
};

class VerifierService {
public:
    virtual ~VerifierService() = default;
    virtual Verdict verify(const Image& rendered, const LayeredSample& sample) = 0;
};

class EmbedderService {
public:
    virtual ~EmbedderService() = default;
    virtual EmbeddingVector embed(const Image& image) = 0;
};

/// Structured failure of a remote (or mock) tool call.
class ServiceError : public std::runtime_error {
public:
    ServiceError(std::string service, std::string operation, std::string request_id, int attempts,
                 std::string message);

    const std::string& service() const { return service_; }
    const std::string& operation() const { return operation_; }
    const std::string& request_id() const { return request_id_; }
    int attempts() const { return attempts_; }
    const std::string& detail() const { return detail_; }

    nlohmann::json to_json() const;

private:
    std::string service_;
    std::string operation_;
    std::string request_id_;
    int attempts_;
    std::string detail_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{200};
    double multiplier = 2.0;
};

struct ToolEndpoints {
    std::string agent_url;
    std::string editor_url;
    std::vector<std::string> segmenter_urls;
    std::string embedder_url;
    std::string verifier_url;
    double timeout_seconds = 60.0;
    int retries = 2;  // extra attempts after the first
};

/// Throws ConfigError on malformed URLs, a missing segmenter or negative retries.
void validate(const ToolEndpoints& endpoints);
bool is_valid_service_url(const std::string& url);

void to_json(nlohmann::json& j, const ToolEndpoints& endpoints);
void from_json(const nlohmann::json& j, ToolEndpoints& endpoints);

/// Everything one image job talks to.
struct ServiceBundle {
    std::shared_ptr<AgentService> agent;
    std::shared_ptr<EditorService> editor;
    std::vector<std::shared_ptr<SegmenterService>> segmenters;
    EmbeddingProvider embedder;
    std::shared_ptr<VerifierService> verifier;
    std::map<std::string, std::string> ids;  // recorded in provenance
};

/// Adapts an embedder service to the selector's provider contract.
EmbeddingProvider as_provider(std::shared_ptr<EmbedderService> service);

}  // namespace layerforge
