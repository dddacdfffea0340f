#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "layerforge/services.hpp"

namespace layerforge {

struct ClientOptions {
    double timeout_seconds = 60.0;
    RetryPolicy retry;
    std::uint64_t seed = 0;
    std::string request_prefix = "req";  // request ids are <prefix>/<service>/<operation>/<n>
};

/// POSTs wire envelopes to <base_url><operation>. Transport errors, 5xx and
/// "unavailable" errors are retried with exponential backoff under the same
/// request id; anything else fails at once. Failures surface as ServiceError.
class JsonServiceClient {
public:
    JsonServiceClient(std::string service, const std::string& base_url, ClientOptions options);

    nlohmann::json call(const std::string& operation, const nlohmann::json& payload);

    const std::string& base_url() const { return base_url_; }

private:
    std::string service_;
    std::string base_url_;
    std::string origin_;       // scheme://host:port
    std::string path_prefix_;  // path part of base_url, no trailing slash
    ClientOptions options_;
    std::atomic<std::uint64_t> counter_{0};
};

class HttpAgent : public AgentService {
public:
    HttpAgent(const std::string& url, ClientOptions options) : client_("agent", url, std::move(options)) {}
    ForegroundDetection detect_foreground(const Image& image) override;
    std::string removal_instruction(const Image& image, const std::string& description) override;
    std::string background_removal_instruction(const Image& image, const std::string& description) override;

private:
    JsonServiceClient client_;
};

class HttpEditor : public EditorService {
public:
    HttpEditor(const std::string& url, ClientOptions options) : client_("editor", url, std::move(options)) {}
    Image apply(const Image& image, const std::string& instruction) override;

private:
    JsonServiceClient client_;
};

class HttpSegmenter : public SegmenterService {
public:
    HttpSegmenter(const std::string& url, ClientOptions options)
        : client_("segmenter", url, std::move(options)), id_(url) {}
    AlphaMask segment(const Image& image) override;
    std::string id() const override { return id_; }

private:
    JsonServiceClient client_;
    std::string id_;
};

class HttpEmbedder : public EmbedderService {
public:
    HttpEmbedder(const std::string& url, ClientOptions options) : client_("embedder", url, std::move(options)) {}
    EmbeddingVector embed(const Image& image) override;

private:
    JsonServiceClient client_;
};

class HttpVerifier : public VerifierService {
public:
    HttpVerifier(const std::string& url, ClientOptions options) : client_("verifier", url, std::move(options)) {}
    Verdict verify(const Image& rendered, const LayeredSample& sample) override;

private:
    JsonServiceClient client_;
};

/// Clients for every endpoint. Attempts per call = endpoints.retries + 1.
ServiceBundle make_http_bundle(const ToolEndpoints& endpoints, const std::string& request_prefix, std::uint64_t seed,
                               std::chrono::milliseconds base_delay = std::chrono::milliseconds{200});

/// Misbehaviour for the first `count` requests to one path: wait `delay`,
/// then answer with `status`. 5xx faults carry the "unavailable" code, other
/// errors "bad_request"; status 200 serves the request normally after the
/// delay.
struct FaultRule {
    int count = 0;
    int status = 503;
    std::chrono::milliseconds delay{0};
};

/// Loopback server exposing in-process service implementations over the wire
/// protocol. Used for integration tests and for serving mocks to other
/// processes.
class ServiceHost {
public:
    ServiceHost();
    ~ServiceHost();
    ServiceHost(const ServiceHost&) = delete;
    ServiceHost& operator=(const ServiceHost&) = delete;

    void mount_agent(std::shared_ptr<AgentService> service, const std::string& prefix = "/agent");
    void mount_editor(std::shared_ptr<EditorService> service, const std::string& prefix = "/editor");
    void mount_segmenter(std::shared_ptr<SegmenterService> service, const std::string& prefix);
    void mount_embedder(std::shared_ptr<EmbedderService> service, const std::string& prefix = "/embedder");
    void mount_verifier(std::shared_ptr<VerifierService> service, const std::string& prefix = "/verifier");

    /// `path` is the full request path, e.g. "/editor/apply".
    void inject_fault(const std::string& path, FaultRule rule);

    /// Binds 127.0.0.1 on a free port and serves on a background thread.
    int start();
    void stop();

    int port() const;
    std::string url(const std::string& prefix) const;

    /// Request ids received on `path`, in arrival order (faulted ones included).
    std::vector<std::string> request_ids(const std::string& path) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace layerforge
