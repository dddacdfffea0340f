#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "layerforge/http_services.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include "layerforge/seeds.hpp"
#include "layerforge/wire.hpp"

namespace layerforge {

namespace {

struct AttemptFailure {
    bool retryable = false;
    std::string message;
};

std::string operation_name(const std::string& operation) {
    return operation.empty() || operation[0] != '/' ? operation : operation.substr(1);
}

}  // namespace

JsonServiceClient::JsonServiceClient(std::string service, const std::string& base_url, ClientOptions options)
    : service_(std::move(service)), base_url_(base_url), options_(std::move(options)) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(base_url, m, re)) throw ConfigError("invalid " + service_ + " URL '" + base_url + "'");
    origin_ = m[1].str();
    path_prefix_ = m[2].str();
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (options_.retry.attempts < 1) throw ConfigError(service_ + ": attempts must be >= 1");
}

nlohmann::json JsonServiceClient::call(const std::string& operation, const nlohmann::json& payload) {
    const std::uint64_t n = counter_.fetch_add(1);
    const std::string request_id =
        options_.request_prefix + "/" + service_ + "/" + operation_name(operation) + "/" + std::to_string(n);
    const std::string body =
        wire::make_request(request_id, derive_seed(options_.seed, request_id), payload).dump();

    const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

    std::string last_error;
    int attempt = 0;
    for (attempt = 1; attempt <= options_.retry.attempts; ++attempt) {
        if (attempt > 1) {
            const double scale = std::pow(options_.retry.multiplier, attempt - 2);
            std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(
                options_.retry.base_delay * scale));
        }

        AttemptFailure failure;
        try {
            httplib::Client cli(origin_);
            cli.set_connection_timeout(timeout_us);
            cli.set_read_timeout(timeout_us);
            cli.set_write_timeout(timeout_us);
            const auto res = cli.Post(path_prefix_ + operation, body, "application/json");
            if (!res) {
                failure = {true, "transport: " + httplib::to_string(res.error())};
            } else {
                nlohmann::json reply;
                try {
                    reply = nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception&) {
                    reply = nullptr;
                }
                const bool server_side = res->status >= 500;
                if (reply.is_object() && reply.value("status", "") == "ok" && res->status == 200) {
                    return reply.value("payload", nlohmann::json::object());
                }
                if (reply.is_object() && reply.value("status", "") == "error") {
                    const auto& err = reply["error"];
                    const std::string code = err.value("code", "");
                    failure = {server_side || code == wire::kUnavailable,
                               "HTTP " + std::to_string(res->status) + " " + code + ": " + err.value("message", "")};
                } else {
                    failure = {server_side, "HTTP " + std::to_string(res->status) + ": malformed response"};
                }
            }
        } catch (const std::exception& e) {
            failure = {false, e.what()};
        }
        last_error = failure.message;
        if (!failure.retryable) break;
    }
    throw ServiceError(service_, operation_name(operation), request_id, std::min(attempt, options_.retry.attempts),
                       last_error);
}

ForegroundDetection HttpAgent::detect_foreground(const Image& image) {
    const auto r = client_.call(wire::kDetectForeground, {{"image", wire::encode_image(image)}});
    return {r.at("present").get<bool>(), r.value("description", "")};
}

std::string HttpAgent::removal_instruction(const Image& image, const std::string& description) {
    const auto r = client_.call(wire::kRemovalInstruction,
                                {{"image", wire::encode_image(image)}, {"description", description}});
    return r.at("instruction").get<std::string>();
}

std::string HttpAgent::background_removal_instruction(const Image& image, const std::string& description) {
    const auto r = client_.call(wire::kBackgroundRemovalInstruction,
                                {{"image", wire::encode_image(image)}, {"description", description}});
    return r.at("instruction").get<std::string>();
}

Image HttpEditor::apply(const Image& image, const std::string& instruction) {
    const auto r =
        client_.call(wire::kApply, {{"image", wire::encode_image(image)}, {"instruction", instruction}});
    Image out = wire::decode_image(r.at("image").get<std::string>());
    if (!out.same_dims(image)) {
        throw ServiceError("editor", "apply", "", 1,
                           "returned " + std::to_string(out.height()) + "x" + std::to_string(out.width()) +
                               " for a " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                               " input");
    }
    return out;
}

AlphaMask HttpSegmenter::segment(const Image& image) {
    const auto r = client_.call(wire::kSegment, {{"image", wire::encode_image(image)}});
    return wire::decode_mask(r.at("mask").get<std::string>());
}

EmbeddingVector HttpEmbedder::embed(const Image& image) {
    const auto r = client_.call(wire::kEmbed, {{"image", wire::encode_image(image)}});
    return EmbeddingVector(r.at("embedding").get<std::vector<double>>());
}

Verdict HttpVerifier::verify(const Image& rendered, const LayeredSample& sample) {
    const auto r =
        client_.call(wire::kVerify, {{"rendered", wire::encode_image(rendered)}, {"sample", wire::encode_sample(sample)}});
    return {r.at("accept").get<bool>(), r.value("reasons", std::vector<std::string>{})};
}

ServiceBundle make_http_bundle(const ToolEndpoints& endpoints, const std::string& request_prefix, std::uint64_t seed,
                               std::chrono::milliseconds base_delay) {
    validate(endpoints);
    ClientOptions options;
    options.timeout_seconds = endpoints.timeout_seconds;
    options.retry.attempts = endpoints.retries + 1;
    options.retry.base_delay = base_delay;
    options.seed = seed;
    options.request_prefix = request_prefix;

    ServiceBundle b;
    b.agent = std::make_shared<HttpAgent>(endpoints.agent_url, options);
    b.editor = std::make_shared<HttpEditor>(endpoints.editor_url, options);
    for (const auto& url : endpoints.segmenter_urls) b.segmenters.push_back(std::make_shared<HttpSegmenter>(url, options));
    b.embedder = as_provider(std::make_shared<HttpEmbedder>(endpoints.embedder_url, options));
    b.verifier = std::make_shared<HttpVerifier>(endpoints.verifier_url, options);
    b.ids = {{"agent", endpoints.agent_url},
             {"editor", endpoints.editor_url},
             {"embedder", endpoints.embedder_url},
             {"verifier", endpoints.verifier_url}};
    for (std::size_t i = 0; i < endpoints.segmenter_urls.size(); ++i) {
        b.ids["segmenter/" + std::to_string(i)] = endpoints.segmenter_urls[i];
    }
    return b;
}

struct ServiceHost::Impl {
    httplib::Server server;
    std::thread thread;
    int port = -1;
    mutable std::mutex mu;
    std::map<std::string, FaultRule> faults;
    std::map<std::string, std::vector<std::string>> ids;

    using Handler = std::function<nlohmann::json(const nlohmann::json&)>;

    void route(const std::string& path, Handler handler) {
        server.Post(path, [this, path, handler](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json request;
            try {
                request = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                res.status = 400;
                res.set_content(wire::make_error(wire::kBadRequest, e.what()).dump(), "application/json");
                return;
            }
            std::optional<FaultRule> fault;
            {
                std::lock_guard lock(mu);
                auto& seen = ids[path];
                seen.push_back(request.value("request_id", ""));
                auto it = faults.find(path);
                if (it != faults.end() && static_cast<int>(seen.size()) <= it->second.count) fault = it->second;
            }
            if (fault) {
                if (fault->delay.count() > 0) std::this_thread::sleep_for(fault->delay);
                if (fault->status != 200) {
                    res.status = fault->status;
                    const char* code = fault->status >= 500 ? wire::kUnavailable : wire::kBadRequest;
                    res.set_content(wire::make_error(code, "injected fault").dump(), "application/json");
                    return;
                }
            }
            try {
                if (!request.contains("payload") || !request["payload"].is_object()) {
                    throw std::invalid_argument("request has no payload object");
                }
                res.set_content(wire::make_ok(handler(request["payload"])).dump(), "application/json");
            } catch (const std::invalid_argument& e) {
                res.status = 400;
                res.set_content(wire::make_error(wire::kBadRequest, e.what()).dump(), "application/json");
            } catch (const nlohmann::json::exception& e) {
                res.status = 400;
                res.set_content(wire::make_error(wire::kBadRequest, e.what()).dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(wire::make_error(wire::kInternal, e.what()).dump(), "application/json");
            }
        });
    }
};

ServiceHost::ServiceHost() : impl_(std::make_unique<Impl>()) {}

ServiceHost::~ServiceHost() { stop(); }

void ServiceHost::mount_agent(std::shared_ptr<AgentService> s, const std::string& prefix) {
    impl_->route(prefix + wire::kDetectForeground, [s](const nlohmann::json& p) {
        const auto d = s->detect_foreground(wire::decode_image(p.at("image").get<std::string>()));
        return nlohmann::json{{"present", d.present}, {"description", d.description}};
    });
    impl_->route(prefix + wire::kRemovalInstruction, [s](const nlohmann::json& p) {
        return nlohmann::json{{"instruction", s->removal_instruction(wire::decode_image(p.at("image").get<std::string>()),
                                                                     p.at("description").get<std::string>())}};
    });
    impl_->route(prefix + wire::kBackgroundRemovalInstruction, [s](const nlohmann::json& p) {
        return nlohmann::json{
            {"instruction", s->background_removal_instruction(wire::decode_image(p.at("image").get<std::string>()),
                                                              p.at("description").get<std::string>())}};
    });
}

void ServiceHost::mount_editor(std::shared_ptr<EditorService> s, const std::string& prefix) {
    impl_->route(prefix + wire::kApply, [s](const nlohmann::json& p) {
        const Image out = s->apply(wire::decode_image(p.at("image").get<std::string>()),
                                   p.at("instruction").get<std::string>());
        return nlohmann::json{{"image", wire::encode_image(out)}};
    });
}

void ServiceHost::mount_segmenter(std::shared_ptr<SegmenterService> s, const std::string& prefix) {
    impl_->route(prefix + wire::kSegment, [s](const nlohmann::json& p) {
        return nlohmann::json{{"mask", wire::encode_mask(s->segment(wire::decode_image(p.at("image").get<std::string>())))}};
    });
}

void ServiceHost::mount_embedder(std::shared_ptr<EmbedderService> s, const std::string& prefix) {
    impl_->route(prefix + wire::kEmbed, [s](const nlohmann::json& p) {
        return nlohmann::json{{"embedding", s->embed(wire::decode_image(p.at("image").get<std::string>())).values()}};
    });
}

void ServiceHost::mount_verifier(std::shared_ptr<VerifierService> s, const std::string& prefix) {
    impl_->route(prefix + wire::kVerify, [s](const nlohmann::json& p) {
        const Verdict v = s->verify(wire::decode_image(p.at("rendered").get<std::string>()),
                                    wire::decode_sample(p.at("sample")));
        return nlohmann::json{{"accept", v.accept}, {"reasons", v.reasons}};
    });
}

void ServiceHost::inject_fault(const std::string& path, FaultRule rule) {
    std::lock_guard lock(impl_->mu);
    impl_->faults[path] = rule;
}

int ServiceHost::start() {
    if (impl_->port > 0) return impl_->port;
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw std::runtime_error("service host: cannot bind a loopback port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void ServiceHost::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

int ServiceHost::port() const { return impl_->port; }

std::string ServiceHost::url(const std::string& prefix) const {
    return "http://127.0.0.1:" + std::to_string(impl_->port) + prefix;
}

std::vector<std::string> ServiceHost::request_ids(const std::string& path) const {
    std::lock_guard lock(impl_->mu);
    auto it = impl_->ids.find(path);
    return it == impl_->ids.end() ? std::vector<std::string>{} : it->second;
}

}  // namespace layerforge
