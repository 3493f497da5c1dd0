// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

// HTTP-backed implementations: the GitHub transport and the clients of the
// inference service (/generate, /embed, /health).

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "clarifyd/error.hpp"
#include "clarifyd/genctx.hpp"
#include "clarifyd/ingest.hpp"
#include "clarifyd/metrics.hpp"

namespace clarifyd::net {

struct Timeouts {
    std::chrono::milliseconds connect{5000};
    std::chrono::milliseconds read{60000};
};

namespace detail {

inline std::unique_ptr<httplib::Client> make_client(const std::string& base_url, const Timeouts& timeouts) {
    // httplib takes anything without a scheme as a bare host name.
    const bool has_scheme = base_url.rfind("http://", 0) == 0 || base_url.rfind("https://", 0) == 0;
    if (!has_scheme || base_url.find(' ') != std::string::npos)
        throw ContractError("unsupported URL '" + base_url + "' (expected http:// or https://)");
    auto client = std::make_unique<httplib::Client>(base_url);
    if (!client->is_valid()) throw ContractError("unsupported URL '" + base_url + "'");
    client->set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeouts.connect));
    client->set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeouts.read));
    client->set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeouts.read));
    client->set_follow_location(true);
    return client;
}

inline std::string service_error(const std::string& endpoint, const httplib::Result& r) {
    if (!r) return endpoint + ": " + httplib::to_string(r.error());
    std::string message = endpoint + ": HTTP " + std::to_string(r->status);
    try {
        const auto body = nlohmann::json::parse(r->body);
        if (body.is_object()) {
            for (const char* key : {"error", "detail", "message"}) {
                if (body.contains(key)) {
                    const auto& v = body.at(key);
                    message += " " + (v.is_string() ? v.get<std::string>() : v.dump());
                    break;
                }
            }
        }
    } catch (const nlohmann::json::exception&) {
    }
    return message;
}

} // namespace detail

/// Live transport for the issue tracker, by default api.github.com.
class HttplibTransport final : public ingest::HttpTransport {
public:
    explicit HttplibTransport(std::string base_url = "https://api.github.com", Timeouts timeouts = {})
        : client_(detail::make_client(base_url, timeouts)) {}

    ingest::HttpResponse get(const std::string& target, const std::map<std::string, std::string>& headers) override {
        httplib::Headers h(headers.begin(), headers.end());
        std::lock_guard lock(mutex_);
        auto r = client_->Get(target, h);
        if (!r) throw ingest::TransportError("GET " + target + ": " + httplib::to_string(r.error()));
        ingest::HttpResponse out;
        out.status = r->status;
        out.body = r->body;
        for (const auto& [name, value] : r->headers) out.headers[ingest::detail::lower(name)] = value;
        return out;
    }

private:
    std::mutex mutex_;
    std::unique_ptr<httplib::Client> client_;
};

class ServiceError : public Error {
public:
    ServiceError(const std::string& what, int status) : Error(what), status_(status) {}
    /// HTTP status, 0 when no response arrived.
    int status() const noexcept { return status_; }

private:
    int status_;
};

/// Generation through POST /generate. One connection per call so calls can
/// run concurrently.
class ServiceBackend final : public genctx::GenerationBackend {
public:
    explicit ServiceBackend(std::string base_url, int max_new_tokens = 128, Timeouts timeouts = {})
        : base_url_(std::move(base_url)), max_new_tokens_(max_new_tokens), timeouts_(timeouts) {
        detail::make_client(base_url_, timeouts_);
    }

    std::string generate(const std::string& question, const genctx::Context& context) override {
        auto client = detail::make_client(base_url_, timeouts_);
        const nlohmann::json request{
            {"question", question}, {"context", context.render()}, {"max_new_tokens", max_new_tokens_}};
        auto r = client->Post("/generate", request.dump(), "application/json");
        if (!r || r->status != 200) throw ServiceError(detail::service_error("/generate", r), r ? r->status : 0);
        try {
            const auto body = nlohmann::json::parse(r->body);
            const auto& answer = body.at("answer");
            if (!answer.is_string()) throw ServiceError("/generate: answer is not a string", r->status);
            {
                std::lock_guard lock(mutex_);
                if (body.contains("model_tag") && body.at("model_tag").is_string())
                    model_tag_ = body.at("model_tag").get<std::string>();
            }
            return answer.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ServiceError(std::string("/generate: malformed response: ") + e.what(), r->status);
        }
    }

    std::string tag() const override {
        std::lock_guard lock(mutex_);
        return model_tag_.empty() ? "service" : "service:" + model_tag_;
    }

private:
    std::string base_url_;
    int max_new_tokens_;
    Timeouts timeouts_;
    mutable std::mutex mutex_;
    std::string model_tag_;
};

/// Sentence embeddings through POST /embed.
class ServiceEmbedder final : public metrics::SentenceEmbedder {
public:
    explicit ServiceEmbedder(std::string base_url, Timeouts timeouts = {})
        : base_url_(std::move(base_url)), timeouts_(timeouts) {
        detail::make_client(base_url_, timeouts_);
    }

    std::vector<rerank::Vector> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) return {};
        auto client = detail::make_client(base_url_, timeouts_);
        const nlohmann::json request{{"texts", texts}};
        auto r = client->Post("/embed", request.dump(), "application/json");
        if (!r || r->status != 200) throw ServiceError(detail::service_error("/embed", r), r ? r->status : 0);
        std::vector<rerank::Vector> vectors;
        try {
            const auto body = nlohmann::json::parse(r->body);
            vectors = body.at("vectors").get<std::vector<rerank::Vector>>();
            const auto dim = body.contains("dim") ? body.at("dim").get<std::size_t>() : 0;
            if (vectors.size() != texts.size())
                throw ServiceError("/embed: " + std::to_string(vectors.size()) + " vectors for " +
                                       std::to_string(texts.size()) + " texts",
                                   r->status);
            for (const auto& v : vectors) {
                if (v.size() != vectors.front().size() || (dim != 0 && v.size() != dim))
                    throw ServiceError("/embed: vectors of unequal dimension", r->status);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ServiceError(std::string("/embed: malformed response: ") + e.what(), r->status);
        }
        return vectors;
    }

    std::string identity() const override { return "service:" + base_url_; }

private:
    std::string base_url_;
    Timeouts timeouts_;
};

struct Health {
    bool ready = false;
    int http_status = 0;
    std::string status;
    std::vector<std::string> models;
};

/// GET /health; never throws for an unreachable or unhealthy service.
inline Health check_health(const std::string& base_url, Timeouts timeouts = {}) {
    Health h;
    auto client = detail::make_client(base_url, timeouts);
    auto r = client->Get("/health");
    if (!r) {
        h.status = httplib::to_string(r.error());
        return h;
    }
    h.http_status = r->status;
    try {
        const auto body = nlohmann::json::parse(r->body);
        if (body.contains("status") && body.at("status").is_string()) h.status = body.at("status").get<std::string>();
        if (body.contains("models") && body.at("models").is_array()) {
            for (const auto& m : body.at("models")) h.models.push_back(m.is_string() ? m.get<std::string>() : m.dump());
        }
    } catch (const nlohmann::json::exception&) {
    }
    h.ready = r->status == 200;
    return h;
}

} // namespace clarifyd::net
