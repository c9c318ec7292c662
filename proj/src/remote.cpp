#include <cmath>
#include <thread>

#include <httplib.h>

#include "ctrank/embedder.hpp"
#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/parallel.hpp"

namespace ctrank {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
        throw Error(ErrorKind::InvalidConfig, "remote_url must be an http:// URL, got '" + url + "'");
    }
    const std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorKind::MalformedResponse, what);
}

std::vector<EmbeddingVector> decode_response(const std::string& body, std::span<const TextItem> batch,
                                             std::size_t expected_dim) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        malformed(std::string("response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vectors") || !doc.contains("dim") || !doc["vectors"].is_array() ||
        !doc["dim"].is_number_unsigned()) {
        malformed("response must be an object with 'vectors' and 'dim'");
    }
    const auto dim = doc["dim"].get<std::size_t>();
    if (dim != expected_dim) {
        throw Error(ErrorKind::DimMismatch,
                    "server dim " + std::to_string(dim) + " != configured dim " + std::to_string(expected_dim));
    }
    const auto& vectors = doc["vectors"];
    if (vectors.size() != batch.size()) {
        malformed("expected " + std::to_string(batch.size()) + " vectors, got " + std::to_string(vectors.size()));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& row = vectors[i];
        if (!row.is_array()) {
            malformed("vector " + std::to_string(i) + " is not an array");
        }
        if (row.size() != expected_dim) {
            throw Error(ErrorKind::DimMismatch, "vector " + std::to_string(i) + " has length " +
                                                    std::to_string(row.size()));
        }
        EmbeddingVector v{batch[i].id, {}};
        v.values.reserve(expected_dim);
        for (const auto& x : row) {
            if (!x.is_number() || !std::isfinite(x.get<double>())) {
                malformed("vector " + std::to_string(i) + " holds a non-finite or non-numeric entry");
            }
            v.values.push_back(static_cast<float>(x.get<double>()));
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::vector<EmbeddingVector> embed_remote(std::span<const TextItem> batch, const EmbedderConfig& cfg,
                                          const RemoteOptions& options) {
    if (batch.empty()) {
        return {};
    }
    if (batch.size() > kMaxRemoteBatch) {
        throw Error(ErrorKind::InvalidConfig, "remote batch of " + std::to_string(batch.size()) +
                                                  " exceeds " + std::to_string(kMaxRemoteBatch));
    }
    if (!cfg.remote_url) {
        throw Error(ErrorKind::InvalidConfig, "remote backend needs remote_url");
    }
    const Endpoint endpoint = split_url(*cfg.remote_url);

    nlohmann::json request;
    request["texts"] = nlohmann::json::array();
    for (const TextItem& item : batch) {
        request["texts"].push_back(item.text);
    }
    const std::string payload = request.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);

    std::string last_failure;
    auto backoff = options.initial_backoff;
    for (std::size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
        if (attempt > 0) {
            logger().warn("remote embedding attempt {} failed ({}), retrying in {} ms", attempt, last_failure,
                          backoff.count());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        const httplib::Result res = client.Post(endpoint.path, payload, "application/json");
        if (!res) {
            last_failure = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorKind::RemoteUnavailable,
                        "embedding service answered HTTP " + std::to_string(res->status));
        }
        return decode_response(res->body, batch, cfg.dim);
    }
    throw Error(ErrorKind::RemoteUnavailable, "embedding service at " + *cfg.remote_url + " failed after " +
                                                  std::to_string(options.max_retries + 1) +
                                                  " attempts: " + last_failure);
}

std::vector<EmbeddingVector> embed_remote_all(std::span<const TextItem> items, const EmbedderConfig& cfg,
                                              const RemoteOptions& options) {
    const std::size_t batches = (items.size() + kMaxRemoteBatch - 1) / kMaxRemoteBatch;
    std::vector<std::vector<EmbeddingVector>> results(batches);
    parallel_for(batches, std::max(1u, options.max_in_flight), [&](std::size_t b) {
        const std::size_t begin = b * kMaxRemoteBatch;
        const std::size_t count = std::min(kMaxRemoteBatch, items.size() - begin);
        results[b] = embed_remote(items.subspan(begin, count), cfg, options);
    });
    std::vector<EmbeddingVector> out;
    out.reserve(items.size());
    for (auto& part : results) {
        for (auto& v : part) {
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace ctrank
