#include "mixopt/embedding_client.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mixopt/error.hpp"

namespace mixopt {

using json = nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("invalid embedding endpoint URL '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::vector<std::vector<double>> parse_response(const std::string& body, std::size_t expected) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        throw DataError("embedding service returned invalid JSON");
    }
    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
        throw DataError("embedding response lacks a 'data' array");
    }
    const auto& data = doc["data"];
    if (data.size() != expected) {
        throw DataError("embedding response has " + std::to_string(data.size()) +
                        " items, expected " + std::to_string(expected));
    }
    std::vector<std::vector<double>> out(expected);
    std::vector<bool> filled(expected, false);
    for (const auto& item : data) {
        if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
            !item.contains("embedding") || !item["embedding"].is_array()) {
            throw DataError("malformed item in embedding response");
        }
        const auto index = item["index"].get<std::int64_t>();
        if (index < 0 || static_cast<std::size_t>(index) >= expected || filled[index]) {
            throw DataError("embedding response has bad or duplicate index " + std::to_string(index));
        }
        std::vector<double> vec;
        vec.reserve(item["embedding"].size());
        for (const auto& v : item["embedding"]) {
            if (!v.is_number()) throw DataError("non-numeric embedding value in response");
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw DataError("non-finite embedding value in response");
            vec.push_back(x);
        }
        if (vec.empty()) throw DataError("empty embedding in response");
        out[index] = std::move(vec);
        filled[index] = true;
    }
    return out;
}

std::vector<std::vector<double>> post_batch(const EmbeddingServiceConfig& config,
                                            const Endpoint& endpoint,
                                            const std::vector<std::string>& batch) {
    const std::string body = json{{"model", config.model_name}, {"input", batch}}.dump();
    httplib::Headers headers;
    if (config.auth_token) headers.emplace("Authorization", "Bearer " + *config.auth_token);

    std::string last_error;
    auto backoff = config.initial_backoff;
    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        httplib::Client client(endpoint.origin);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return parse_response(res->body, batch.size());
        }
        if (res && !retryable_status(res->status)) {
            throw NetworkError("embedding service answered HTTP " + std::to_string(res->status));
        }
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (attempt < config.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw NetworkError("embedding request failed after " + std::to_string(config.max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace

void EmbeddingServiceConfig::validate() const {
    if (batch_size < 1) throw ConfigError("embedding batch_size must be >= 1");
    if (!(timeout.count() > 0.0)) throw ConfigError("embedding timeout must be > 0");
    if (max_attempts < 1) throw ConfigError("embedding max_attempts must be >= 1");
    if (parallelism < 1) throw ConfigError("embedding parallelism must be >= 1");
    if (initial_backoff.count() < 0.0) throw ConfigError("embedding backoff must be >= 0");
    parse_endpoint(endpoint_url);
}

std::vector<std::vector<double>> fetch_embeddings(const EmbeddingServiceConfig& config,
                                                  const std::vector<std::string>& texts) {
    config.validate();
    if (texts.empty()) throw ConfigError("fetch_embeddings needs at least one text");
    const Endpoint endpoint = parse_endpoint(config.endpoint_url);

    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    std::vector<std::vector<std::string>> batches;
    for (std::size_t start = 0; start < texts.size(); start += batch_size) {
        const auto end = std::min(texts.size(), start + batch_size);
        batches.emplace_back(texts.begin() + static_cast<std::ptrdiff_t>(start),
                             texts.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::vector<std::vector<std::vector<double>>> results(batches.size());
    const auto wave = static_cast<std::size_t>(config.parallelism);
    for (std::size_t first = 0; first < batches.size(); first += wave) {
        const auto last = std::min(batches.size(), first + wave);
        if (last - first == 1) {
            results[first] = post_batch(config, endpoint, batches[first]);
            continue;
        }
        std::vector<std::future<std::vector<std::vector<double>>>> inflight;
        for (std::size_t b = first; b < last; ++b) {
            inflight.push_back(std::async(std::launch::async, post_batch, std::cref(config),
                                          std::cref(endpoint), std::cref(batches[b])));
        }
        for (std::size_t b = first; b < last; ++b) results[b] = inflight[b - first].get();
    }

    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    const std::size_t dim = results.front().front().size();
    for (std::size_t b = 0; b < results.size(); ++b) {
        for (auto& vec : results[b]) {
            if (vec.size() != dim) {
                throw DataError("embedding dimension changed from " + std::to_string(dim) + " to " +
                                std::to_string(vec.size()) + " in batch " + std::to_string(b));
            }
            out.push_back(std::move(vec));
        }
    }
    return out;
}

}  // namespace mixopt
