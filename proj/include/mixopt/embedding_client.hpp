#ifndef MIXOPT_EMBEDDING_CLIENT_HPP
#define MIXOPT_EMBEDDING_CLIENT_HPP

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace mixopt {

struct EmbeddingServiceConfig {
    /// Full URL of the embeddings endpoint, e.g. http://host:8080/v1/embeddings.
    std::string endpoint_url;
    std::string model_name;
    int batch_size = 32;
    std::chrono::duration<double> timeout{30.0};
    std::optional<std::string> auth_token;

    int max_attempts = 3;
    std::chrono::duration<double> initial_backoff{1.0};
    /// Maximum number of batches in flight at once.
    int parallelism = 1;

    void validate() const;
};

/// Embeds `texts` through an OpenAI-style HTTP endpoint.
///
/// Request body: {"model": ..., "input": [...]}. Response body:
/// {"data": [{"index": i, "embedding": [...]}, ...]}, matched by index.
/// Results come back in input order regardless of batching or parallelism.
/// Throws NetworkError after exhausting retries, DataError on a malformed
/// response or inconsistent dimensions.
std::vector<std::vector<double>> fetch_embeddings(const EmbeddingServiceConfig& config,
                                                  const std::vector<std::string>& texts);

}  // namespace mixopt

#endif  // MIXOPT_EMBEDDING_CLIENT_HPP
