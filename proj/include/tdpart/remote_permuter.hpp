#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

#include "tdpart/permute.hpp"

namespace tdpart {

struct RemoteConfig {
    /// Base URL, e.g. "http://127.0.0.1:8080" or "http://host:port/prefix".
    std::string endpoint;
    std::chrono::milliseconds timeout{30'000};
    /// Extra attempts after the first failed one.
    std::size_t retries = 2;
    std::size_t max_parallel = 4;
};

/// JSON-over-HTTP client for an external list-wise ranking service.
///
/// Each window is sent as POST {endpoint}/permute with body
/// {"query_id", "query", "documents": [{"id", "text"}, ...]} and must be
/// answered with exactly {"order": [id, ...]}. Answers are repaired against
/// the request window. Network failures and 5xx answers are retried; once
/// retries are exhausted BackendUnavailableError is thrown. Any other
/// unexpected answer is a ProtocolError.
class RemotePermuter final : public Permuter {
public:
    /// Throws ConfigError for an endpoint that is not an http:// URL.
    explicit RemotePermuter(RemoteConfig config);
    ~RemotePermuter() override;

    RemotePermuter(const RemotePermuter&) = delete;
    RemotePermuter& operator=(const RemotePermuter&) = delete;

    PermutationResult permute(const PermuteRequest& request) const override;
    bool deterministic() const noexcept override { return false; }

    [[nodiscard]] const RemoteConfig& config() const noexcept { return config_; }

private:
    struct Impl;

    RemoteConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// Request body for one window, as sent on the wire.
std::string encode_permute_request(const PermuteRequest& request);

/// Extracts the raw order from a response body. Throws ProtocolError.
std::vector<DocId> decode_permute_response(const std::string& body);

}  // namespace tdpart
