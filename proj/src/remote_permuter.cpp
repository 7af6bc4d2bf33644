#include "tdpart/remote_permuter.hpp"

#include <algorithm>
#include <semaphore>
#include <string_view>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"

namespace tdpart {

namespace {

constexpr std::ptrdiff_t kSemaphoreMax = 1 << 16;

struct ParsedEndpoint {
    std::string host_port;  // scheme://host[:port]
    std::string path;       // prefix + "/permute"
};

ParsedEndpoint parse_endpoint(const std::string& endpoint)
{
    constexpr std::string_view scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0 || endpoint.size() == scheme.size()) {
        throw ConfigError("remote endpoint must be an http:// URL, got '" + endpoint + "'");
    }
    const auto slash = endpoint.find('/', scheme.size());
    ParsedEndpoint out;
    out.host_port = endpoint.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    out.path = prefix + "/permute";
    return out;
}

}  // namespace

struct RemotePermuter::Impl {
    ParsedEndpoint target;
    mutable std::counting_semaphore<kSemaphoreMax> slots;

    Impl(ParsedEndpoint t, std::size_t max_parallel)
        : target(std::move(t)), slots(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_parallel, 1, kSemaphoreMax)))
    {
    }
};

RemotePermuter::RemotePermuter(RemoteConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(parse_endpoint(config_.endpoint), config_.max_parallel))
{
}

RemotePermuter::~RemotePermuter() = default;

std::string encode_permute_request(const PermuteRequest& request)
{
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : request.window) {
        docs.push_back({{"id", d.doc_id}, {"text", d.text}});
    }
    nlohmann::json body = {{"query_id", request.query.id}, {"query", request.query.text}, {"documents", std::move(docs)}};
    return body.dump();
}

std::vector<DocId> decode_permute_response(const std::string& body)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("unparseable response body: ") + e.what());
    }
    if (!j.is_object() || j.size() != 1 || !j.contains("order") || !j["order"].is_array()) {
        throw ProtocolError("response must be exactly {\"order\": [...]}");
    }
    std::vector<DocId> order;
    order.reserve(j["order"].size());
    for (const auto& id : j["order"]) {
        if (!id.is_string()) {
            throw ProtocolError("response order contains a non-string id");
        }
        order.push_back(id.get<std::string>());
    }
    return order;
}

PermutationResult RemotePermuter::permute(const PermuteRequest& request) const
{
    const auto body = encode_permute_request(request);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<kSemaphoreMax>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    std::string last_failure;
    for (std::size_t attempt = 0; attempt <= config_.retries; ++attempt) {
        // httplib::Client is not safe to share between threads.
        httplib::Client client(impl_->target.host_port);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());

        auto res = client.Post(impl_->target.path, body, "application/json");
        if (!res) {
            last_failure = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("query " + request.query.id + ": HTTP " + std::to_string(res->status) + " from " +
                                config_.endpoint);
        }
        const auto raw = decode_permute_response(res->body);
        return repair_permutation(raw, request.window_ids());
    }
    throw BackendUnavailableError("query " + request.query.id + ": " + config_.endpoint + " unavailable after " +
                                  std::to_string(config_.retries + 1) + " attempt(s): " + last_failure);
}

}  // namespace tdpart
