#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tdpart/error.hpp"
#include "tdpart/executor.hpp"
#include "tdpart/remote_permuter.hpp"

namespace tdpart {
namespace {

using json = nlohmann::json;
using Kind = RepairEvent::Kind;

/// In-process ranking service whose behaviour is chosen by the query id.
class FakeService {
public:
    FakeService()
    {
        server_.Post("/v1/permute", [this](const httplib::Request& req, httplib::Response& res) {
            const auto now = ++in_flight_;
            for (auto seen = max_in_flight_.load(); now > seen && !max_in_flight_.compare_exchange_weak(seen, now);) {
            }
            handle(req, res);
            --in_flight_;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeService()
    {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    json last_request;
    std::atomic<int> calls{0};
    std::atomic<int> max_in_flight_{0};

private:
    void handle(const httplib::Request& req, httplib::Response& res)
    {
        const auto body = json::parse(req.body);
        const auto qid = body["query_id"].get<std::string>();
        const auto attempt = ++calls;
        std::vector<std::string> ids;
        for (const auto& d : body["documents"]) {
            ids.push_back(d["id"].get<std::string>());
        }
        if (qid == "echo") {
            last_request = body;
            std::reverse(ids.begin(), ids.end());
            res.set_content(json{{"order", ids}}.dump(), "application/json");
        } else if (qid == "dup") {
            res.set_content(R"({"order":["b","b","a"]})", "application/json");
        } else if (qid == "stranger") {
            res.set_content(R"({"order":["x","a"]})", "application/json");
        } else if (qid == "badshape") {
            res.set_content(R"({"ranking":["a"]})", "application/json");
        } else if (qid == "extra") {
            res.set_content(R"({"order":["a"],"latency":3})", "application/json");
        } else if (qid == "garbage") {
            res.set_content("certainly not json", "text/plain");
        } else if (qid == "flaky" && attempt < 3) {
            res.status = 503;
        } else if (qid == "down") {
            res.status = 503;
        } else if (qid == "teapot") {
            res.status = 418;
        } else if (qid == "slow") {
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            res.set_content(json{{"order", ids}}.dump(), "application/json");
        } else if (qid == "busy") {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            res.set_content(json{{"order", ids}}.dump(), "application/json");
        } else {
            res.set_content(json{{"order", ids}}.dump(), "application/json");
        }
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> in_flight_{0};
};

PermuteRequest request_of(const std::string& qid, const std::vector<DocId>& ids)
{
    PermuteRequest req{Query(qid, "what is a pivot"), {}};
    for (const auto& id : ids) {
        req.window.emplace_back(id, "text of " + id);
    }
    return req;
}

RemoteConfig config_for(const FakeService& service, std::size_t retries = 0)
{
    RemoteConfig c;
    c.endpoint = service.endpoint();
    c.timeout = std::chrono::milliseconds(2000);
    c.retries = retries;
    return c;
}

TEST(RemotePermuter, SendsWireFormatAndAcceptsValidAnswer)
{
    FakeService service;
    const RemotePermuter permuter(config_for(service));
    const auto result = permuter.permute(request_of("echo", {"a", "b", "c"}));
    EXPECT_EQ(result.order, (std::vector<DocId>{"c", "b", "a"}));
    EXPECT_TRUE(result.repairs.empty());

    const json expected = {{"query_id", "echo"},
                           {"query", "what is a pivot"},
                           {"documents",
                            {{{"id", "a"}, {"text", "text of a"}},
                             {{"id", "b"}, {"text", "text of b"}},
                             {{"id", "c"}, {"text", "text of c"}}}}};
    EXPECT_EQ(service.last_request, expected);
}

TEST(RemotePermuter, RepairsMalformedOrders)
{
    FakeService service;
    const RemotePermuter permuter(config_for(service));

    const auto dup = permuter.permute(request_of("dup", {"a", "b", "c"}));
    EXPECT_EQ(dup.order, (std::vector<DocId>{"b", "a", "c"}));
    EXPECT_EQ(dup.repairs, (std::vector<RepairEvent>{{Kind::duplicate_removed, "b"}, {Kind::missing_appended, "c"}}));

    const auto stranger = permuter.permute(request_of("stranger", {"a", "b"}));
    EXPECT_EQ(stranger.order, (std::vector<DocId>{"a", "b"}));
    EXPECT_EQ(stranger.repairs,
              (std::vector<RepairEvent>{{Kind::unknown_dropped, "x"}, {Kind::missing_appended, "b"}}));
}

TEST(RemotePermuter, ProtocolErrors)
{
    FakeService service;
    const RemotePermuter permuter(config_for(service, 3));
    EXPECT_THROW((void)permuter.permute(request_of("badshape", {"a"})), ProtocolError);
    EXPECT_THROW((void)permuter.permute(request_of("extra", {"a"})), ProtocolError);
    EXPECT_THROW((void)permuter.permute(request_of("garbage", {"a"})), ProtocolError);
    EXPECT_THROW((void)permuter.permute(request_of("teapot", {"a"})), ProtocolError);
}

TEST(RemotePermuter, RetriesServerErrors)
{
    FakeService service;
    const RemotePermuter patient(config_for(service, 2));
    EXPECT_EQ(patient.permute(request_of("flaky", {"a", "b"})).order, (std::vector<DocId>{"a", "b"}));
    EXPECT_EQ(service.calls.load(), 3);

    const RemotePermuter impatient(config_for(service, 1));
    EXPECT_THROW((void)impatient.permute(request_of("down", {"a"})), BackendUnavailableError);
}

TEST(RemotePermuter, UnreachableAndTimeout)
{
    int closed_port = 0;
    {
        httplib::Server probe;
        closed_port = probe.bind_to_any_port("127.0.0.1");
    }
    RemoteConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(closed_port);
    c.timeout = std::chrono::milliseconds(300);
    c.retries = 1;
    EXPECT_THROW((void)RemotePermuter(c).permute(request_of("echo", {"a"})), BackendUnavailableError);

    FakeService service;
    auto slow = config_for(service, 0);
    slow.timeout = std::chrono::milliseconds(150);
    EXPECT_THROW((void)RemotePermuter(slow).permute(request_of("slow", {"a"})), BackendUnavailableError);
}

TEST(RemotePermuter, BoundsInFlightRequests)
{
    FakeService service;
    auto c = config_for(service);
    c.max_parallel = 2;
    const RemotePermuter permuter(c);
    std::vector<PermutationResult> results(8);
    std::vector<StageExecutor::Task> tasks;
    for (std::size_t i = 0; i < results.size(); ++i) {
        tasks.emplace_back([&, i] { results[i] = permuter.permute(request_of("busy", {"a", "b"})); });
    }
    ThreadPoolExecutor(8).run(tasks);
    EXPECT_LE(service.max_in_flight_.load(), 2);
    EXPECT_GE(service.max_in_flight_.load(), 1);
    for (const auto& r : results) {
        EXPECT_EQ(r.order, (std::vector<DocId>{"a", "b"}));
    }
}

TEST(RemotePermuter, RejectsNonHttpEndpoints)
{
    RemoteConfig c;
    c.endpoint = "ftp://example";
    EXPECT_THROW(RemotePermuter{c}, ConfigError);
    c.endpoint = "http://";
    EXPECT_THROW(RemotePermuter{c}, ConfigError);
}

TEST(RemoteWire, DecodeIsStrict)
{
    EXPECT_EQ(decode_permute_response(R"({"order":["b","a"]})"), (std::vector<DocId>{"b", "a"}));
    EXPECT_THROW(decode_permute_response(R"(["b","a"])"), ProtocolError);
    EXPECT_THROW(decode_permute_response(R"({"order":["b",1]})"), ProtocolError);
    EXPECT_THROW(decode_permute_response(R"({"order":"b"})"), ProtocolError);
    EXPECT_THROW(decode_permute_response(""), ProtocolError);
}

}  // namespace
}  // namespace tdpart
