#include <atomic>
#include <functional>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "sublab/chat_client.hpp"

using namespace sublab;
using nlohmann::json;

namespace {

// Local chat-completions stand-in. `answer` maps the n-th request (0-based)
// and its body to (status, content).
class MockServer {
 public:
  using Answer = std::function<std::pair<int, std::string>(int, const json&)>;

  explicit MockServer(Answer answer) : answer_(std::move(answer)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      {
        std::lock_guard<std::mutex> lock(mu_);
        peak_ = std::max(peak_, now);
        auth_ = req.get_header_value("Authorization");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      const json body = json::parse(req.body);
      {
        std::lock_guard<std::mutex> lock(mu_);
        last_body_ = body;
      }
      const auto [status, content] = answer_(requests_++, body);
      res.status = status;
      if (status == 200) {
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                        "application/json");
      } else {
        res.set_content(content, "text/plain");
      }
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  ChatClientConfig config() const {
    ChatClientConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.api_key = "test-key";
    c.timeout_seconds = 5;
    return c;
  }

  int requests() const { return requests_; }
  int peak() const { return peak_; }
  std::string auth() const { return auth_; }
  json last_body() const { return last_body_; }

 private:
  Answer answer_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> in_flight_{0};
  int peak_ = 0;
  std::string auth_;
  json last_body_;
  mutable std::mutex mu_;
};

std::vector<GameState> ultimatum_states() {
  std::vector<GameState> s;
  for (int x = 0; x <= 10; ++x) s.push_back(UltimatumState{10, x});
  return s;
}

double accept_rate(const DemonstrationSet& set) {
  double n = 0.0;
  for (const auto& r : set.records()) n += r.action == ultimatum::kAccept ? 1.0 : 0.0;
  return n / static_cast<double>(set.size());
}

}  // namespace

TEST_SUITE("chat_client") {
  TEST_CASE("request body and response extraction") {
    ChatClientConfig c;
    const Prompt p{"sys", "usr"};
    const auto body = chat_request_body(c, p);
    CHECK(body.at("model") == "gpt-4-0613");
    CHECK(body.at("temperature") == 0.5);
    CHECK(body.at("max_tokens") == 5);
    CHECK(body.at("messages").at(0).at("role") == "system");
    CHECK(body.at("messages").at(1).at("content") == "usr");
    CHECK(extract_completion_text(json::parse(R"({"choices":[{"message":{"content":"accept"}}]})")) == "accept");
    CHECK_THROWS_AS(extract_completion_text(json::parse(R"({"error":"x"})")), std::runtime_error);
  }

  TEST_CASE("credentials and limits are validated") {
    ChatClientConfig c;
    c.api_key_env = "SUBLAB_TEST_KEY_THAT_IS_NOT_SET";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.api_key = "k";
    CHECK_NOTHROW(c.validate());
    c.max_attempts = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("all-accept server yields 110 accepting records") {
    MockServer server([](int, const json&) { return std::pair{200, std::string("accept the offer")}; });
    auto config = server.config();
    const auto report = generate_demonstrations(config, ultimatum_states(), PersonaSpec::human(), 10);
    CHECK(report.set.size() == 110);
    CHECK(report.quarantined.empty());
    CHECK(report.errors.empty());
    CHECK(accept_rate(report.set) == 1.0);
    CHECK(server.auth() == "Bearer test-key");
    CHECK(server.last_body().at("model") == "gpt-4-0613");
    for (const auto& r : report.set.records()) CHECK(r.meta.source == DemoSource::Live);
    // Slot order, not completion order.
    for (std::size_t i = 0; i < report.set.size(); ++i) CHECK(report.set.records()[i].state_index == i / 10);
  }

  TEST_CASE("alternating answers give an overall rate of one half") {
    MockServer server([](int n, const json&) {
      return std::pair{200, std::string(n % 2 == 0 ? "accept" : "reject")};
    });
    const auto report = generate_demonstrations(server.config(), ultimatum_states(), PersonaSpec::fair(), 10);
    REQUIRE(report.set.size() == 110);
    CHECK(accept_rate(report.set) == 0.5);
  }

  TEST_CASE("unparseable answers are quarantined and retried") {
    MockServer server([](int n, const json&) {
      return std::pair{200, std::string(n < 3 ? "hmm, let me think" : "reject the offer")};
    });
    auto config = server.config();
    config.max_attempts = 4;
    const auto report = generate_demonstrations(config, {UltimatumState{10, 2}}, PersonaSpec::human(), 1);
    REQUIRE(report.set.size() == 1);
    CHECK(report.set.records()[0].action == ultimatum::kReject);
    REQUIRE(report.quarantined.size() == 3);
    CHECK(report.quarantined[0].attempt == 1);
    CHECK(report.quarantined[2].attempt == 3);
    CHECK(report.quarantined[1].raw_response == "hmm, let me think");
    CHECK(report.errors.empty());
  }

  TEST_CASE("a slot that never parses is reported, not recorded") {
    MockServer server([](int, const json&) { return std::pair{200, std::string("no idea")}; });
    auto config = server.config();
    config.max_attempts = 2;
    const auto report = generate_demonstrations(config, {MarshmallowState{}}, PersonaSpec::child(3), 2);
    CHECK(report.set.empty());
    CHECK(report.quarantined.size() == 4);
    CHECK(report.errors.size() == 2);
  }

  TEST_CASE("transport failures are retried") {
    MockServer server([](int n, const json&) {
      return n == 0 ? std::pair{500, std::string("overloaded")} : std::pair{200, std::string("wait")};
    });
    auto config = server.config();
    config.max_in_flight = 1;
    const auto report = generate_demonstrations(config, {MarshmallowState{}}, PersonaSpec::child(5), 1);
    CHECK(report.set.size() == 1);
    CHECK(server.requests() == 2);
  }

  TEST_CASE("no more than max_in_flight requests run at once") {
    MockServer server([](int, const json&) { return std::pair{200, std::string("accept")}; });
    auto config = server.config();
    config.max_in_flight = 3;
    generate_demonstrations(config, ultimatum_states(), PersonaSpec::human(), 4);
    CHECK(server.peak() <= 3);
    CHECK(server.requests() == 44);
  }

  TEST_CASE("single completion and HTTP errors") {
    MockServer server([](int n, const json&) {
      return n == 0 ? std::pair{200, std::string("reject")} : std::pair{429, std::string("rate limited")};
    });
    const auto config = server.config();
    CHECK(complete(config, {"s", "u"}) == "reject");
    try {
      complete(config, {"s", "u"}, "probe");
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      const std::string what = e.what();
      CHECK(what.find("429") != std::string::npos);
      CHECK(what.find("probe") != std::string::npos);
    }
  }

  TEST_CASE("unreachable endpoint surfaces a transport error") {
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    ChatClientConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.api_key = "k";
    config.timeout_seconds = 1;
    CHECK_THROWS_AS(complete(config, {"s", "u"}), TransportError);
  }
}
