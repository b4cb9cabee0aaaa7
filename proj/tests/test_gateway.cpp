#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "srt/errors.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/gateway.hpp"
#include "srt/prompting.hpp"
#include "test_util.hpp"

using namespace srt;
using namespace srt::gateway;

namespace {

GenerationRequest critique_request(const std::string& instruction, const std::string& response) {
  return GenerationRequest::for_role(
      RoleTag::critique, prompting::render_critic_prompt(instruction, response));
}

}  // namespace

TEST_CASE("role defaults follow the sampling profile") {
  auto respond = GenerationRequest::for_role(RoleTag::respond, "p");
  CHECK(respond.temperature == doctest::Approx(0.7));
  auto critique = GenerationRequest::for_role(RoleTag::critique, "p");
  CHECK(critique.temperature == 0.0);
  CHECK(critique.max_new_tokens == 2048);
  auto score = GenerationRequest::for_role(RoleTag::score, "p");
  CHECK(score.temperature == 0.0);
}

TEST_CASE("fixed-score mock critique emits the canonical format") {
  MockCriticConfig config;
  config.score_fn = ScoreFn::fixed;
  config.fixed_score = 7;
  MockModel model(config);
  auto result = model.generate(critique_request("Write a haiku", "Rain falls."));
  REQUIRE(result.texts.size() == 1);
  CHECK(result.texts[0].find("Overall Score: [[7]]") != std::string::npos);
  CHECK(result.texts[0].find("### Improved Response") != std::string::npos);
  auto parsed = parser::parse_critic_output(result.texts[0]);
  CHECK(parsed.status == parser::ParseStatus::ok);
  CHECK(parsed.feedback->overall_score == 7);
}

TEST_CASE("mock model is a pure function of config and request") {
  MockCriticConfig config;
  config.seed = 42;
  MockModel a(config), b(config);
  auto req = critique_request("Explain entropy", "It measures disorder.");
  CHECK(a.generate(req).texts == b.generate(req).texts);
  CHECK(a.generate(req).texts == a.generate(req).texts);
}

TEST_CASE("malformed fraction over many requests matches the seeded hash replay") {
  MockCriticConfig config;
  config.malformed_rate = 0.12;
  config.seed = 9;
  MockModel model(config);
  int malformed = 0;
  int expected = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string instr = "Question number " + std::to_string(i);
    std::string resp = "Answer number " + std::to_string(i);
    // independent replay of the decision the model will make
    if (model.malformed_fires(instr, resp)) ++expected;
    auto result = model.generate(critique_request(instr, resp));
    auto parsed = parser::parse_critic_output(result.texts[0]);
    if (parsed.status != parser::ParseStatus::ok) ++malformed;
  }
  CHECK(malformed == expected);
  // the rate itself lands near the configured probability
  CHECK(malformed > 800);
  CHECK(malformed < 1600);
}

TEST_CASE("sample_candidates returns n texts and tags duplicates") {
  MockCriticConfig config;
  config.seed = 5;
  ModelGateway gw(std::make_shared<MockModel>(config));
  auto set = gw.sample_candidates("List three facts about rivers.", 16, 1.0);
  CHECK(set.texts.size() == 16);
  // variants carry distinct hash suffixes, so no duplicates from the mock
  CHECK(set.duplicate_count == 0);
  auto again = gw.sample_candidates("List three facts about rivers.", 16, 1.0);
  CHECK(set.texts == again.texts);

  auto one = gw.sample_candidates("List three facts about rivers.", 1, 1.0);
  CHECK(one.texts.size() == 1);
  CHECK(one.texts[0] == one.texts[0]);
  CHECK_THROWS_AS(gw.sample_candidates("x", 0, 1.0), DataError);
}

TEST_CASE("budget caps abort with a typed error") {
  MockCriticConfig config;
  Budget budget;
  budget.max_requests = 3;
  ModelGateway gw(std::make_shared<MockModel>(config), budget);
  auto req = GenerationRequest::for_role(RoleTag::respond, "Tell me something.");
  gw.generate(req);
  gw.generate(req);
  gw.generate(req);
  CHECK_THROWS_AS(gw.generate(req), BudgetExceededError);
  CHECK(gw.requests_made() == 3);

  Budget chars;
  chars.max_output_chars = 10;  // first response alone exceeds this
  ModelGateway gw2(std::make_shared<MockModel>(config), chars);
  gw2.generate(req);
  CHECK_THROWS_AS(gw2.generate(req), BudgetExceededError);
}

TEST_CASE("caching backend serves repeats without touching the inner model") {
  struct CountingBackend : Backend {
    std::shared_ptr<Backend> inner;
    std::atomic<int> calls{0};
    GenerationResult generate(const GenerationRequest& r) override {
      ++calls;
      return inner->generate(r);
    }
  };
  testutil::TempDir dir;
  auto counting = std::make_shared<CountingBackend>();
  counting->inner = std::make_shared<MockModel>(MockCriticConfig{});
  auto cache = std::make_shared<ReplayCache>(dir.file("cache"));
  CachingBackend cached(counting, cache);

  auto req = critique_request("Describe a fjord", "A valley with water.");
  auto first = cached.generate(req);
  auto second = cached.generate(req);
  CHECK(first.texts == second.texts);
  CHECK(counting->calls == 1);
  CHECK(cached.hits() == 1);
  CHECK(cached.misses() == 1);
  CHECK(second.backend == BackendKind::cache);
}

TEST_CASE("replay cache verifies the full request, not just the fingerprint") {
  testutil::TempDir dir;
  ReplayCache cache(dir.file("cache"));
  auto req = GenerationRequest::for_role(RoleTag::respond, "prompt A");
  GenerationResult result;
  result.texts = {"stored text"};
  cache.put(req, result);

  CHECK(cache.get(req).has_value());
  auto other = req;
  other.temperature = 0.3;  // same prompt, different sampling
  CHECK(!cache.get(other).has_value());
  auto reseeded = req;
  reseeded.seed = 123;
  CHECK(!cache.get(reseeded).has_value());
}

TEST_CASE("replay cache survives reopen and rebuilds a truncated index") {
  testutil::TempDir dir;
  auto req1 = GenerationRequest::for_role(RoleTag::respond, "first prompt");
  auto req2 = GenerationRequest::for_role(RoleTag::respond, "second prompt");
  std::uint64_t checksum;
  {
    ReplayCache cache(dir.file("cache"));
    GenerationResult r1{{"one"}, BackendKind::mock, 0, req1.fingerprint()};
    GenerationResult r2{{"two"}, BackendKind::mock, 0, req2.fingerprint()};
    cache.put(req1, r1);
    cache.put(req2, r2);
    checksum = cache.content_checksum();
  }
  {
    ReplayCache reopened(dir.file("cache"));
    CHECK(reopened.size() == 2);
    CHECK(reopened.content_checksum() == checksum);
    CHECK(reopened.get(req1)->texts == std::vector<std::string>{"one"});
    CHECK(reopened.verify_integrity() == 2);
  }
  // drop the index entirely: the log scan rebuilds it
  std::filesystem::remove(dir.file("cache") + ".idx");
  {
    ReplayCache rebuilt(dir.file("cache"));
    CHECK(rebuilt.size() == 2);
    CHECK(rebuilt.content_checksum() == checksum);
    CHECK(rebuilt.get(req2)->texts == std::vector<std::string>{"two"});
  }
}

TEST_CASE("tampering with the log is detected") {
  testutil::TempDir dir;
  auto req = GenerationRequest::for_role(RoleTag::respond, "tamper target");
  {
    ReplayCache cache(dir.file("cache"));
    GenerationResult r{{"original payload text"}, BackendKind::mock, 0, req.fingerprint()};
    cache.put(req, r);
  }
  // flip bytes inside the stored payload
  std::fstream log(dir.file("cache") + ".log",
                   std::ios::binary | std::ios::in | std::ios::out);
  log.seekp(24);
  log.write("XXXX", 4);
  log.close();
  ReplayCache cache(dir.file("cache"));
  CHECK_THROWS_AS(cache.verify_integrity(), ManifestCorruptError);
}

TEST_CASE("remote backend retries transient failures then succeeds") {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++hits;
    if (n <= 2) {
      res.status = 503;
      return;
    }
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {
        {"choices", nlohmann::json::array()},
    };
    for (int i = 0; i < body.value("n", 1); ++i) {
      reply["choices"].push_back(
          {{"message", {{"role", "assistant"}, {"content", "remote says hi"}}}});
    }
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.api_key = "test-key";
  config.model = "test-model";
  RemoteBackend backend(config);
  std::vector<int> delays;
  backend.sleep_fn = [&](int ms) { delays.push_back(ms); };

  auto result = backend.generate(GenerationRequest::for_role(RoleTag::respond, "hello"));
  CHECK(result.texts == std::vector<std::string>{"remote says hi"});
  CHECK(result.backend == BackendKind::remote);
  CHECK(hits == 3);
  // exponential schedule from the configured base
  REQUIRE(delays.size() == 2);
  CHECK(delays[0] == config.backoff_base_ms);
  CHECK(delays[1] == config.backoff_base_ms * 2);

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend gives up after max_retries") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.max_retries = 2;
  RemoteBackend backend(config);
  backend.sleep_fn = [](int) {};
  CHECK_THROWS_AS(backend.generate(GenerationRequest::for_role(RoleTag::respond, "hi")),
                  RemoteError);
  CHECK(hits == 3);  // initial attempt + 2 retries

  server.stop();
  server_thread.join();
}

TEST_CASE("non-retriable http errors fail immediately") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  RemoteBackend backend(config);
  backend.sleep_fn = [](int) {};
  CHECK_THROWS_AS(backend.generate(GenerationRequest::for_role(RoleTag::respond, "hi")),
                  RemoteError);
  CHECK(hits == 1);

  server.stop();
  server_thread.join();
}
