#include "srt/config.hpp"

#include <fstream>

#include "srt/errors.hpp"

namespace srt {

using nlohmann::json;

namespace {

const char* score_fn_name(gateway::ScoreFn fn) {
  switch (fn) {
    case gateway::ScoreFn::fixed: return "fixed";
    case gateway::ScoreFn::saturating: return "saturating";
    case gateway::ScoreFn::noisy_regressing: return "noisy_regressing";
  }
  return "saturating";
}

gateway::ScoreFn score_fn_from(const std::string& name) {
  if (name == "fixed") return gateway::ScoreFn::fixed;
  if (name == "saturating") return gateway::ScoreFn::saturating;
  if (name == "noisy_regressing") return gateway::ScoreFn::noisy_regressing;
  throw ConfigError("unknown mock score_fn: " + name);
}

}  // namespace

json PipelineConfig::to_json() const {
  json j = {
      {"backend", backend},
      {"seed", seed},
      {"concurrency", concurrency},
      {"variant", variant},
      {"policy",
       {{"max_iterations", policy.max_iterations},
        {"stop_on_no_gain", policy.stop_on_no_gain},
        {"gain_epsilon", policy.gain_epsilon}}},
      {"mock",
       {{"score_fn", score_fn_name(mock.score_fn)},
        {"fixed_score", mock.fixed_score},
        {"gains", mock.gains},
        {"malformed_rate", mock.malformed_rate},
        {"refinement_gain", mock.refinement_gain},
        {"p_equal", mock.p_equal},
        {"p_worse", mock.p_worse},
        {"seed", mock.seed}}},
      {"paths",
       {{"corpus", corpus_path},
        {"stage1_corpus", stage1_corpus_path},
        {"output", output_path},
        {"manifest", manifest_path}}},
  };
  if (cache_path) j["cache_path"] = *cache_path;
  if (mock.base_score) j["mock"]["base_score"] = *mock.base_score;
  if (budget.max_requests) j["budget"]["max_requests"] = *budget.max_requests;
  if (budget.max_output_chars) j["budget"]["max_output_chars"] = *budget.max_output_chars;
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    c.backend = j.value("backend", "mock");
    if (c.backend != "mock" && c.backend != "remote") {
      throw ConfigError("backend must be mock or remote, got " + c.backend);
    }
    if (j.contains("cache_path")) c.cache_path = j.at("cache_path").get<std::string>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.concurrency = j.value("concurrency", 1);
    c.variant = j.value("variant", "full");
    stage1::AblationVariant::from_name(c.variant);  // fail fast on bad names
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      c.policy.max_iterations = p.value("max_iterations", 1);
      c.policy.stop_on_no_gain = p.value("stop_on_no_gain", true);
      c.policy.gain_epsilon = p.value("gain_epsilon", 0.0);
    }
    if (j.contains("mock")) {
      const auto& m = j.at("mock");
      c.mock.score_fn = score_fn_from(m.value("score_fn", "saturating"));
      c.mock.fixed_score = m.value("fixed_score", 7);
      if (m.contains("base_score")) c.mock.base_score = m.at("base_score").get<double>();
      if (m.contains("gains")) c.mock.gains = m.at("gains").get<std::vector<double>>();
      c.mock.malformed_rate = m.value("malformed_rate", 0.0);
      c.mock.refinement_gain = m.value("refinement_gain", 2.0);
      c.mock.p_equal = m.value("p_equal", 0.0);
      c.mock.p_worse = m.value("p_worse", 0.0);
      c.mock.seed = m.value("seed", c.seed);
    } else {
      c.mock.seed = c.seed;
    }
    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      if (b.contains("max_requests")) {
        c.budget.max_requests = b.at("max_requests").get<std::uint64_t>();
      }
      if (b.contains("max_output_chars")) {
        c.budget.max_output_chars = b.at("max_output_chars").get<std::uint64_t>();
      }
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.corpus_path = p.value("corpus", "");
      c.stage1_corpus_path = p.value("stage1_corpus", "");
      c.output_path = p.value("output", "output.jsonl");
      c.manifest_path = p.value("manifest", "manifest.json");
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad config: " + std::string(e.what()));
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("unparseable config: " + path);
  return from_json(j);
}

GatewayBundle make_gateway(const PipelineConfig& config) {
  GatewayBundle bundle;
  std::shared_ptr<gateway::Backend> inner;
  if (config.backend == "mock") {
    auto mock = config.mock;
    if (mock.seed == 0) mock.seed = config.seed;
    inner = std::make_shared<gateway::MockModel>(mock);
  } else {
    inner = std::make_shared<gateway::RemoteBackend>(gateway::RemoteConfig::from_env());
  }
  if (config.cache_path) {
    bundle.cache = std::make_shared<gateway::ReplayCache>(*config.cache_path);
    bundle.caching = std::make_shared<gateway::CachingBackend>(inner, bundle.cache);
    bundle.backend = bundle.caching;
  } else {
    bundle.backend = inner;
  }
  bundle.gateway = std::make_unique<gateway::ModelGateway>(bundle.backend, config.budget);
  return bundle;
}

}  // namespace srt
