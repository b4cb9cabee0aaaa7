#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "srt/gateway.hpp"
#include "srt/stage1.hpp"

namespace srt {

struct PipelineConfig {
  std::string backend = "mock";  // mock | remote
  std::optional<std::string> cache_path;  // prefix for <p>.log / <p>.idx
  std::uint64_t seed = 0;
  int concurrency = 1;
  gateway::Budget budget;
  gateway::MockCriticConfig mock;
  stage1::IterationPolicy policy;
  std::string variant = "full";

  std::string corpus_path;
  std::string stage1_corpus_path;  // stage-1 ids for the disjointness check
  std::string output_path = "output.jsonl";
  std::string manifest_path = "manifest.json";

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

struct GatewayBundle {
  std::shared_ptr<gateway::Backend> backend;
  std::shared_ptr<gateway::ReplayCache> cache;  // null when uncached
  std::shared_ptr<gateway::CachingBackend> caching;  // null when uncached
  std::unique_ptr<gateway::ModelGateway> gateway;
};

// Builds the backend chain (mock or remote, optionally behind the replay
// cache) and the budget-enforcing gateway in front of it.
GatewayBundle make_gateway(const PipelineConfig& config);

}  // namespace srt
