#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace srt {

struct SamplingParams {
  double temperature = 0.0;
  int max_new_tokens = 2048;
};

struct FilterCounts {
  std::uint64_t input_n = 0;
  std::uint64_t rule1_rejected = 0;
  std::uint64_t rule2_rejected = 0;
  std::uint64_t emitted_n = 0;

  // Conservation: emitted_n + rule1_rejected + rule2_rejected == input_n.
  bool balanced() const { return emitted_n + rule1_rejected + rule2_rejected == input_n; }
};

// Sidecar for every pipeline output. `detail` carries per-stage breakdowns
// (generation failures, equality vs decrease drops, iteration counts);
// `choices` records decisions the source material leaves open.
struct RunManifest {
  std::string stage;  // collect | refine | build_sft | build_dpo | eval
  std::map<std::string, SamplingParams> sampling;
  FilterCounts counts;
  std::map<std::string, double> trainer_hints;
  std::map<std::string, std::uint64_t> detail;
  std::map<std::string, std::string> choices;
  std::uint64_t seed = 0;
  std::string content_checksum;  // hex, over the emitted dataset bytes
  std::string cache_checksum;    // hex, over the replay cache
  std::string output_path;
  nlohmann::json config;  // echo of the run config, consumed by resume
  std::string status = "complete";  // complete | interrupted

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

// Default sampling parameters per role (respond 0.7/1024, critique and
// score 0.0/2048).
std::map<std::string, SamplingParams> default_sampling();

// Stage-2 export hints: one epoch of DPO at beta 0.01, lr 5e-7; stage-1 SFT
// runs five epochs at peak lr 1e-5, batch 32.
std::map<std::string, double> default_trainer_hints(const std::string& stage);

}  // namespace srt
