#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "srt/gateway.hpp"
#include "srt/manifest.hpp"
#include "srt/types.hpp"

namespace srt::stage2 {

struct SelfFeedbackRecord {
  Instruction instruction;
  ModelResponse initial;
  CritiqueFeedback self_feedback;
  ModelResponse self_refinement;
  int initial_score = 0;     // both via the independent score path
  int refinement_score = 0;
};

// Prefix prompt in the learned sequence format; the model continues with its
// own feedback and improved response.
std::string self_critique_prompt(const std::string& instruction, const std::string& response);

struct SelfFeedbackResult {
  std::vector<SelfFeedbackRecord> records;
  std::uint64_t malformed_drops = 0;
};

// Stage-2 collection: respond at 0.7, self-critique and refine greedy, score
// both sides independently. The instruction set must be disjoint (by id)
// from stage 1; overlap throws OverlapDetected.
SelfFeedbackResult generate_self_feedback(const std::vector<Instruction>& instructions,
                                          const std::unordered_set<std::string>& stage1_ids,
                                          gateway::ModelGateway& gw, int concurrency = 1);

struct PairBuildResult {
  std::vector<PreferencePair> pairs;
  std::uint64_t equality_drops = 0;
  std::uint64_t decrease_drops = 0;
};

// Strict filter: a pair is emitted only when the refinement score exceeds
// the initial score. Equality is dropped and counted apart from decreases.
PairBuildResult build_preference_pairs(const std::vector<SelfFeedbackRecord>& records);

struct LengthStats {
  double chosen_mean = 0.0;
  double chosen_median = 0.0;
  double rejected_mean = 0.0;
  double rejected_median = 0.0;
};

LengthStats length_stats(const std::vector<PreferencePair>& pairs);

// JSONL with prompt/chosen/rejected/chosen_score/rejected_score plus a
// manifest carrying the DPO trainer hints (beta 0.01, 1 epoch, lr 5e-7).
RunManifest export_dpo_dataset(const std::vector<PreferencePair>& pairs,
                               const std::string& output_path, const std::string& manifest_path);

struct Stage2Options {
  std::uint64_t seed = 0;
  int concurrency = 1;
};

RunManifest run_stage2(const std::vector<Instruction>& instructions,
                       const std::unordered_set<std::string>& stage1_ids,
                       const Stage2Options& options, gateway::ModelGateway& gw,
                       const std::string& output_path, const std::string& manifest_path);

}  // namespace srt::stage2
