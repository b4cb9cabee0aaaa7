#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "srt/gateway.hpp"
#include "srt/manifest.hpp"
#include "srt/types.hpp"

namespace srt::stage1 {

struct IterationPolicy {
  int max_iterations = 1;  // one round of refinement is the production setting
  bool stop_on_no_gain = true;
  double gain_epsilon = 0.0;
};

// Which pieces of the training sequence a variant removes. all_feedback and
// refinement_only are exclusive with the element-wise drops.
struct AblationVariant {
  bool drop_score = false;
  bool drop_suggestion = false;
  bool drop_weakness = false;
  bool all_feedback = false;
  bool refinement_only = false;

  void validate() const;
  std::string name() const;
  static AblationVariant from_name(const std::string& name);
};

struct QualityBucket {
  int target_score = 7;
  std::size_t sample_size = 2000;
};

struct CollectedPair {
  Instruction instruction;
  ModelResponse response;
  int independent_score = 0;  // via the score-only path, at collection time
};

struct CollectResult {
  std::vector<CollectedPair> pairs;
  std::uint64_t failures = 0;
};

// One response per instruction at T=0.7, each scored independently.
// Generation failures are logged and skipped, never retried indefinitely.
CollectResult collect_initial_responses(const std::vector<Instruction>& instructions,
                                        gateway::ModelGateway& gw, int concurrency = 1);

enum class RefineFailure { critic_malformed, score_malformed };

// Runs up to policy.max_iterations critique-refine rounds, feeding each
// refinement back in, re-scoring every refinement with the score-only prompt.
// A refinement whose score gain over the previous one is <= gain_epsilon is
// discarded and iteration stops (the first refinement is always kept so
// Rule #2 can judge it). Malformed critic output at iteration 1 fails the
// whole example; at later iterations the example is truncated to the last
// good iteration.
std::variant<AnnotatedExample, RefineFailure> critique_and_refine(
    const CollectedPair& pair, const IterationPolicy& policy, gateway::ModelGateway& gw);

// Rule #2: keep iff the best refinement's independent score is not lower
// than the initial response's. Non-strict by design.
bool apply_rule2(const AnnotatedExample& example);

TrainingSequence build_sft_sequence(const AnnotatedExample& example,
                                    const AblationVariant& variant);

// Seeded uniform sampling without replacement within each score stratum,
// keyed on the best refinement's independent score.
std::map<int, std::vector<AnnotatedExample>> sample_quality_buckets(
    const std::vector<AnnotatedExample>& examples, const std::vector<QualityBucket>& buckets,
    std::uint64_t seed);

// Nested prefixes of a single seeded shuffle: every smaller subset is
// contained in every larger one.
std::vector<std::vector<Instruction>> subset_for_scaling(const std::vector<Instruction>& corpus,
                                                         const std::vector<std::size_t>& sizes,
                                                         std::uint64_t seed);

struct Stage1Options {
  IterationPolicy policy;
  AblationVariant variant;
  std::uint64_t seed = 0;
  int concurrency = 1;
};

// Full stage-1 run: collect, critique/refine, filter, build sequences, write
// the SFT JSONL plus its manifest. Returns the manifest.
RunManifest run_stage1(const std::vector<Instruction>& instructions, const Stage1Options& options,
                       gateway::ModelGateway& gw, const std::string& output_path,
                       const std::string& manifest_path);

}  // namespace srt::stage1
