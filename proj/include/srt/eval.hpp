#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "srt/gateway.hpp"
#include "srt/stage1.hpp"
#include "srt/types.hpp"

namespace srt::eval {

// Scores a (instruction, response) pair via the score-only path; absent on
// malformed output.
using Scorer = std::function<std::optional<int>(const std::string&, const std::string&)>;

Scorer gateway_scorer(gateway::ModelGateway& gw);

struct AgreementPair {
  std::string instruction;
  std::string chosen;
  std::string rejected;
};

struct AgreementResult {
  std::uint64_t n = 0;        // pairs with both sides scored
  std::uint64_t correct = 0;  // strict score(chosen) > score(rejected)
  std::uint64_t ties = 0;     // counted, never credited
  std::uint64_t excluded = 0; // a side failed to score
  double agreement_rate = 0.0;
};

AgreementResult eval_agreement(const std::vector<AgreementPair>& pairs, const Scorer& scorer);

struct RefineOnceResult {
  std::string text;
  bool fallback = false;  // self-critique malformed, initial response returned
};

// Greedy initial response, one self-critique + refinement in the learned
// sequence format.
RefineOnceResult self_refine_once(const Instruction& instruction, gateway::ModelGateway& gw);

// Argmax over planted candidate scores, earliest index on ties; unscored
// candidates lose to any scored one. Throws when every candidate is unscored.
std::size_t rerank_select(const std::vector<std::optional<int>>& scores);

struct RerankResult {
  std::string text;
  std::size_t selected_index = 0;
  std::size_t candidate_count = 0;
  std::size_t duplicate_count = 0;
};

RerankResult rerank_best_of_n(const Instruction& instruction, gateway::ModelGateway& gw,
                              const Scorer& scorer, int n = 16);

struct IterationRow {
  int iteration = 0;  // 0 = initial responses
  std::uint64_t count = 0;
  double mean_score = 0.0;
};

// Mean independent score per iteration; examples may exit early so counts
// can shrink with the iteration index.
std::vector<IterationRow> iteration_study(const std::vector<Instruction>& instructions,
                                          const stage1::IterationPolicy& policy,
                                          gateway::ModelGateway& gw, int concurrency = 1);

struct DistributionStats {
  std::vector<std::uint64_t> initial_histogram = std::vector<std::uint64_t>(10, 0);
  std::vector<std::uint64_t> refined_histogram = std::vector<std::uint64_t>(10, 0);
  std::optional<double> mean_improvement;  // absent on an empty corpus
};

DistributionStats score_distribution_stats(const std::vector<std::pair<int, int>>& score_pairs);

}  // namespace srt::eval
