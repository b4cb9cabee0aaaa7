#include "srt/eval.hpp"

#include <atomic>
#include <mutex>

#include "srt/errors.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/parallel.hpp"
#include "srt/prompting.hpp"
#include "srt/stage2.hpp"

namespace srt::eval {

using gateway::GenerationRequest;
using gateway::RoleTag;

Scorer gateway_scorer(gateway::ModelGateway& gw) {
  return [&gw](const std::string& instruction, const std::string& response) {
    auto req = GenerationRequest::for_role(
        RoleTag::score, prompting::render_score_only_prompt(instruction, response));
    return parser::parse_score_only(gw.generate_text(req)).score;
  };
}

AgreementResult eval_agreement(const std::vector<AgreementPair>& pairs, const Scorer& scorer) {
  AgreementResult result;
  for (const auto& pair : pairs) {
    auto chosen = scorer(pair.instruction, pair.chosen);
    auto rejected = scorer(pair.instruction, pair.rejected);
    if (!chosen || !rejected) {
      ++result.excluded;
      continue;
    }
    ++result.n;
    if (*chosen > *rejected) {
      ++result.correct;
    } else if (*chosen == *rejected) {
      ++result.ties;
    }
  }
  result.agreement_rate =
      result.n == 0 ? 0.0 : static_cast<double>(result.correct) / static_cast<double>(result.n);
  return result;
}

RefineOnceResult self_refine_once(const Instruction& instruction, gateway::ModelGateway& gw) {
  auto respond = GenerationRequest::for_role(RoleTag::respond,
                                             prompting::render_generation_prompt(instruction.text));
  respond.temperature = 0.0;  // greedy decoding in the evaluation setting
  std::string initial = gw.generate_text(respond);

  auto critique = GenerationRequest::for_role(
      RoleTag::critique, stage2::self_critique_prompt(instruction.text, initial));
  std::string raw = gw.generate_text(critique);
  auto outcome = parser::parse_critic_output(raw);
  if (outcome.status != parser::ParseStatus::ok) {
    outcome = parser::parse_critic_output("### Feedback\n" + raw);
  }
  if (outcome.status != parser::ParseStatus::ok) {
    return {initial, true};
  }
  return {*outcome.refinement_text, false};
}

std::size_t rerank_select(const std::vector<std::optional<int>>& scores) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) continue;
    if (!best || *scores[i] > *scores[*best]) best = i;  // strict >, earliest index wins ties
  }
  if (!best) throw DataError("AllCandidatesUnscored");
  return *best;
}

RerankResult rerank_best_of_n(const Instruction& instruction, gateway::ModelGateway& gw,
                              const Scorer& scorer, int n) {
  if (n < 1) throw ConfigError("rerank: n must be >= 1");
  auto candidates =
      gw.sample_candidates(prompting::render_generation_prompt(instruction.text), n, 0.7);
  std::vector<std::optional<int>> scores;
  scores.reserve(candidates.texts.size());
  for (const auto& text : candidates.texts) {
    scores.push_back(scorer(instruction.text, text));
  }
  RerankResult result;
  result.selected_index = rerank_select(scores);
  result.text = candidates.texts[result.selected_index];
  result.candidate_count = candidates.texts.size();
  result.duplicate_count = candidates.duplicate_count;
  return result;
}

std::vector<IterationRow> iteration_study(const std::vector<Instruction>& instructions,
                                          const stage1::IterationPolicy& policy,
                                          gateway::ModelGateway& gw, int concurrency) {
  if (policy.max_iterations < 2) {
    throw ConfigError("iteration_study: policy.max_iterations must be >= 2");
  }
  std::vector<std::vector<std::optional<int>>> per_example(instructions.size());
  parallel_for(instructions.size(), concurrency, [&](std::size_t i) {
    const auto& instr = instructions[i];
    auto respond =
        GenerationRequest::for_role(RoleTag::respond, prompting::render_generation_prompt(instr.text));
    std::string initial = gw.generate_text(respond);
    auto scorer = gateway_scorer(gw);
    auto initial_score = scorer(instr.text, initial);
    if (!initial_score) return;

    stage1::CollectedPair pair;
    pair.instruction = instr;
    pair.response = ModelResponse{initial, ResponseRole::initial, respond.temperature, 0};
    pair.independent_score = *initial_score;
    auto outcome = stage1::critique_and_refine(pair, policy, gw);

    auto& row = per_example[i];
    row.resize(static_cast<std::size_t>(policy.max_iterations) + 1);
    row[0] = *initial_score;
    if (std::holds_alternative<AnnotatedExample>(outcome)) {
      for (const auto& ref : std::get<AnnotatedExample>(outcome).refinements) {
        row[static_cast<std::size_t>(ref.response.iteration)] = ref.independent_score;
      }
    }
  });

  std::vector<IterationRow> table;
  for (int k = 0; k <= policy.max_iterations; ++k) {
    IterationRow row;
    row.iteration = k;
    double sum = 0.0;
    for (const auto& scores : per_example) {
      if (static_cast<std::size_t>(k) < scores.size() && scores[k]) {
        ++row.count;
        sum += *scores[k];
      }
    }
    if (row.count > 0) {
      row.mean_score = sum / static_cast<double>(row.count);
      table.push_back(row);
    }
  }
  return table;
}

DistributionStats score_distribution_stats(const std::vector<std::pair<int, int>>& score_pairs) {
  DistributionStats stats;
  if (score_pairs.empty()) return stats;
  double delta_sum = 0.0;
  for (const auto& [initial, refined] : score_pairs) {
    if (initial < 1 || initial > 10 || refined < 1 || refined > 10) {
      throw DataError("score_distribution_stats: score out of [1, 10]");
    }
    ++stats.initial_histogram[static_cast<std::size_t>(initial - 1)];
    ++stats.refined_histogram[static_cast<std::size_t>(refined - 1)];
    delta_sum += refined - initial;
  }
  stats.mean_improvement = delta_sum / static_cast<double>(score_pairs.size());
  return stats;
}

}  // namespace srt::eval
