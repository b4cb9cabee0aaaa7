#include "srt/stage2.hpp"

#include <algorithm>
#include <atomic>
#include <optional>

#include "srt/errors.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/jsonl.hpp"
#include "srt/parallel.hpp"
#include "srt/prompting.hpp"

namespace srt::stage2 {

using gateway::GenerationRequest;
using gateway::RoleTag;

std::string self_critique_prompt(const std::string& instruction, const std::string& response) {
  return "### Instruction\n" + instruction + "\n### Response\n" + response + "\n### Feedback\n";
}

namespace {

std::optional<int> score_response(const std::string& instruction, const std::string& response,
                                  gateway::ModelGateway& gw) {
  auto req = GenerationRequest::for_role(
      RoleTag::score, prompting::render_score_only_prompt(instruction, response));
  return parser::parse_score_only(gw.generate_text(req)).score;
}

}  // namespace

SelfFeedbackResult generate_self_feedback(const std::vector<Instruction>& instructions,
                                          const std::unordered_set<std::string>& stage1_ids,
                                          gateway::ModelGateway& gw, int concurrency) {
  std::vector<std::string> overlap;
  for (const auto& instr : instructions) {
    if (stage1_ids.count(instr.id)) overlap.push_back(instr.id);
  }
  if (!overlap.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < overlap.size() && i < 10; ++i) ids += " " + overlap[i];
    throw DataError("OverlapDetected: stage-2 instructions shared with stage 1:" + ids);
  }

  SelfFeedbackResult result;
  std::vector<std::optional<SelfFeedbackRecord>> slots(instructions.size());
  std::atomic<std::uint64_t> malformed{0};
  parallel_for(instructions.size(), concurrency, [&](std::size_t i) {
    const auto& instr = instructions[i];
    auto respond = GenerationRequest::for_role(RoleTag::respond,
                                               prompting::render_generation_prompt(instr.text));
    std::string initial_text = gw.generate_text(respond);

    auto critique = GenerationRequest::for_role(RoleTag::critique,
                                                self_critique_prompt(instr.text, initial_text));
    std::string raw = gw.generate_text(critique);
    auto outcome = parser::parse_critic_output(raw);
    if (outcome.status != parser::ParseStatus::ok) {
      outcome = parser::parse_critic_output("### Feedback\n" + raw);
    }
    if (outcome.status != parser::ParseStatus::ok) {
      ++malformed;
      return;
    }
    auto initial_score = score_response(instr.text, initial_text, gw);
    auto refinement_score = score_response(instr.text, *outcome.refinement_text, gw);
    if (!initial_score || !refinement_score) {
      ++malformed;
      return;
    }
    SelfFeedbackRecord record;
    record.instruction = instr;
    record.initial = ModelResponse{initial_text, ResponseRole::initial, respond.temperature, 0};
    record.self_feedback = *outcome.feedback;
    record.self_refinement =
        ModelResponse{*outcome.refinement_text, ResponseRole::refinement, 0.0, 1};
    record.initial_score = *initial_score;
    record.refinement_score = *refinement_score;
    slots[i] = std::move(record);
  });
  for (auto& slot : slots) {
    if (slot) result.records.push_back(std::move(*slot));
  }
  result.malformed_drops = malformed.load();
  return result;
}

PairBuildResult build_preference_pairs(const std::vector<SelfFeedbackRecord>& records) {
  PairBuildResult result;
  for (const auto& record : records) {
    if (record.refinement_score == record.initial_score) {
      ++result.equality_drops;  // "exceed" is strict
      continue;
    }
    if (record.refinement_score < record.initial_score) {
      ++result.decrease_drops;
      continue;
    }
    PreferencePair pair;
    pair.instruction = record.instruction;
    pair.chosen = record.self_refinement;
    pair.rejected = record.initial;
    pair.chosen_score = record.refinement_score;
    pair.rejected_score = record.initial_score;
    pair.stage = PairStage::self_feedback;
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

LengthStats length_stats(const std::vector<PreferencePair>& pairs) {
  LengthStats stats;
  if (pairs.empty()) return stats;
  std::vector<double> chosen, rejected;
  for (const auto& p : pairs) {
    chosen.push_back(static_cast<double>(p.chosen.text.size()));
    rejected.push_back(static_cast<double>(p.rejected.text.size()));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  stats.chosen_mean = mean(chosen);
  stats.chosen_median = median(chosen);
  stats.rejected_mean = mean(rejected);
  stats.rejected_median = median(rejected);
  return stats;
}

RunManifest export_dpo_dataset(const std::vector<PreferencePair>& pairs,
                               const std::string& output_path, const std::string& manifest_path) {
  if (pairs.empty()) throw DataError("EmptyDataset: no preference pairs to export");
  std::vector<nlohmann::json> records;
  for (const auto& pair : pairs) {
    if (pair.chosen_score <= pair.rejected_score) {
      throw DataError("internal: non-strict pair reached export");
    }
    records.push_back(jsonl::pair_to_json(pair));
  }
  jsonl::write_records(output_path, records);

  RunManifest manifest;
  manifest.stage = "build_dpo";
  manifest.sampling = default_sampling();
  manifest.trainer_hints = default_trainer_hints("build_dpo");
  manifest.counts.input_n = pairs.size();
  manifest.counts.emitted_n = pairs.size();
  manifest.output_path = output_path;
  manifest.content_checksum = to_hex(jsonl::file_checksum(output_path));
  manifest.save(manifest_path);
  return manifest;
}

RunManifest run_stage2(const std::vector<Instruction>& instructions,
                       const std::unordered_set<std::string>& stage1_ids,
                       const Stage2Options& options, gateway::ModelGateway& gw,
                       const std::string& output_path, const std::string& manifest_path) {
  RunManifest manifest;
  manifest.stage = "build_dpo";
  manifest.sampling = default_sampling();
  manifest.trainer_hints = default_trainer_hints("build_dpo");
  manifest.seed = options.seed;
  manifest.counts.input_n = instructions.size();
  manifest.output_path = output_path;
  manifest.choices["self_critique_format"] = "learned sequence prefix, model continues";

  try {
    auto collected = generate_self_feedback(instructions, stage1_ids, gw, options.concurrency);
    auto built = build_preference_pairs(collected.records);

    manifest.counts.rule1_rejected = collected.malformed_drops;
    manifest.counts.rule2_rejected = built.equality_drops + built.decrease_drops;
    manifest.counts.emitted_n = built.pairs.size();
    manifest.detail["malformed_drops"] = collected.malformed_drops;
    manifest.detail["equality_drops"] = built.equality_drops;
    manifest.detail["decrease_drops"] = built.decrease_drops;

    std::vector<nlohmann::json> records;
    for (const auto& pair : built.pairs) records.push_back(jsonl::pair_to_json(pair));
    jsonl::write_records(output_path, records);
    manifest.content_checksum = to_hex(jsonl::file_checksum(output_path));

    auto stats = length_stats(built.pairs);
    manifest.detail["chosen_mean_chars"] = static_cast<std::uint64_t>(stats.chosen_mean);
    manifest.detail["rejected_mean_chars"] = static_cast<std::uint64_t>(stats.rejected_mean);
  } catch (const BudgetExceededError&) {
    manifest.status = "interrupted";
    manifest.save(manifest_path);
    throw;
  }
  manifest.save(manifest_path);
  return manifest;
}

}  // namespace srt::stage2
