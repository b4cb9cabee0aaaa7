#include <cstdio>
#include <filesystem>
#include <iostream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "srt/config.hpp"
#include "srt/errors.hpp"
#include "srt/eval.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/jsonl.hpp"
#include "srt/manifest.hpp"
#include "srt/prompting.hpp"
#include "srt/stage1.hpp"
#include "srt/stage2.hpp"

namespace {

using nlohmann::json;
using namespace srt;

struct CommonOpts {
  std::string config_path;
  std::string corpus;
  std::string output;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config (JSON)");
  cmd->add_option("--corpus", opts.corpus, "input corpus JSONL (id, text, source)");
  cmd->add_option("--output", opts.output, "output path");
  cmd->add_option("--manifest", opts.manifest, "manifest path");
  cmd->add_option("--seed", opts.seed, "seed override");
  cmd->add_option("--concurrency", opts.concurrency, "worker threads");
}

PipelineConfig resolve_config(const CommonOpts& opts) {
  PipelineConfig config;
  if (!opts.config_path.empty()) config = PipelineConfig::load(opts.config_path);
  if (!opts.corpus.empty()) config.corpus_path = opts.corpus;
  if (!opts.output.empty()) config.output_path = opts.output;
  if (!opts.manifest.empty()) config.manifest_path = opts.manifest;
  if (opts.seed) config.seed = *opts.seed;
  if (opts.concurrency) config.concurrency = *opts.concurrency;
  return config;
}

std::unordered_set<std::string> corpus_ids(const std::string& path) {
  std::unordered_set<std::string> ids;
  if (path.empty()) return ids;
  for (const auto& instr : jsonl::read_instructions(path)) ids.insert(instr.id);
  return ids;
}

int cmd_collect(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto result = stage1::collect_initial_responses(instructions, *bundle.gateway,
                                                  config.concurrency);
  std::vector<json> records;
  for (const auto& pair : result.pairs) {
    records.push_back({{"id", pair.instruction.id},
                       {"instruction", pair.instruction.text},
                       {"response", pair.response.text},
                       {"independent_score", pair.independent_score}});
  }
  jsonl::write_records(config.output_path, records);

  RunManifest manifest;
  manifest.stage = "collect";
  manifest.sampling = default_sampling();
  manifest.seed = config.seed;
  manifest.counts.input_n = instructions.size();
  manifest.counts.rule1_rejected = result.failures;
  manifest.counts.emitted_n = result.pairs.size();
  manifest.detail["generation_failed"] = result.failures;
  manifest.output_path = config.output_path;
  manifest.content_checksum = to_hex(jsonl::file_checksum(config.output_path));
  if (bundle.cache) manifest.cache_checksum = to_hex(bundle.cache->content_checksum());
  manifest.config = config.to_json();
  manifest.save(config.manifest_path);
  std::printf("collected %zu/%zu responses -> %s\n", result.pairs.size(), instructions.size(),
              config.output_path.c_str());
  return 0;
}

int cmd_critique(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto collected =
      stage1::collect_initial_responses(instructions, *bundle.gateway, config.concurrency);

  std::vector<json> records;
  std::uint64_t rejected = 0;
  for (const auto& pair : collected.pairs) {
    auto outcome = stage1::critique_and_refine(pair, config.policy, *bundle.gateway);
    if (std::holds_alternative<stage1::RefineFailure>(outcome)) {
      ++rejected;
      continue;
    }
    const auto& ex = std::get<AnnotatedExample>(outcome);
    json refinements = json::array();
    for (const auto& ref : ex.refinements) {
      refinements.push_back({{"iteration", ref.response.iteration},
                             {"text", ref.response.text},
                             {"independent_score", *ref.independent_score},
                             {"critic_score", ref.feedback.overall_score}});
    }
    records.push_back({{"id", ex.instruction.id},
                       {"instruction", ex.instruction.text},
                       {"initial", ex.initial.text},
                       {"initial_score", *ex.initial_independent_score},
                       {"weaknesses", ex.feedback.weaknesses},
                       {"suggestions", ex.feedback.suggestions},
                       {"critic_score", ex.feedback.overall_score},
                       {"refinements", refinements},
                       {"best_index", *ex.best_index},
                       {"leniently_parsed", ex.leniently_parsed}});
  }
  jsonl::write_records(config.output_path, records);

  RunManifest manifest;
  manifest.stage = "refine";
  manifest.sampling = default_sampling();
  manifest.seed = config.seed;
  manifest.counts.input_n = instructions.size();
  manifest.counts.rule1_rejected = collected.failures + rejected;
  manifest.counts.emitted_n = records.size();
  manifest.detail["generation_failed"] = collected.failures;
  manifest.detail["max_iterations"] = static_cast<std::uint64_t>(config.policy.max_iterations);
  manifest.output_path = config.output_path;
  manifest.content_checksum = to_hex(jsonl::file_checksum(config.output_path));
  if (bundle.cache) manifest.cache_checksum = to_hex(bundle.cache->content_checksum());
  manifest.config = config.to_json();
  manifest.save(config.manifest_path);
  std::printf("annotated %zu examples (%llu rejected) -> %s\n", records.size(),
              static_cast<unsigned long long>(manifest.counts.rule1_rejected),
              config.output_path.c_str());
  return 0;
}

int cmd_build_sft(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  stage1::Stage1Options options;
  options.policy = config.policy;
  options.variant = stage1::AblationVariant::from_name(config.variant);
  options.seed = config.seed;
  options.concurrency = config.concurrency;
  RunManifest manifest;
  try {
    manifest = stage1::run_stage1(instructions, options, *bundle.gateway, config.output_path,
                                  config.manifest_path);
  } catch (const BudgetExceededError&) {
    // run_stage1 saved an interrupted manifest; attach the config echo so
    // `resume` can pick the run back up.
    auto interrupted = RunManifest::load(config.manifest_path);
    interrupted.config = config.to_json();
    if (bundle.cache) interrupted.cache_checksum = to_hex(bundle.cache->content_checksum());
    interrupted.save(config.manifest_path);
    throw;
  }
  manifest.config = config.to_json();
  if (bundle.cache) manifest.cache_checksum = to_hex(bundle.cache->content_checksum());
  manifest.save(config.manifest_path);
  std::printf("sft dataset: %llu emitted, %llu rule1, %llu rule2 (of %llu) -> %s\n",
              static_cast<unsigned long long>(manifest.counts.emitted_n),
              static_cast<unsigned long long>(manifest.counts.rule1_rejected),
              static_cast<unsigned long long>(manifest.counts.rule2_rejected),
              static_cast<unsigned long long>(manifest.counts.input_n),
              config.output_path.c_str());
  return 0;
}

int cmd_self_feedback(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto stage1_ids = corpus_ids(config.stage1_corpus_path);
  auto result = stage2::generate_self_feedback(instructions, stage1_ids, *bundle.gateway,
                                               config.concurrency);
  std::vector<json> records;
  for (const auto& r : result.records) {
    records.push_back({{"id", r.instruction.id},
                       {"instruction", r.instruction.text},
                       {"initial", r.initial.text},
                       {"weaknesses", r.self_feedback.weaknesses},
                       {"suggestions", r.self_feedback.suggestions},
                       {"critic_score", r.self_feedback.overall_score},
                       {"refinement", r.self_refinement.text},
                       {"initial_score", r.initial_score},
                       {"refinement_score", r.refinement_score}});
  }
  jsonl::write_records(config.output_path, records);

  RunManifest manifest;
  manifest.stage = "collect";
  manifest.sampling = default_sampling();
  manifest.seed = config.seed;
  manifest.counts.input_n = instructions.size();
  manifest.counts.rule1_rejected = result.malformed_drops;
  manifest.counts.emitted_n = records.size();
  manifest.detail["malformed_drops"] = result.malformed_drops;
  manifest.output_path = config.output_path;
  manifest.content_checksum = to_hex(jsonl::file_checksum(config.output_path));
  if (bundle.cache) manifest.cache_checksum = to_hex(bundle.cache->content_checksum());
  manifest.config = config.to_json();
  manifest.save(config.manifest_path);
  std::printf("self-feedback: %zu records (%llu malformed) -> %s\n", records.size(),
              static_cast<unsigned long long>(result.malformed_drops),
              config.output_path.c_str());
  return 0;
}

int cmd_build_dpo(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto stage1_ids = corpus_ids(config.stage1_corpus_path);
  stage2::Stage2Options options;
  options.seed = config.seed;
  options.concurrency = config.concurrency;
  RunManifest manifest;
  try {
    manifest = stage2::run_stage2(instructions, stage1_ids, options, *bundle.gateway,
                                  config.output_path, config.manifest_path);
  } catch (const BudgetExceededError&) {
    auto interrupted = RunManifest::load(config.manifest_path);
    interrupted.config = config.to_json();
    if (bundle.cache) interrupted.cache_checksum = to_hex(bundle.cache->content_checksum());
    interrupted.save(config.manifest_path);
    throw;
  }
  manifest.config = config.to_json();
  if (bundle.cache) manifest.cache_checksum = to_hex(bundle.cache->content_checksum());
  manifest.save(config.manifest_path);
  std::printf("dpo dataset: %llu pairs (eq %llu, dec %llu, malformed %llu) -> %s\n",
              static_cast<unsigned long long>(manifest.counts.emitted_n),
              static_cast<unsigned long long>(manifest.detail.at("equality_drops")),
              static_cast<unsigned long long>(manifest.detail.at("decrease_drops")),
              static_cast<unsigned long long>(manifest.detail.at("malformed_drops")),
              config.output_path.c_str());
  return 0;
}

int cmd_eval_agreement(const PipelineConfig& config, const std::string& pairs_path) {
  auto bundle = make_gateway(config);
  std::vector<eval::AgreementPair> pairs;
  for (const auto& j : jsonl::read_records(pairs_path)) {
    pairs.push_back({j.at("instruction").get<std::string>(), j.at("chosen").get<std::string>(),
                     j.at("rejected").get<std::string>()});
  }
  auto result = eval::eval_agreement(pairs, eval::gateway_scorer(*bundle.gateway));
  json report = {{"n", result.n},
                 {"correct", result.correct},
                 {"ties", result.ties},
                 {"excluded", result.excluded},
                 {"agreement_rate", result.agreement_rate}};
  std::cout << report.dump(2) << '\n';
  if (!config.output_path.empty() && config.output_path != "output.jsonl") {
    std::ofstream out(config.output_path);
    out << report.dump(2) << '\n';
  }
  return 0;
}

int cmd_rerank_compare(const PipelineConfig& config, int n) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto scorer = eval::gateway_scorer(*bundle.gateway);
  std::vector<json> records;
  for (const auto& instr : instructions) {
    auto refined = eval::self_refine_once(instr, *bundle.gateway);
    auto reranked = eval::rerank_best_of_n(instr, *bundle.gateway, scorer, n);
    records.push_back({{"id", instr.id},
                       {"instruction", instr.text},
                       {"self_refined", refined.text},
                       {"refine_fallback", refined.fallback},
                       {"reranked", reranked.text},
                       {"candidate_count", reranked.candidate_count},
                       {"duplicate_count", reranked.duplicate_count},
                       {"selected_index", reranked.selected_index}});
  }
  jsonl::write_records(config.output_path, records);
  RunManifest manifest;
  manifest.stage = "eval";
  manifest.sampling = default_sampling();
  manifest.seed = config.seed;
  manifest.counts.input_n = instructions.size();
  manifest.counts.emitted_n = records.size();
  manifest.output_path = config.output_path;
  manifest.content_checksum = to_hex(jsonl::file_checksum(config.output_path));
  manifest.config = config.to_json();
  manifest.save(config.manifest_path);
  std::printf("comparison bundle: %zu instructions, %d candidates each -> %s\n", records.size(),
              n, config.output_path.c_str());
  return 0;
}

int cmd_iter_study(const PipelineConfig& config) {
  auto bundle = make_gateway(config);
  auto instructions = jsonl::read_instructions(config.corpus_path);
  auto table =
      eval::iteration_study(instructions, config.policy, *bundle.gateway, config.concurrency);
  json rows = json::array();
  std::printf("iteration  count  mean_score\n");
  for (const auto& row : table) {
    std::printf("%9d  %5llu  %10.3f\n", row.iteration,
                static_cast<unsigned long long>(row.count), row.mean_score);
    rows.push_back({{"iteration", row.iteration}, {"count", row.count},
                    {"mean_score", row.mean_score}});
  }
  if (!config.output_path.empty() && config.output_path != "output.jsonl") {
    std::ofstream out(config.output_path);
    out << rows.dump(2) << '\n';
  }
  return 0;
}

int cmd_stats(const std::string& input_path) {
  std::vector<std::pair<int, int>> score_pairs;
  for (const auto& j : jsonl::read_records(input_path)) {
    int initial = j.at("initial_score").get<int>();
    int refined;
    if (j.contains("refinement_score")) {
      refined = j.at("refinement_score").get<int>();
    } else if (j.contains("refinement_scores")) {
      const auto& scores = j.at("refinement_scores");
      refined = scores.at(j.value("best_index", 0)).get<int>();
    } else {
      throw DataError("stats: record has no refinement score");
    }
    score_pairs.emplace_back(initial, refined);
  }
  auto stats = eval::score_distribution_stats(score_pairs);
  std::printf("score  initial  refined\n");
  for (int s = 1; s <= 10; ++s) {
    std::printf("%5d  %7llu  %7llu\n", s,
                static_cast<unsigned long long>(stats.initial_histogram[s - 1]),
                static_cast<unsigned long long>(stats.refined_histogram[s - 1]));
  }
  if (stats.mean_improvement) {
    std::printf("mean improvement: %+.3f\n", *stats.mean_improvement);
  } else {
    std::printf("mean improvement: n/a (empty corpus)\n");
  }
  return 0;
}

int cmd_validate(const std::string& input_path) {
  std::size_t checked = 0, bad = 0;
  for (const auto& j : jsonl::read_records(input_path)) {
    auto seq = jsonl::sequence_from_json(j);
    auto violations = validate_sequence(seq);
    ++checked;
    if (!violations.empty()) {
      ++bad;
      std::fprintf(stderr, "record %zu: %s\n", checked, violations.front().c_str());
    }
  }
  std::printf("validated %zu records, %zu violations\n", checked, bad);
  if (bad > 0) throw DataError("validation failed");
  return 0;
}

int cmd_resume(const std::string& manifest_path) {
  auto manifest = RunManifest::load(manifest_path);
  if (manifest.config.is_null()) {
    throw ManifestCorruptError("manifest has no config echo, cannot resume");
  }
  auto config = PipelineConfig::from_json(manifest.config);
  if (manifest.status == "interrupted") {
    // The cap that interrupted the run would trip again at the same point;
    // resuming implies the operator has lifted it. Cached requests replay free.
    config.budget = {};
  }
  if (config.cache_path) {
    gateway::ReplayCache cache(*config.cache_path);
    cache.verify_integrity();
  }
  if (manifest.status == "complete" &&
      std::filesystem::exists(manifest.output_path) &&
      to_hex(jsonl::file_checksum(manifest.output_path)) == manifest.content_checksum) {
    std::printf("run already complete, nothing to do\n");
    return 0;
  }
  if (manifest.stage == "build_sft" || manifest.stage == "refine") return cmd_build_sft(config);
  if (manifest.stage == "build_dpo") return cmd_build_dpo(config);
  if (manifest.stage == "collect") return cmd_collect(config);
  throw ConfigError("resume: unsupported stage " + manifest.stage);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-refinement data pipeline: critic annotation, filtering, SFT/DPO export"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string pairs_path, input_path, manifest_path;
  int rerank_n = 16;
  std::optional<int> max_iterations;
  std::string variant;

  auto* collect = app.add_subcommand("collect", "generate + score initial responses");
  add_common(collect, opts);
  auto* critique = app.add_subcommand("critique", "critique and refine collected responses");
  add_common(critique, opts);
  critique->add_option("--max-iterations", max_iterations, "refinement iteration cap");
  auto* build_sft = app.add_subcommand("build-sft", "full stage-1 SFT dataset build");
  add_common(build_sft, opts);
  build_sft->add_option("--variant", variant,
                        "full|drop_score|drop_suggestion|drop_weakness|all_feedback|refinement_only");
  auto* self_feedback = app.add_subcommand("self-feedback", "stage-2 self-feedback collection");
  add_common(self_feedback, opts);
  auto* build_dpo = app.add_subcommand("build-dpo", "stage-2 preference pair export");
  add_common(build_dpo, opts);
  auto* eval_agreement = app.add_subcommand("eval-agreement", "HH-RLHF style agreement eval");
  add_common(eval_agreement, opts);
  eval_agreement->add_option("--pairs", pairs_path, "JSONL with instruction/chosen/rejected")
      ->required();
  auto* rerank = app.add_subcommand("rerank-compare", "self-refinement vs best-of-n bundle");
  add_common(rerank, opts);
  rerank->add_option("--n", rerank_n, "candidate count (default 16)");
  auto* iter_study = app.add_subcommand("iter-study", "per-iteration mean score table");
  add_common(iter_study, opts);
  iter_study->add_option("--max-iterations", max_iterations, "iterations to run");
  auto* stats = app.add_subcommand("stats", "score histograms + mean improvement");
  stats->add_option("--input", input_path, "annotated or self-feedback JSONL")->required();
  auto* validate = app.add_subcommand("validate", "check SFT dataset invariants");
  validate->add_option("--input", input_path, "SFT JSONL")->required();
  auto* resume = app.add_subcommand("resume", "resume an interrupted run from its manifest");
  resume->add_option("--manifest", manifest_path, "manifest path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = resolve_config(opts);
    if (max_iterations) {
      config.policy.max_iterations = *max_iterations;
      if (iter_study->parsed()) config.policy.stop_on_no_gain = false;
    }
    if (!variant.empty()) config.variant = variant;

    if (collect->parsed()) return cmd_collect(config);
    if (critique->parsed()) return cmd_critique(config);
    if (build_sft->parsed()) return cmd_build_sft(config);
    if (self_feedback->parsed()) return cmd_self_feedback(config);
    if (build_dpo->parsed()) return cmd_build_dpo(config);
    if (eval_agreement->parsed()) return cmd_eval_agreement(config, pairs_path);
    if (rerank->parsed()) return cmd_rerank_compare(config, rerank_n);
    if (iter_study->parsed()) return cmd_iter_study(config);
    if (stats->parsed()) return cmd_stats(input_path);
    if (validate->parsed()) return cmd_validate(input_path);
    if (resume->parsed()) return cmd_resume(manifest_path);
  } catch (const SrtError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ErrorCode::data_error);
  }
  return 1;
}
