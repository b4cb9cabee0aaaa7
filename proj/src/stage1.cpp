#include "srt/stage1.hpp"

#include <algorithm>
#include <random>

#include "srt/errors.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/jsonl.hpp"
#include "srt/parallel.hpp"
#include "srt/prompting.hpp"

namespace srt::stage1 {

using gateway::GenerationRequest;
using gateway::RoleTag;

void AblationVariant::validate() const {
  bool elementwise = drop_score || drop_suggestion || drop_weakness;
  if (all_feedback && (elementwise || refinement_only)) {
    throw ConfigError("ablation: all_feedback excludes other drops");
  }
  if (refinement_only && (elementwise || all_feedback)) {
    throw ConfigError("ablation: refinement_only excludes other drops");
  }
}

std::string AblationVariant::name() const {
  if (refinement_only) return "refinement_only";
  if (all_feedback) return "all_feedback";
  std::string n;
  if (drop_score) n += "-score";
  if (drop_suggestion) n += "-suggestion";
  if (drop_weakness) n += "-weakness";
  return n.empty() ? "full" : n.substr(1) + "_dropped";
}

AblationVariant AblationVariant::from_name(const std::string& name) {
  AblationVariant v;
  if (name == "full" || name.empty()) return v;
  if (name == "refinement_only") { v.refinement_only = true; return v; }
  if (name == "all_feedback") { v.all_feedback = true; return v; }
  if (name == "drop_score") { v.drop_score = true; return v; }
  if (name == "drop_suggestion") { v.drop_suggestion = true; return v; }
  if (name == "drop_weakness") { v.drop_weakness = true; return v; }
  throw ConfigError("unknown ablation variant: " + name);
}

namespace {

std::optional<int> score_response(const std::string& instruction, const std::string& response,
                                  gateway::ModelGateway& gw) {
  auto req = GenerationRequest::for_role(
      RoleTag::score, prompting::render_score_only_prompt(instruction, response));
  auto outcome = parser::parse_score_only(gw.generate_text(req));
  return outcome.score;
}

}  // namespace

CollectResult collect_initial_responses(const std::vector<Instruction>& instructions,
                                        gateway::ModelGateway& gw, int concurrency) {
  CollectResult result;
  std::vector<std::optional<CollectedPair>> slots(instructions.size());
  std::atomic<std::uint64_t> failures{0};
  parallel_for(instructions.size(), concurrency, [&](std::size_t i) {
    const auto& instr = instructions[i];
    if (instr.turn_count != 1) {
      throw DataError("instruction " + instr.id + ": multi-turn inputs are not supported");
    }
    try {
      auto req = GenerationRequest::for_role(RoleTag::respond,
                                             prompting::render_generation_prompt(instr.text));
      std::string text = gw.generate_text(req);
      auto score = score_response(instr.text, text, gw);
      if (!score) {
        ++failures;
        return;
      }
      CollectedPair pair;
      pair.instruction = instr;
      pair.response = ModelResponse{text, ResponseRole::initial, req.temperature, 0};
      pair.independent_score = *score;
      slots[i] = std::move(pair);
    } catch (const RemoteError&) {
      ++failures;  // skipped, never retried indefinitely
    }
  });
  for (auto& slot : slots) {
    if (slot) result.pairs.push_back(std::move(*slot));
  }
  result.failures = failures.load();
  return result;
}

std::variant<AnnotatedExample, RefineFailure> critique_and_refine(
    const CollectedPair& pair, const IterationPolicy& policy, gateway::ModelGateway& gw) {
  if (policy.max_iterations < 1) throw ConfigError("policy: max_iterations must be >= 1");

  AnnotatedExample ex;
  ex.instruction = pair.instruction;
  ex.initial = pair.response;
  ex.initial_independent_score = pair.independent_score;

  std::string current_text = pair.response.text;
  int prev_score = pair.independent_score;

  for (int k = 1; k <= policy.max_iterations; ++k) {
    auto req = GenerationRequest::for_role(
        RoleTag::critique,
        prompting::render_critic_prompt(pair.instruction.text, current_text));
    auto outcome = parser::parse_critic_output(gw.generate_text(req));
    if (outcome.status != parser::ParseStatus::ok) {
      if (k == 1) return RefineFailure::critic_malformed;
      break;  // truncate to the last good iteration
    }
    auto score = score_response(pair.instruction.text, *outcome.refinement_text, gw);
    if (!score) {
      if (k == 1) return RefineFailure::score_malformed;
      break;
    }
    if (k == 1) {
      ex.feedback = *outcome.feedback;
      ex.leniently_parsed = outcome.leniently_parsed;
    }
    double gain = static_cast<double>(*score) - prev_score;
    if (policy.stop_on_no_gain && gain <= policy.gain_epsilon && k > 1) {
      break;  // a refinement that does not improve is discarded
    }
    RefinementRecord record;
    record.response = ModelResponse{*outcome.refinement_text, ResponseRole::refinement, 0.0, k};
    record.feedback = *outcome.feedback;
    record.independent_score = *score;
    ex.refinements.push_back(std::move(record));
    prev_score = *score;
    current_text = ex.refinements.back().response.text;
    // The first refinement is always kept so Rule #2 can judge it, but a
    // no-gain first round still ends the loop.
    if (policy.stop_on_no_gain && gain <= policy.gain_epsilon) break;
  }
  if (ex.refinements.empty()) return RefineFailure::critic_malformed;
  ex.best_index = select_best_refinement(ex);
  return ex;
}

bool apply_rule2(const AnnotatedExample& example) {
  if (!example.initial_independent_score) throw DataError("MissingScore: initial");
  if (!example.best_index || !example.refinements[*example.best_index].independent_score) {
    throw DataError("MissingScore: best refinement");
  }
  return *example.refinements[*example.best_index].independent_score >=
         *example.initial_independent_score;
}

TrainingSequence build_sft_sequence(const AnnotatedExample& example,
                                    const AblationVariant& variant) {
  variant.validate();
  if (!example.best_index || example.refinements.empty()) {
    throw DataError("IncompleteExample: best_index not set");
  }
  const auto& best = example.refinements[*example.best_index];

  TrainingSequence seq;
  auto add_segment = [&seq](SegmentKind kind, std::string_view heading, std::string_view body) {
    std::size_t begin = seq.full_text.size();
    seq.full_text += heading;
    seq.full_text += body;
    seq.full_text += '\n';
    seq.segment_map.push_back({kind, begin, seq.full_text.size()});
  };

  add_segment(SegmentKind::instruction, "### Instruction\n", example.instruction.text);
  if (!variant.refinement_only) {
    add_segment(SegmentKind::response, "### Response\n", example.initial.text);
    if (!variant.all_feedback) {
      std::string body;
      if (!variant.drop_weakness) body += example.feedback.weaknesses;
      if (!variant.drop_suggestion) {
        if (!body.empty()) body += '\n';
        body += "Suggestions:\n" + example.feedback.suggestions;
      }
      if (!variant.drop_score) {
        if (!body.empty()) body += '\n';
        body += "Overall Score: [[" + std::to_string(example.feedback.overall_score) + "]]";
      }
      add_segment(SegmentKind::feedback, "### Feedback\n", body);
    }
  }
  add_segment(SegmentKind::refinement, "### Improved Response\n", best.response.text);

  // Loss mask covers exactly the instruction segment, heading included.
  seq.mask_spans.emplace_back(seq.segment_map.front().begin, seq.segment_map.front().end);
  return seq;
}

std::map<int, std::vector<AnnotatedExample>> sample_quality_buckets(
    const std::vector<AnnotatedExample>& examples, const std::vector<QualityBucket>& buckets,
    std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (!ex.best_index) continue;
    auto score = ex.refinements[*ex.best_index].independent_score;
    if (score) strata[*score].push_back(i);
  }
  std::map<int, std::vector<AnnotatedExample>> out;
  for (const auto& bucket : buckets) {
    auto it = strata.find(bucket.target_score);
    std::size_t available = (it == strata.end()) ? 0 : it->second.size();
    if (available < bucket.sample_size) {
      throw DataError("InsufficientStratum: score " + std::to_string(bucket.target_score) +
                      " has " + std::to_string(available) + " examples, need " +
                      std::to_string(bucket.sample_size));
    }
    std::vector<std::size_t> indices = it->second;
    std::mt19937_64 rng(hash_combine(seed, static_cast<std::uint64_t>(bucket.target_score)));
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(bucket.sample_size);
    std::sort(indices.begin(), indices.end());  // keep corpus order within a bucket
    auto& dst = out[bucket.target_score];
    for (std::size_t i : indices) dst.push_back(examples[i]);
  }
  return out;
}

std::vector<std::vector<Instruction>> subset_for_scaling(const std::vector<Instruction>& corpus,
                                                         const std::vector<std::size_t>& sizes,
                                                         std::uint64_t seed) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < sizes[i - 1]) throw ConfigError("subset sizes must be ascending");
  }
  if (!sizes.empty() && sizes.back() > corpus.size()) {
    throw DataError("SizeExceedsCorpus: " + std::to_string(sizes.back()) + " > " +
                    std::to_string(corpus.size()));
  }
  std::vector<Instruction> shuffled = corpus;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::vector<Instruction>> out;
  for (std::size_t size : sizes) {
    out.emplace_back(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(size));
  }
  return out;
}

RunManifest run_stage1(const std::vector<Instruction>& instructions, const Stage1Options& options,
                       gateway::ModelGateway& gw, const std::string& output_path,
                       const std::string& manifest_path) {
  options.variant.validate();
  RunManifest manifest;
  manifest.stage = "build_sft";
  manifest.sampling = default_sampling();
  manifest.trainer_hints = default_trainer_hints("build_sft");
  manifest.seed = options.seed;
  manifest.counts.input_n = instructions.size();
  manifest.output_path = output_path;
  manifest.choices["critic_message_role"] = "single user message";
  manifest.choices["initial_score_timing"] = "score_only at collection time";
  manifest.choices["non_best_iterations"] = "dropped from sequences, counted in detail";

  try {
    auto collected = collect_initial_responses(instructions, gw, options.concurrency);
    manifest.detail["generation_failed"] = collected.failures;
    manifest.counts.rule1_rejected += collected.failures;

    std::vector<std::optional<AnnotatedExample>> kept(collected.pairs.size());
    std::atomic<std::uint64_t> rule1{0}, rule2{0}, iterations_total{0};
    parallel_for(collected.pairs.size(), options.concurrency, [&](std::size_t i) {
      auto outcome = critique_and_refine(collected.pairs[i], options.policy, gw);
      if (std::holds_alternative<RefineFailure>(outcome)) {
        ++rule1;
        return;
      }
      auto& ex = std::get<AnnotatedExample>(outcome);
      iterations_total += ex.refinements.size();
      if (!apply_rule2(ex)) {
        ++rule2;
        return;
      }
      kept[i] = std::move(ex);
    });
    manifest.counts.rule1_rejected += rule1.load();
    manifest.counts.rule2_rejected = rule2.load();
    manifest.detail["iterations_total"] = iterations_total.load();

    std::vector<nlohmann::json> records;
    for (auto& slot : kept) {
      if (!slot) continue;
      const auto& ex = *slot;
      TrainingSequence seq = build_sft_sequence(ex, options.variant);
      auto violations = validate_sequence(seq);
      if (!violations.empty()) {
        throw DataError("internal: invalid sequence for " + ex.instruction.id + ": " +
                        violations.front());
      }
      nlohmann::json record = jsonl::sequence_to_json(seq);
      record["id"] = ex.instruction.id;
      record["initial_score"] = *ex.initial_independent_score;
      nlohmann::json scores = nlohmann::json::array();
      for (const auto& r : ex.refinements) scores.push_back(*r.independent_score);
      record["refinement_scores"] = scores;
      record["best_index"] = *ex.best_index;
      record["variant"] = options.variant.name();
      record["leniently_parsed"] = ex.leniently_parsed;
      records.push_back(std::move(record));
    }
    manifest.counts.emitted_n = records.size();
    jsonl::write_records(output_path, records);
    manifest.content_checksum = to_hex(jsonl::file_checksum(output_path));
  } catch (const BudgetExceededError&) {
    manifest.status = "interrupted";
    manifest.save(manifest_path);
    throw;
  }
  manifest.save(manifest_path);
  return manifest;
}

}  // namespace srt::stage1
