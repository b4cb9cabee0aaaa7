#include <doctest.h>

#include <algorithm>
#include <set>

#include "srt/errors.hpp"
#include "srt/jsonl.hpp"
#include "srt/stage1.hpp"
#include "test_util.hpp"

using namespace srt;
using namespace srt::stage1;
using gateway::MockCriticConfig;
using gateway::MockModel;
using gateway::ModelGateway;
using gateway::ScoreFn;
using testutil::make_corpus;
using testutil::make_example;

namespace {

ModelGateway make_mock_gateway(MockCriticConfig config = {}) {
  return ModelGateway(std::make_shared<MockModel>(config));
}

CollectedPair collect_one(const Instruction& instr, ModelGateway& gw) {
  auto result = collect_initial_responses({instr}, gw);
  REQUIRE(result.pairs.size() == 1);
  return result.pairs[0];
}

std::string segment_text(const TrainingSequence& seq, SegmentKind kind) {
  for (const auto& seg : seq.segment_map) {
    if (seg.kind == kind) return seq.full_text.substr(seg.begin, seg.end - seg.begin);
  }
  return {};
}

}  // namespace

TEST_CASE("saturating scores rise, peak, then the declining round is discarded") {
  MockCriticConfig config;
  config.base_score = 5.9;  // rounds to 6; refinements round to 7, 8, 7, ...
  ModelGateway gw = make_mock_gateway(config);
  auto pair = collect_one(make_corpus(1)[0], gw);
  CHECK(pair.independent_score == 6);

  IterationPolicy policy;
  policy.max_iterations = 4;
  auto outcome = critique_and_refine(pair, policy, gw);
  REQUIRE(std::holds_alternative<AnnotatedExample>(outcome));
  const auto& ex = std::get<AnnotatedExample>(outcome);
  REQUIRE(ex.refinements.size() == 2);  // round 3 scored lower and was dropped
  CHECK(*ex.refinements[0].independent_score == 7);
  CHECK(*ex.refinements[1].independent_score == 8);
  CHECK(*ex.best_index == 1);
}

TEST_CASE("max_iterations=1 yields exactly one refinement") {
  MockCriticConfig config;
  config.base_score = 5.9;
  ModelGateway gw = make_mock_gateway(config);
  auto pair = collect_one(make_corpus(1)[0], gw);
  auto outcome = critique_and_refine(pair, IterationPolicy{}, gw);
  REQUIRE(std::holds_alternative<AnnotatedExample>(outcome));
  CHECK(std::get<AnnotatedExample>(outcome).refinements.size() == 1);
}

TEST_CASE("a no-gain first refinement is kept for rule-2 judgement") {
  MockCriticConfig config;
  config.score_fn = ScoreFn::noisy_regressing;
  config.base_score = 6.0;
  config.p_equal = 1.0;  // every refinement scores exactly the initial score
  ModelGateway gw = make_mock_gateway(config);
  auto pair = collect_one(make_corpus(1)[0], gw);
  IterationPolicy policy;
  policy.max_iterations = 3;
  auto outcome = critique_and_refine(pair, policy, gw);
  REQUIRE(std::holds_alternative<AnnotatedExample>(outcome));
  const auto& ex = std::get<AnnotatedExample>(outcome);
  REQUIRE(ex.refinements.size() == 1);  // kept once, then iteration stopped
  CHECK(*ex.refinements[0].independent_score == 6);
  CHECK(apply_rule2(ex));  // equal score passes the non-strict filter
}

TEST_CASE("always-malformed critic fails the example") {
  MockCriticConfig config;
  config.malformed_rate = 1.0;
  ModelGateway gw = make_mock_gateway(config);
  auto pair = collect_one(make_corpus(1)[0], gw);
  auto outcome = critique_and_refine(pair, IterationPolicy{}, gw);
  REQUIRE(std::holds_alternative<RefineFailure>(outcome));
  CHECK(std::get<RefineFailure>(outcome) == RefineFailure::critic_malformed);
}

TEST_CASE("rule 2 keeps equal-or-better, drops worse") {
  CHECK(apply_rule2(make_example(5, {7})));
  CHECK(!apply_rule2(make_example(7, {6})));
  CHECK(apply_rule2(make_example(6, {6})));
  CHECK(apply_rule2(make_example(7, {6, 8})));  // judged on the best refinement

  auto missing = make_example(5, {7});
  missing.initial_independent_score.reset();
  CHECK_THROWS_AS(apply_rule2(missing), DataError);
}

TEST_CASE("full training sequence has four segments and an instruction-only mask") {
  auto ex = make_example(5, {7});
  auto seq = build_sft_sequence(ex, AblationVariant{});
  REQUIRE(seq.segment_map.size() == 4);
  CHECK(seq.segment_map[0].kind == SegmentKind::instruction);
  CHECK(seq.segment_map[1].kind == SegmentKind::response);
  CHECK(seq.segment_map[2].kind == SegmentKind::feedback);
  CHECK(seq.segment_map[3].kind == SegmentKind::refinement);
  CHECK(validate_sequence(seq).empty());

  // reassembly oracle: segments tile the full text exactly
  std::string reassembled;
  for (const auto& seg : seq.segment_map) {
    CHECK(seg.begin == reassembled.size());
    reassembled += seq.full_text.substr(seg.begin, seg.end - seg.begin);
  }
  CHECK(reassembled == seq.full_text);

  REQUIRE(seq.mask_spans.size() == 1);
  CHECK(seq.mask_spans[0].first == seq.segment_map[0].begin);
  CHECK(seq.mask_spans[0].second == seq.segment_map[0].end);
  std::string masked = seq.full_text.substr(seq.mask_spans[0].first,
                                            seq.mask_spans[0].second - seq.mask_spans[0].first);
  CHECK(masked.find(ex.instruction.text) != std::string::npos);
  CHECK(masked.find("### Instruction") == 0);
}

TEST_CASE("ablation variants drop segments but never touch the refinement") {
  auto ex = make_example(5, {7});
  auto full = build_sft_sequence(ex, AblationVariant{});
  std::string refinement = segment_text(full, SegmentKind::refinement);
  CHECK(refinement.find(ex.refinements[0].response.text) != std::string::npos);

  for (const char* name :
       {"full", "drop_score", "drop_suggestion", "drop_weakness", "all_feedback",
        "refinement_only"}) {
    auto variant = AblationVariant::from_name(name);
    auto seq = build_sft_sequence(ex, variant);
    CHECK(segment_text(seq, SegmentKind::refinement) == refinement);
    CHECK(validate_sequence(seq).empty());
  }

  auto minimal = build_sft_sequence(ex, AblationVariant::from_name("refinement_only"));
  CHECK(minimal.segment_map.size() == 2);
  auto no_feedback = build_sft_sequence(ex, AblationVariant::from_name("all_feedback"));
  CHECK(no_feedback.segment_map.size() == 3);
  auto no_score = build_sft_sequence(ex, AblationVariant::from_name("drop_score"));
  CHECK(segment_text(no_score, SegmentKind::feedback).find("Overall Score") == std::string::npos);

  AblationVariant invalid;
  invalid.all_feedback = true;
  invalid.drop_score = true;
  CHECK_THROWS_AS(build_sft_sequence(ex, invalid), ConfigError);
}

TEST_CASE("quality buckets sample the requested strata deterministically") {
  std::vector<AnnotatedExample> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(make_example(5, {6}));
  for (int i = 0; i < 40; ++i) pool.push_back(make_example(5, {7}));
  for (int i = 0; i < 50; ++i) pool.push_back(make_example(5, {8}));
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].instruction.id = "q" + std::to_string(i);
  }

  std::vector<QualityBucket> buckets = {{6, 10}, {7, 10}, {8, 10}};
  auto sampled = sample_quality_buckets(pool, buckets, 77);
  REQUIRE(sampled.size() == 3);
  for (int score : {6, 7, 8}) {
    REQUIRE(sampled.at(score).size() == 10);
    for (const auto& ex : sampled.at(score)) {
      CHECK(*ex.refinements[*ex.best_index].independent_score == score);
    }
  }
  // same seed, same selection; different seed, (almost surely) different
  auto again = sample_quality_buckets(pool, buckets, 77);
  for (int score : {6, 7, 8}) {
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(sampled.at(score)[i].instruction.id == again.at(score)[i].instruction.id);
    }
  }

  std::vector<QualityBucket> greedy = {{3, 5}};
  CHECK_THROWS_WITH_AS(sample_quality_buckets(pool, greedy, 1),
                       doctest::Contains("InsufficientStratum"), DataError);
}

TEST_CASE("scaling subsets are nested prefixes of one shuffle") {
  auto corpus = make_corpus(200);
  auto subsets = subset_for_scaling(corpus, {25, 50, 100, 200}, 31);
  REQUIRE(subsets.size() == 4);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    CHECK(subsets[i].size() == std::vector<std::size_t>{25, 50, 100, 200}[i]);
  }
  // nestedness oracle: every id in a smaller subset appears in the next one
  for (std::size_t i = 1; i < subsets.size(); ++i) {
    std::set<std::string> larger;
    for (const auto& instr : subsets[i]) larger.insert(instr.id);
    for (const auto& instr : subsets[i - 1]) CHECK(larger.count(instr.id) == 1);
  }
  // the largest subset is a permutation of the corpus
  std::set<std::string> all;
  for (const auto& instr : subsets.back()) all.insert(instr.id);
  CHECK(all.size() == corpus.size());

  CHECK_THROWS_AS(subset_for_scaling(corpus, {300}, 1), DataError);
  CHECK_THROWS_AS(subset_for_scaling(corpus, {50, 25}, 1), ConfigError);
}

TEST_CASE("run_stage1 writes sequences and a balanced manifest") {
  testutil::TempDir dir;
  MockCriticConfig config;
  config.base_score = 5.9;
  config.malformed_rate = 0.2;
  config.seed = 4;
  MockModel model(config);
  ModelGateway gw(std::make_shared<MockModel>(config));

  auto corpus = make_corpus(50);
  // independent replay of the seeded malformed decisions
  std::size_t expected_failures = 0;
  for (const auto& instr : corpus) {
    if (model.malformed_fires(instr.text, "A draft answer addressing: " + instr.text)) {
      ++expected_failures;
    }
  }

  Stage1Options options;
  options.seed = 4;
  auto manifest = run_stage1(corpus, options, gw, dir.file("sft.jsonl"),
                             dir.file("sft.manifest.json"));
  CHECK(manifest.counts.balanced());
  CHECK(manifest.counts.input_n == 50);
  CHECK(manifest.counts.rule1_rejected == expected_failures);
  CHECK(manifest.counts.rule2_rejected == 0);  // saturating gains always improve
  CHECK(manifest.counts.emitted_n == 50 - expected_failures);
  CHECK(manifest.status == "complete");

  auto records = jsonl::read_records(dir.file("sft.jsonl"));
  CHECK(records.size() == manifest.counts.emitted_n);
  for (const auto& record : records) {
    auto seq = jsonl::sequence_from_json(record);
    CHECK(validate_sequence(seq).empty());
    CHECK(record.at("initial_score").get<int>() == 6);
  }

  auto loaded = RunManifest::load(dir.file("sft.manifest.json"));
  CHECK(loaded.counts.emitted_n == manifest.counts.emitted_n);
  CHECK(loaded.content_checksum == manifest.content_checksum);
}
