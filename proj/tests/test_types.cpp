#include <doctest.h>

#include <random>

#include "srt/errors.hpp"
#include "srt/types.hpp"
#include "test_util.hpp"

using namespace srt;
using testutil::make_example;

namespace {

// Independent oracle: linear scan preferring the lowest index.
std::size_t argmax_oracle(const std::vector<int>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace

TEST_CASE("select_best_refinement basic cases") {
  CHECK(select_best_refinement(make_example(5, {6})) == 0);
  CHECK(select_best_refinement(make_example(5, {6, 8, 7})) == 1);
  CHECK(select_best_refinement(make_example(5, {7, 7})) == 0);  // tie -> earliest iteration
}

TEST_CASE("select_best_refinement matches linear-scan oracle on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> score(1, 10);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> scores(len(rng));
    for (auto& s : scores) s = score(rng);
    auto ex = make_example(5, scores);
    auto got = select_best_refinement(ex);
    CHECK(got == argmax_oracle(scores));
    CHECK(select_best_refinement(ex) == got);  // deterministic, idempotent
  }
}

TEST_CASE("select_best_refinement errors") {
  auto ex = make_example(5, {6, 7});
  ex.refinements[1].independent_score.reset();
  CHECK_THROWS_AS(select_best_refinement(ex), DataError);
  ex.refinements.clear();
  CHECK_THROWS_AS(select_best_refinement(ex), DataError);
}

TEST_CASE("validate_example accepts well-formed examples") {
  CHECK(validate_example(make_example(5, {6, 8})).empty());
  CHECK(validate_example(make_example(5, {})).empty());
}

TEST_CASE("validate_example flags out-of-range score") {
  auto ex = make_example(5, {6});
  ex.feedback.overall_score = 11;
  ex.feedback.raw_text = "Overall Score: [[11]]";
  auto violations = validate_example(ex);
  bool found = false;
  for (const auto& v : violations) {
    if (v.find("score_out_of_range") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("validate_example flags best_index that is not the argmax") {
  auto ex = make_example(5, {6, 9, 7});
  ex.best_index = 2;  // direct field mutation past the constructor
  auto violations = validate_example(ex);
  REQUIRE(!violations.empty());
  bool found = false;
  for (const auto& v : violations) {
    if (v == "best_index_not_argmax") found = true;
  }
  CHECK(found);
  // re-running the argmax oracle confirms the flagged index
  CHECK(argmax_oracle({6, 9, 7}) == 1);
}

TEST_CASE("validate_example flags structural breakage") {
  auto ex = make_example(5, {6});
  ex.instruction.text.clear();
  ex.initial.text = "   ";
  ex.refinements[0].response.iteration = 0;
  auto violations = validate_example(ex);
  CHECK(violations.size() >= 3);
}
