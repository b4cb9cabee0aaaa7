#include <doctest.h>

#include <fstream>
#include <sstream>

#include "srt/errors.hpp"
#include "srt/hash.hpp"
#include "srt/prompting.hpp"

using namespace srt;

namespace {

// Frozen digests of the committed template assets. A change to either the
// compiled-in text or the asset file shows up here.
constexpr std::uint64_t kCriticChecksum = 0x33400e6b7d06dd38ULL;
constexpr std::uint64_t kScoreOnlyChecksum = 0x8bd00f1508d237c4ULL;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("critic template matches the committed asset byte for byte") {
  CHECK(prompting::critic_template_checksum() == kCriticChecksum);
  CHECK(read_file(std::string(SRT_ASSET_DIR) + "/critic_prompt.txt") ==
        prompting::critic_template());
  CHECK(prompting::score_only_template_checksum() == kScoreOnlyChecksum);
  CHECK(read_file(std::string(SRT_ASSET_DIR) + "/score_only_prompt.txt") ==
        prompting::score_only_template());
}

TEST_CASE("render_critic_prompt substitutes under the expected headings") {
  std::string p = prompting::render_critic_prompt("Write a haiku", "Leaves fall...");
  CHECK(p.find("### Instruction") != std::string::npos);
  CHECK(p.find("### Response") != std::string::npos);
  CHECK(p.find("### Requirements") != std::string::npos);
  CHECK(p.find("### Feedback") != std::string::npos);
  CHECK(p.find("Write a haiku") != std::string::npos);
  CHECK(p.find("Leaves fall...") != std::string::npos);
  CHECK(p.find("Overall Score: [[1-10]]") != std::string::npos);
  // instruction appears before response, which appears before requirements
  CHECK(p.find("Write a haiku") < p.find("Leaves fall..."));
  CHECK(p.find("Leaves fall...") < p.find("### Requirements"));
}

TEST_CASE("rendered length is template length minus placeholders plus inputs") {
  std::string p = prompting::render_critic_prompt("a", "b");
  std::size_t placeholder_len = std::string("{Instruction}").size() +
                                std::string("{Response}").size();
  CHECK(p.size() == prompting::critic_template().size() - placeholder_len + 2);
}

TEST_CASE("rendering is deterministic") {
  CHECK(prompting::render_critic_prompt("x", "y") == prompting::render_critic_prompt("x", "y"));
  CHECK(prompting::render_score_only_prompt("x", "y") ==
        prompting::render_score_only_prompt("x", "y"));
}

TEST_CASE("score-only prompt requests only the rating") {
  std::string p = prompting::render_score_only_prompt("Summarize this", "The summary.");
  CHECK(p.find("Overall Score: [[1-10]]") != std::string::npos);
  CHECK(p.find("### Improved Response") == std::string::npos);
  CHECK(p.find("Identify Weaknesses") == std::string::npos);
}

TEST_CASE("score-only prompts differ only in the response region") {
  std::string a = prompting::render_score_only_prompt("instr", "resp");
  std::string b = prompting::render_score_only_prompt("instr", "resp-changed");
  // diff oracle: strip the longest common prefix and suffix, what remains
  // must be within the response slot
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  std::string diff_a = a.substr(prefix, a.size() - prefix - suffix);
  std::string diff_b = b.substr(prefix, b.size() - prefix - suffix);
  CHECK(std::string("resp").find(diff_a) != std::string::npos);
  CHECK(std::string("resp-changed").find(diff_b) != std::string::npos);
}

TEST_CASE("placeholder substitution leaves template bytes intact elsewhere") {
  std::string p = prompting::render_critic_prompt("INSTR_MARK", "RESP_MARK");
  std::string reassembled = p;
  reassembled.replace(reassembled.find("INSTR_MARK"), 10, "{Instruction}");
  reassembled.replace(reassembled.find("RESP_MARK"), 9, "{Response}");
  CHECK(reassembled == prompting::critic_template());
}

TEST_CASE("empty fields are rejected") {
  CHECK_THROWS_AS(prompting::render_critic_prompt("", "y"), DataError);
  CHECK_THROWS_AS(prompting::render_critic_prompt("x", ""), DataError);
  CHECK_THROWS_AS(prompting::render_score_only_prompt("", ""), DataError);
}
