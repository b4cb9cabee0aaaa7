#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srt/types.hpp"

namespace srt::parser {

enum class ParseStatus { ok, rule1_violation, malformed_score };

// Missing-element tags for Rule #1 accounting.
enum class MissingElement { feedback_heading, overall_score, improved_response, weaknesses, suggestions };

const char* to_string(ParseStatus status);
const char* to_string(MissingElement element);

struct ParseOutcome {
  ParseStatus status = ParseStatus::rule1_violation;
  std::optional<CritiqueFeedback> feedback;
  std::optional<std::string> refinement_text;
  std::vector<MissingElement> violations;
  bool leniently_parsed = false;  // score found only via the lenient pattern
};

// Total function: never throws on any input, status always set.
// Strict score pattern is "Overall Score: [[k]]", k in 1..10; the lenient
// fallback accepts "Overall Score: k" and tags the outcome. Headings match
// with 0-3 leading '#', surrounding whitespace, case-insensitive.
ParseOutcome parse_critic_output(std::string_view raw);

struct ScoreOutcome {
  std::optional<int> score;  // absent == malformed
  bool multi_score = false;  // more than one score line; first occurrence wins
  bool lenient = false;
};

ScoreOutcome parse_score_only(std::string_view raw);

// Canonical formatter, the inverse the round-trip property tests exercise.
std::string format_critic_output(std::string_view weaknesses, std::string_view suggestions,
                                 int score, std::string_view refinement);

}  // namespace srt::parser
