#include "srt/feedback_parser.hpp"

#include <algorithm>
#include <cctype>

namespace srt::parser {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[i]) != lower(prefix[i])) return false;
  }
  return true;
}

// A heading line: optional whitespace, 0-3 '#', optional whitespace, then the
// heading words (case-insensitive), then only whitespace/':' to end of line.
// The critic is inconsistent about "###Feedback" vs "### Feedback", so
// matching is deliberately loose.
bool is_heading_line(std::string_view line, std::string_view name) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t hashes = 0;
  while (i < line.size() && line[i] == '#' && hashes < 4) { ++i; ++hashes; }
  if (hashes > 3) return false;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::string_view rest = line.substr(i);
  if (!istarts_with(rest, name)) return false;
  rest.remove_prefix(name.size());
  for (char c : rest) {
    if (c != ' ' && c != '\t' && c != ':' && c != '\r') return false;
  }
  return true;
}

struct LineSpan {
  std::size_t begin;  // offset of line start
  std::size_t end;    // offset one past '\n' (or text end)
};

// Offset of the line matching `name`, or npos.
std::optional<LineSpan> find_heading(std::string_view text, std::string_view name) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t line_end = (eol == std::string_view::npos) ? text.size() : eol;
    if (is_heading_line(text.substr(pos, line_end - pos), name)) {
      return LineSpan{pos, (eol == std::string_view::npos) ? text.size() : eol + 1};
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return std::nullopt;
}

struct ScoreMatch {
  std::size_t begin = 0;  // offset of "Overall"
  std::size_t end = 0;    // one past the matched number
  std::string digits;
  bool strict = false;
  bool fractional = false;
};

// Scans for "Overall Score" (case-insensitive), optional ':', then either
// [[k]] (strict) or a bare integer (lenient).
std::vector<ScoreMatch> find_score_matches(std::string_view text) {
  static constexpr std::string_view kKey = "overall score";
  std::vector<ScoreMatch> matches;
  for (std::size_t pos = 0; pos + kKey.size() <= text.size(); ++pos) {
    if (!istarts_with(text.substr(pos), kKey)) continue;
    std::size_t i = pos + kKey.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i < text.size() && text[i] == ':') ++i;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    ScoreMatch m;
    m.begin = pos;
    bool bracketed = false;
    if (i + 1 < text.size() && text[i] == '[' && text[i + 1] == '[') {
      bracketed = true;
      i += 2;
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    }
    std::size_t digit_start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == digit_start) continue;  // no number after the key
    m.digits = std::string(text.substr(digit_start, i - digit_start));
    if (i + 1 < text.size() && text[i] == '.' &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      m.fractional = true;  // "7.5" is rejected, not rounded
      while (i < text.size() &&
             (text[i] == '.' || std::isdigit(static_cast<unsigned char>(text[i])))) {
        ++i;
      }
    }
    if (bracketed) {
      std::size_t j = i;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
      if (j + 1 < text.size() && text[j] == ']' && text[j + 1] == ']') {
        m.strict = true;
        i = j + 2;
      }
    }
    m.end = i;
    matches.push_back(std::move(m));
    pos = i - 1;
  }
  return matches;
}

std::optional<int> score_value(const ScoreMatch& m) {
  if (m.fractional || m.digits.size() > 2) return std::nullopt;
  int v = 0;
  for (char c : m.digits) v = v * 10 + (c - '0');
  if (v < 1 || v > 10) return std::nullopt;
  return v;
}

// First line within [0, limit) that looks like the start of the suggestions
// block: optional list marker, then a word starting with "suggestion".
std::optional<std::size_t> find_suggestion_start(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::size_t line_end = (eol == std::string_view::npos) ? text.size() : eol;
    std::string_view line = text.substr(pos, line_end - pos);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    // tolerate "2." / "-" / "*" list markers
    if (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      if (j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1;
    } else if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
      ++i;
    }
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (istarts_with(line.substr(i), "suggestion")) return pos;
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return std::nullopt;
}

// Drops a bare "Suggestions:" label line so the canonical round-trip is exact.
std::string_view strip_suggestion_label(std::string_view block) {
  std::size_t eol = block.find('\n');
  std::string_view first = (eol == std::string_view::npos) ? block : block.substr(0, eol);
  std::string_view t = trim(first);
  if ((istarts_with(t, "suggestions") || istarts_with(t, "suggestion")) &&
      (t.back() == ':' || t.size() == 10 || t.size() == 11)) {
    std::string_view after = t;
    after.remove_prefix(istarts_with(after, "suggestions") ? 11 : 10);
    if (trim(after) == ":" || trim(after).empty()) {
      return (eol == std::string_view::npos) ? std::string_view{} : block.substr(eol + 1);
    }
  }
  return block;
}

}  // namespace

const char* to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::rule1_violation: return "rule1_violation";
    case ParseStatus::malformed_score: return "malformed_score";
  }
  return "unknown";
}

const char* to_string(MissingElement element) {
  switch (element) {
    case MissingElement::feedback_heading: return "feedback_heading";
    case MissingElement::overall_score: return "overall_score";
    case MissingElement::improved_response: return "improved_response";
    case MissingElement::weaknesses: return "weaknesses";
    case MissingElement::suggestions: return "suggestions";
  }
  return "unknown";
}

ParseOutcome parse_critic_output(std::string_view raw) {
  ParseOutcome out;

  auto improved = find_heading(raw, "Improved Response");
  std::string_view feedback_region = improved ? raw.substr(0, improved->begin) : raw;
  if (improved) {
    auto refinement = trim(raw.substr(improved->end));
    if (refinement.empty()) {
      out.violations.push_back(MissingElement::improved_response);
    } else {
      out.refinement_text = std::string(refinement);
    }
  } else {
    out.violations.push_back(MissingElement::improved_response);
  }

  auto fb_heading = find_heading(feedback_region, "Feedback");
  std::string_view body = feedback_region;
  if (fb_heading) {
    body = feedback_region.substr(fb_heading->end);
  } else {
    out.violations.push_back(MissingElement::feedback_heading);
  }

  auto scores = find_score_matches(body);
  bool score_malformed = false;
  std::optional<int> score;
  std::size_t score_begin = body.size();
  if (scores.empty()) {
    out.violations.push_back(MissingElement::overall_score);
  } else {
    const auto& m = scores.front();
    score = score_value(m);
    score_begin = m.begin;
    if (!score) {
      score_malformed = true;
    } else if (!m.strict) {
      out.leniently_parsed = true;
    }
  }

  std::string_view pre_score = body.substr(0, score_begin);
  std::string_view weaknesses;
  std::string_view suggestions;
  auto sugg_start = find_suggestion_start(pre_score);
  if (sugg_start) {
    weaknesses = trim(pre_score.substr(0, *sugg_start));
    suggestions = trim(strip_suggestion_label(trim(pre_score.substr(*sugg_start))));
  } else {
    weaknesses = trim(pre_score);
    out.violations.push_back(MissingElement::suggestions);
  }
  if (weaknesses.empty()) {
    out.violations.push_back(MissingElement::weaknesses);
  }

  if (score_malformed) {
    out.status = ParseStatus::malformed_score;
    return out;
  }
  if (!out.violations.empty() || !score || !out.refinement_text) {
    out.status = ParseStatus::rule1_violation;
    return out;
  }

  CritiqueFeedback fb;
  fb.weaknesses = std::string(weaknesses);
  fb.suggestions = std::string(suggestions);
  fb.overall_score = *score;
  fb.raw_text = std::string(raw);
  out.feedback = std::move(fb);
  out.status = ParseStatus::ok;
  return out;
}

ScoreOutcome parse_score_only(std::string_view raw) {
  ScoreOutcome out;
  auto matches = find_score_matches(raw);
  out.multi_score = matches.size() > 1;
  // First strict match wins; lenient is a fallback when no strict match exists.
  for (const auto& m : matches) {
    if (m.strict) {
      out.score = score_value(m);
      return out;
    }
  }
  for (const auto& m : matches) {
    out.score = score_value(m);
    out.lenient = out.score.has_value();
    return out;
  }
  return out;
}

std::string format_critic_output(std::string_view weaknesses, std::string_view suggestions,
                                 int score, std::string_view refinement) {
  std::string out;
  out += "### Feedback\n\n";
  out += weaknesses;
  out += "\n\nSuggestions:\n";
  out += suggestions;
  out += "\n\nOverall Score: [[";
  out += std::to_string(score);
  out += "]]\n\n### Improved Response\n\n";
  out += refinement;
  out += "\n";
  return out;
}

}  // namespace srt::parser
