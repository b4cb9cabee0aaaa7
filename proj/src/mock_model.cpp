#include <cmath>
#include <string>

#include "srt/errors.hpp"
#include "srt/feedback_parser.hpp"
#include "srt/gateway.hpp"

namespace srt::gateway {

namespace {

constexpr std::string_view kRefinedTag = "[refined:";

std::string_view strip_iteration_tag(std::string_view text) {
  if (text.substr(0, kRefinedTag.size()) != kRefinedTag) return text;
  auto close = text.find("] ");
  if (close == std::string_view::npos) return text;
  return text.substr(close + 2);
}

std::string section_between(std::string_view prompt, std::string_view begin_marker,
                            std::string_view end_marker) {
  auto b = prompt.find(begin_marker);
  if (b == std::string_view::npos) return {};
  b += begin_marker.size();
  auto e = prompt.find(end_marker, b);
  if (e == std::string_view::npos) e = prompt.size();
  std::string_view s = prompt.substr(b, e - b);
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

PromptSections split_prompt_sections(std::string_view prompt) {
  PromptSections sections;
  if (prompt.find("### Instruction") == std::string_view::npos) {
    sections.instruction = std::string(prompt);
    return sections;
  }
  sections.instruction = section_between(prompt, "### Instruction\n", "\n### Response");
  sections.response = section_between(prompt, "### Response\n", "\n### Requirements");
  return sections;
}

int mock_response_iteration(std::string_view response_text) {
  if (response_text.substr(0, kRefinedTag.size()) != kRefinedTag) return 0;
  auto close = response_text.find(']');
  if (close == std::string_view::npos) return 0;
  int k = 0;
  for (std::size_t i = kRefinedTag.size(); i < close; ++i) {
    char c = response_text[i];
    if (c < '0' || c > '9') return 0;
    k = k * 10 + (c - '0');
  }
  return k;
}

bool MockModel::malformed_fires(std::string_view instruction, std::string_view response) const {
  if (config_.malformed_rate <= 0.0) return false;
  std::uint64_t h = fnv1a64(instruction, fnv1a64("malformed"));
  h = hash_combine(h, fnv1a64(response));
  h = hash_combine(h, config_.seed);
  return hash_unit(h) < config_.malformed_rate;
}

int MockModel::score_at(std::string_view instruction, int iteration) const {
  if (config_.score_fn == ScoreFn::fixed) return config_.fixed_score;
  double base = config_.base_score
                    ? *config_.base_score
                    : 4.4 + 2.0 * hash_unit(hash_combine(fnv1a64(instruction, fnv1a64("base")),
                                                         config_.seed));
  double value = base;
  if (config_.score_fn == ScoreFn::saturating) {
    for (int k = 0; k < iteration; ++k) {
      std::size_t idx = std::min<std::size_t>(k, config_.gains.empty() ? 0 : config_.gains.size() - 1);
      value += config_.gains.empty() ? 0.0 : config_.gains[idx];
    }
  } else if (iteration >= 1) {  // noisy_regressing: one seeded draw per instruction
    double u = hash_unit(hash_combine(fnv1a64(instruction, fnv1a64("gain")), config_.seed));
    if (u < config_.p_equal) {
      value += 0.0;
    } else if (u < config_.p_equal + config_.p_worse) {
      value -= 1.0;
    } else {
      value += config_.refinement_gain;
    }
  }
  long s = std::lround(value);
  if (s < 1) s = 1;
  if (s > 10) s = 10;
  return static_cast<int>(s);
}

GenerationResult MockModel::generate(const GenerationRequest& request) {
  GenerationResult result;
  result.backend = BackendKind::mock;
  result.request_fingerprint = request.fingerprint();
  auto sections = split_prompt_sections(request.prompt);

  for (int j = 0; j < request.n_samples; ++j) {
    switch (request.role_tag) {
      case RoleTag::respond: {
        std::string text = "A draft answer addressing: " + sections.instruction;
        if (request.temperature > 0.0 && request.n_samples > 1) {
          std::uint64_t h = hash_combine(fnv1a64(sections.instruction), config_.seed);
          h = hash_combine(h, static_cast<std::uint64_t>(j));
          text += " (variant " + std::to_string(j) + ", " + to_hex(h).substr(0, 6) + ")";
        }
        result.texts.push_back(std::move(text));
        break;
      }
      case RoleTag::critique: {
        if (malformed_fires(sections.instruction, sections.response)) {
          result.texts.push_back("I'm sorry, I cannot provide feedback on this response.");
          break;
        }
        int next_iteration = mock_response_iteration(sections.response) + 1;
        int indep = score_at(sections.instruction, next_iteration);
        // The conditioned critique score runs one point hot, mirroring the
        // bias independent re-scoring exists to avoid. The fixed preset is
        // format-canonical and skips the bias.
        int conditioned =
            config_.score_fn == ScoreFn::fixed ? indep : std::min(10, indep + 1);
        std::string refined = "[refined:" + std::to_string(next_iteration) + "] improved: " +
                              std::string(strip_iteration_tag(sections.response));
        result.texts.push_back(parser::format_critic_output(
            "The response is too brief and misses key details requested by the instruction.",
            "Expand the answer with concrete details and a clearer structure.", conditioned,
            refined));
        break;
      }
      case RoleTag::score: {
        int iteration = mock_response_iteration(sections.response);
        int s = score_at(sections.instruction, iteration);
        if (sections.response.find("(variant ") != std::string::npos) {
          // Spread sampled candidates so re-ranking has something to rank.
          std::uint64_t h = hash_combine(fnv1a64(sections.response), config_.seed);
          s += static_cast<int>(h % 5) - 2;
          if (s < 1) s = 1;
          if (s > 10) s = 10;
        }
        result.texts.push_back("Overall Score: [[" + std::to_string(s) + "]]");
        break;
      }
    }
  }
  return result;
}

}  // namespace srt::gateway
