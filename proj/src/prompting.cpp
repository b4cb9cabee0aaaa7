#include "srt/prompting.hpp"

#include "srt/errors.hpp"
#include "srt/hash.hpp"

namespace srt::prompting {

namespace {

constexpr std::string_view kCriticTemplate =
    "### Instruction\n"
    "\n"
    "{Instruction}\n"
    "\n"
    "### Response\n"
    "\n"
    "{Response}\n"
    "\n"
    "### Requirements\n"
    "\n"
    "As a AI assistant instructor, your task is to provide constructive feedback on responses "
    "generated by the assistant.\n"
    "Ensure that your feedback focuses on the original instruction and do not introduce new "
    "requirements.\n"
    "Follow these steps to ensure your feedback is effective and beneficial:\n"
    "\n"
    "1. Identify Weaknesses: Carefully review the response and pinpoint any areas where it falls "
    "short.\n"
    "\n"
    "2. Offer Actionable Advice: Provide specific suggestions on how the response can be "
    "improved.\n"
    "\n"
    "3. Conclude with a Rating: After providing feedback, score the response on a scale from 1 to "
    "10, with 1 being the lowest and 10 the highest. Use the format: \"Overall Score: "
    "[[1-10]]\".\n"
    "\n"
    "4. Show an Improved Response: Offer an improved version that incorporates your feedback. "
    "Clearly indicate the enhanced response with the heading: \"### Improved Response\".\n"
    "\n"
    "### Feedback\n";

// Same preamble with only the rating step retained, so scoring is never
// conditioned on prior feedback and never requests an improved response.
constexpr std::string_view kScoreOnlyTemplate =
    "### Instruction\n"
    "\n"
    "{Instruction}\n"
    "\n"
    "### Response\n"
    "\n"
    "{Response}\n"
    "\n"
    "### Requirements\n"
    "\n"
    "As a AI assistant instructor, your task is to provide constructive feedback on responses "
    "generated by the assistant.\n"
    "Ensure that your feedback focuses on the original instruction and do not introduce new "
    "requirements.\n"
    "Follow these steps to ensure your feedback is effective and beneficial:\n"
    "\n"
    "1. Conclude with a Rating: Score the response on a scale from 1 to 10, with 1 being the "
    "lowest and 10 the highest. Use the format: \"Overall Score: [[1-10]]\".\n"
    "\n"
    "### Feedback\n";

std::string substitute(std::string_view tmpl, std::string_view instruction,
                       std::string_view response) {
  std::string out(tmpl);
  auto replace_one = [&out](std::string_view placeholder, std::string_view value) {
    auto pos = out.find(placeholder);
    if (pos == std::string::npos) {
      throw DataError("template missing placeholder " + std::string(placeholder));
    }
    out.replace(pos, placeholder.size(), value);
  };
  replace_one("{Instruction}", instruction);
  replace_one("{Response}", response);
  return out;
}

void require_non_empty(std::string_view instruction, std::string_view response) {
  if (instruction.empty()) throw DataError("EmptyField: instruction");
  if (response.empty()) throw DataError("EmptyField: response");
}

}  // namespace

std::string_view critic_template() { return kCriticTemplate; }
std::string_view score_only_template() { return kScoreOnlyTemplate; }

std::uint64_t critic_template_checksum() { return fnv1a64(kCriticTemplate); }
std::uint64_t score_only_template_checksum() { return fnv1a64(kScoreOnlyTemplate); }

std::string render_critic_prompt(std::string_view instruction, std::string_view response) {
  require_non_empty(instruction, response);
  return substitute(kCriticTemplate, instruction, response);
}

std::string render_score_only_prompt(std::string_view instruction, std::string_view response) {
  require_non_empty(instruction, response);
  return substitute(kScoreOnlyTemplate, instruction, response);
}

std::string render_generation_prompt(std::string_view instruction) {
  if (instruction.empty()) throw DataError("EmptyField: instruction");
  return std::string(instruction);
}

}  // namespace srt::prompting
