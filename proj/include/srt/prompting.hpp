#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace srt::prompting {

// Rendering is pure: no I/O, no randomness, no clock. The critic template
// text is compiled in; assets/critic_prompt.txt carries the same bytes and a
// test pins the checksum of both.

std::string_view critic_template();
std::string_view score_only_template();

std::uint64_t critic_template_checksum();
std::uint64_t score_only_template_checksum();

// Full critique-and-refine prompt. Throws DataError("EmptyField...") when
// either input is empty.
std::string render_critic_prompt(std::string_view instruction, std::string_view response);

// Score-only prompt used for independent re-scoring; carries no prior
// feedback context and does not request an improved response.
std::string render_score_only_prompt(std::string_view instruction, std::string_view response);

// Generation prompt for initial responses: the bare instruction text.
std::string render_generation_prompt(std::string_view instruction);

}  // namespace srt::prompting
