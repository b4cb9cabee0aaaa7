#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace srt {

// All types in this header are plain immutable values; nothing here does I/O.

struct Instruction {
  std::string id;
  std::string text;
  std::string source;
  int turn_count = 1;
};

enum class ResponseRole { initial, refinement, candidate };

struct ModelResponse {
  std::string text;
  ResponseRole role = ResponseRole::initial;
  double temperature = 0.0;
  int iteration = 0;  // 0 = initial response
};

struct CritiqueFeedback {
  std::string weaknesses;
  std::string suggestions;
  int overall_score = 0;  // integer in [1, 10]
  std::string raw_text;   // verbatim critic output
};

struct RefinementRecord {
  ModelResponse response;
  CritiqueFeedback feedback;  // the critique produced at this iteration
  std::optional<int> independent_score;
};

struct AnnotatedExample {
  Instruction instruction;
  ModelResponse initial;
  std::optional<int> initial_independent_score;
  CritiqueFeedback feedback;  // critique of the initial response
  std::vector<RefinementRecord> refinements;
  std::optional<std::size_t> best_index;
  bool leniently_parsed = false;
};

enum class PairStage { self_feedback };

struct PreferencePair {
  Instruction instruction;
  ModelResponse chosen;    // role == refinement
  ModelResponse rejected;  // role == initial
  int chosen_score = 0;
  int rejected_score = 0;
  PairStage stage = PairStage::self_feedback;
};

enum class SegmentKind { instruction, response, feedback, refinement };

struct Segment {
  SegmentKind kind;
  std::size_t begin = 0;  // char offsets, half-open
  std::size_t end = 0;
};

struct TrainingSequence {
  std::string full_text;
  // Half-open char intervals excluded from the loss. Offsets are characters,
  // not tokens: tokenization is trainer-specific.
  std::vector<std::pair<std::size_t, std::size_t>> mask_spans;
  std::vector<Segment> segment_map;
};

const char* to_string(ResponseRole role);
const char* to_string(SegmentKind kind);

// Index of the refinement with the highest independent score; ties resolve
// to the earliest iteration. Throws DataError when a score is missing or the
// list is empty.
std::size_t select_best_refinement(const AnnotatedExample& example);

// Returns one descriptor per broken invariant; empty means well-formed.
std::vector<std::string> validate_example(const AnnotatedExample& example);

std::vector<std::string> validate_sequence(const TrainingSequence& seq);

}  // namespace srt
