#include "srt/types.hpp"

#include <limits>

#include "srt/errors.hpp"

namespace srt {

const char* to_string(ResponseRole role) {
  switch (role) {
    case ResponseRole::initial: return "initial";
    case ResponseRole::refinement: return "refinement";
    case ResponseRole::candidate: return "candidate";
  }
  return "unknown";
}

const char* to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::instruction: return "instruction";
    case SegmentKind::response: return "response";
    case SegmentKind::feedback: return "feedback";
    case SegmentKind::refinement: return "refinement";
  }
  return "unknown";
}

std::size_t select_best_refinement(const AnnotatedExample& example) {
  if (example.refinements.empty()) {
    throw DataError("select_best_refinement: no refinements");
  }
  std::size_t best = 0;
  int best_score = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < example.refinements.size(); ++i) {
    const auto& ref = example.refinements[i];
    if (!ref.independent_score) {
      throw DataError("select_best_refinement: refinement " + std::to_string(i) +
                      " has no independent score");
    }
    if (*ref.independent_score > best_score) {
      best_score = *ref.independent_score;
      best = i;  // strict > keeps the earliest iteration on ties
    }
  }
  return best;
}

namespace {

bool trimmed_empty(const std::string& s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> validate_example(const AnnotatedExample& example) {
  std::vector<std::string> violations;
  if (example.instruction.text.empty()) {
    violations.push_back("instruction.text: empty");
  }
  if (example.instruction.turn_count != 1) {
    violations.push_back("instruction.turn_count: must be 1 for pipeline inputs");
  }
  if (trimmed_empty(example.initial.text)) {
    violations.push_back("initial.text: empty after trimming");
  }
  if (example.initial.role != ResponseRole::initial || example.initial.iteration != 0) {
    violations.push_back("initial: role/iteration mismatch (iteration 0 iff role initial)");
  }
  if (example.feedback.overall_score < 1 || example.feedback.overall_score > 10) {
    violations.push_back("feedback.overall_score: score_out_of_range");
  }
  if (example.feedback.raw_text.find(std::to_string(example.feedback.overall_score)) ==
      std::string::npos) {
    violations.push_back("feedback.raw_text: does not contain the parsed score");
  }
  int prev_iteration = 0;
  for (std::size_t i = 0; i < example.refinements.size(); ++i) {
    const auto& ref = example.refinements[i];
    if (trimmed_empty(ref.response.text)) {
      violations.push_back("refinements[" + std::to_string(i) + "].text: empty after trimming");
    }
    if (ref.response.role != ResponseRole::refinement || ref.response.iteration <= prev_iteration) {
      violations.push_back("refinements[" + std::to_string(i) +
                           "]: iteration not strictly increasing or wrong role");
    }
    prev_iteration = ref.response.iteration;
    if (ref.independent_score && (*ref.independent_score < 1 || *ref.independent_score > 10)) {
      violations.push_back("refinements[" + std::to_string(i) + "]: score_out_of_range");
    }
  }
  if (example.best_index) {
    if (example.refinements.empty()) {
      violations.push_back("best_index: present with empty refinements");
    } else if (*example.best_index >= example.refinements.size()) {
      violations.push_back("best_index: out of bounds");
    } else {
      bool scored = true;
      for (const auto& ref : example.refinements) {
        if (!ref.independent_score) scored = false;
      }
      if (!scored) {
        violations.push_back("best_index: present but a refinement lacks independent_score");
      } else if (select_best_refinement(example) != *example.best_index) {
        violations.push_back("best_index_not_argmax");
      }
    }
  }
  return violations;
}

std::vector<std::string> validate_sequence(const TrainingSequence& seq) {
  std::vector<std::string> violations;
  std::size_t cursor = 0;
  int last_kind = -1;
  for (const auto& seg : seq.segment_map) {
    if (seg.begin != cursor) {
      violations.push_back("segment_map: segments not contiguous");
      break;
    }
    if (seg.end <= seg.begin || seg.end > seq.full_text.size()) {
      violations.push_back("segment_map: bad span");
      break;
    }
    if (static_cast<int>(seg.kind) <= last_kind) {
      violations.push_back("segment_map: segments out of order");
    }
    last_kind = static_cast<int>(seg.kind);
    cursor = seg.end;
  }
  if (violations.empty() && cursor != seq.full_text.size()) {
    violations.push_back("segment_map: does not cover full_text");
  }
  // Mask must equal exactly the instruction segment.
  std::pair<std::size_t, std::size_t> instr{0, 0};
  for (const auto& seg : seq.segment_map) {
    if (seg.kind == SegmentKind::instruction) instr = {seg.begin, seg.end};
  }
  if (seq.mask_spans.size() != 1 || seq.mask_spans[0] != instr) {
    violations.push_back("mask_spans: union does not equal the instruction segment");
  }
  for (const auto& [b, e] : seq.mask_spans) {
    if (b >= e || e > seq.full_text.size()) {
      violations.push_back("mask_spans: bad span");
    }
  }
  return violations;
}

}  // namespace srt
