#include "srt/jsonl.hpp"

#include <fstream>
#include <unordered_set>

#include "srt/errors.hpp"
#include "srt/hash.hpp"

namespace srt::jsonl {

using nlohmann::json;

std::vector<Instruction> read_instructions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path);
  std::vector<Instruction> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unparseable JSON");
    }
    Instruction instr;
    instr.id = j.at("id").get<std::string>();
    instr.text = j.at("text").get<std::string>();
    instr.source = j.value("source", "");
    instr.turn_count = j.value("turn_count", 1);
    if (instr.text.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty instruction text");
    }
    if (!seen.insert(instr.id).second) {
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate id " + instr.id);
    }
    out.push_back(std::move(instr));
  }
  return out;
}

void write_instructions(const std::string& path, const std::vector<Instruction>& instructions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& instr : instructions) {
    json j = {{"id", instr.id}, {"text", instr.text}, {"source", instr.source},
              {"turn_count", instr.turn_count}};
    out << j.dump() << '\n';
  }
}

std::vector<json> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError(path + ": unparseable JSONL line");
    out.push_back(std::move(j));
  }
  return out;
}

void write_records(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& r : records) out << r.dump() << '\n';
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for checksum: " + path);
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

json sequence_to_json(const TrainingSequence& seq) {
  json spans = json::array();
  for (const auto& [b, e] : seq.mask_spans) spans.push_back({b, e});
  json segments = json::array();
  for (const auto& seg : seq.segment_map) {
    segments.push_back({to_string(seg.kind), seg.begin, seg.end});
  }
  return {{"full_text", seq.full_text}, {"mask_spans", spans}, {"segment_map", segments}};
}

TrainingSequence sequence_from_json(const json& j) {
  TrainingSequence seq;
  seq.full_text = j.at("full_text").get<std::string>();
  for (const auto& s : j.at("mask_spans")) {
    seq.mask_spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
  }
  for (const auto& s : j.at("segment_map")) {
    Segment seg;
    std::string kind = s.at(0).get<std::string>();
    if (kind == "instruction") seg.kind = SegmentKind::instruction;
    else if (kind == "response") seg.kind = SegmentKind::response;
    else if (kind == "feedback") seg.kind = SegmentKind::feedback;
    else if (kind == "refinement") seg.kind = SegmentKind::refinement;
    else throw DataError("unknown segment kind: " + kind);
    seg.begin = s.at(1).get<std::size_t>();
    seg.end = s.at(2).get<std::size_t>();
    seq.segment_map.push_back(seg);
  }
  return seq;
}

json pair_to_json(const PreferencePair& pair) {
  return {{"prompt", pair.instruction.text},
          {"chosen", pair.chosen.text},
          {"rejected", pair.rejected.text},
          {"chosen_score", pair.chosen_score},
          {"rejected_score", pair.rejected_score}};
}

}  // namespace srt::jsonl
