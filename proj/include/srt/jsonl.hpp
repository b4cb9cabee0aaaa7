#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "srt/types.hpp"

namespace srt::jsonl {

// Input corpus: one object per line with fields id, text, source
// (turn_count optional, defaults to 1). Throws DataError on duplicate ids,
// empty text or unparseable lines.
std::vector<Instruction> read_instructions(const std::string& path);

void write_instructions(const std::string& path, const std::vector<Instruction>& instructions);

std::vector<nlohmann::json> read_records(const std::string& path);

void write_records(const std::string& path, const std::vector<nlohmann::json>& records);

// FNV-1a over the file bytes; the manifest's content_checksum.
std::uint64_t file_checksum(const std::string& path);

nlohmann::json sequence_to_json(const TrainingSequence& seq);
TrainingSequence sequence_from_json(const nlohmann::json& j);

nlohmann::json pair_to_json(const PreferencePair& pair);

}  // namespace srt::jsonl
