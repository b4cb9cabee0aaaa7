#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srt/errors.hpp"
#include "srt/gateway.hpp"

namespace srt::gateway {

namespace {

using nlohmann::json;

std::uint64_t record_checksum(const json& record) {
  std::uint64_t h = fnv1a64(record.at("prompt").get<std::string>());
  for (const auto& t : record.at("texts")) {
    h = hash_combine(h, fnv1a64(t.get<std::string>()));
  }
  h = hash_combine(h, record.at("fingerprint").get<std::uint64_t>());
  return h;
}

json read_record_at(std::istream& in, std::uint64_t offset) {
  in.clear();
  in.seekg(static_cast<std::streamoff>(offset));
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw ManifestCorruptError("cache: truncated record header");
  std::string payload(len, '\0');
  in.read(payload.data(), len);
  if (!in) throw ManifestCorruptError("cache: truncated record payload");
  json record = json::parse(payload, nullptr, false);
  if (record.is_discarded()) throw ManifestCorruptError("cache: unparseable record");
  if (!record.contains("checksum") ||
      record.at("checksum").get<std::uint64_t>() != record_checksum(record)) {
    throw ManifestCorruptError("cache: record checksum mismatch");
  }
  return record;
}

}  // namespace

ReplayCache::ReplayCache(std::string path_prefix)
    : log_path_(path_prefix + ".log"), index_path_(path_prefix + ".idx") {
  load_index();
}

void ReplayCache::load_index() {
  entries_.clear();
  std::ifstream idx(index_path_);
  if (idx) {
    std::string fp_hex;
    std::uint64_t offset;
    while (idx >> fp_hex >> offset) {
      entries_.emplace_back(std::stoull(fp_hex, nullptr, 16), offset);
    }
  }
  // An index shorter than the log (crash between appends) is rebuilt by scan.
  std::ifstream log(log_path_, std::ios::binary);
  if (!log) return;
  log.seekg(0, std::ios::end);
  std::uint64_t log_size = static_cast<std::uint64_t>(log.tellg());
  std::uint64_t cursor = 0;
  for (const auto& [fp, offset] : entries_) {
    (void)fp;
    cursor = offset;
  }
  if (!entries_.empty()) {
    log.seekg(static_cast<std::streamoff>(cursor));
    std::uint32_t len = 0;
    log.read(reinterpret_cast<char*>(&len), sizeof(len));
    cursor += sizeof(len) + len;
  }
  while (cursor < log_size) {
    log.clear();
    log.seekg(static_cast<std::streamoff>(cursor));
    std::uint32_t len = 0;
    log.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!log) break;
    std::string payload(len, '\0');
    log.read(payload.data(), len);
    if (!log) break;
    json record = json::parse(payload, nullptr, false);
    if (record.is_discarded()) break;
    entries_.emplace_back(record.at("fingerprint").get<std::uint64_t>(), cursor);
    cursor += sizeof(len) + len;
  }
  lookup_.clear();
  for (const auto& [fp, offset] : entries_) lookup_.emplace(fp, offset);
}

std::optional<GenerationResult> ReplayCache::get(const GenerationRequest& request) {
  std::lock_guard lock(mutex_);
  std::uint64_t fp = request.fingerprint();
  auto [first, last] = lookup_.equal_range(fp);
  for (auto it = first; it != last; ++it) {
    std::uint64_t offset = it->second;
    std::ifstream log(log_path_, std::ios::binary);
    if (!log) return std::nullopt;
    json record = read_record_at(log, offset);
    // Full-field match, not just the fingerprint.
    if (record.at("prompt").get<std::string>() != request.prompt ||
        record.at("temperature").get<double>() != request.temperature ||
        record.at("max_new_tokens").get<int>() != request.max_new_tokens ||
        record.at("n_samples").get<int>() != request.n_samples ||
        record.value("seed", json()) != (request.seed ? json(*request.seed) : json())) {
      continue;
    }
    GenerationResult result;
    result.backend = BackendKind::cache;
    result.request_fingerprint = fp;
    for (const auto& t : record.at("texts")) result.texts.push_back(t.get<std::string>());
    return result;
  }
  return std::nullopt;
}

void ReplayCache::put(const GenerationRequest& request, const GenerationResult& result) {
  std::lock_guard lock(mutex_);
  json record = {
      {"fingerprint", request.fingerprint()},
      {"prompt", request.prompt},
      {"temperature", request.temperature},
      {"max_new_tokens", request.max_new_tokens},
      {"n_samples", request.n_samples},
      {"role", to_string(request.role_tag)},
      {"texts", result.texts},
  };
  if (request.seed) record["seed"] = *request.seed;
  record["checksum"] = record_checksum(record);

  std::string payload = record.dump();
  std::ofstream log(log_path_, std::ios::binary | std::ios::app);
  if (!log) throw DataError("cache: cannot open " + log_path_);
  log.seekp(0, std::ios::end);
  std::uint64_t offset = static_cast<std::uint64_t>(log.tellp());
  std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  log.write(reinterpret_cast<const char*>(&len), sizeof(len));
  log.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  log.flush();

  std::ofstream idx(index_path_, std::ios::app);
  idx << to_hex(request.fingerprint()) << ' ' << offset << '\n';
  entries_.emplace_back(request.fingerprint(), offset);
  lookup_.emplace(request.fingerprint(), offset);
}

std::size_t ReplayCache::verify_integrity() const {
  std::lock_guard lock(mutex_);
  std::ifstream log(log_path_, std::ios::binary);
  if (!log && !entries_.empty()) throw ManifestCorruptError("cache: log file missing");
  for (const auto& [fp, offset] : entries_) {
    json record = read_record_at(log, offset);
    if (record.at("fingerprint").get<std::uint64_t>() != fp) {
      throw ManifestCorruptError("cache: index/record fingerprint mismatch");
    }
  }
  return entries_.size();
}

std::uint64_t ReplayCache::content_checksum() const {
  std::lock_guard lock(mutex_);
  std::ifstream log(log_path_, std::ios::binary);
  std::uint64_t h = kFnvOffset;
  for (const auto& [fp, offset] : entries_) {
    (void)fp;
    json record = read_record_at(log, offset);
    h = hash_combine(h, record.at("checksum").get<std::uint64_t>());
  }
  return h;
}

std::size_t ReplayCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace srt::gateway
