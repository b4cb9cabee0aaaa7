#include "srt/manifest.hpp"

#include <fstream>

#include "srt/errors.hpp"

namespace srt {

using nlohmann::json;

json RunManifest::to_json() const {
  json sampling_json;
  for (const auto& [role, p] : sampling) {
    sampling_json[role] = {{"temperature", p.temperature},
                           {"max_new_tokens", p.max_new_tokens}};
  }
  return {
      {"stage", stage},
      {"sampling", sampling_json},
      {"filter_counts",
       {{"input_n", counts.input_n},
        {"rule1_rejected", counts.rule1_rejected},
        {"rule2_rejected", counts.rule2_rejected},
        {"emitted_n", counts.emitted_n}}},
      {"trainer_hints", trainer_hints},
      {"detail", detail},
      {"choices", choices},
      {"seed", seed},
      {"content_checksum", content_checksum},
      {"cache_checksum", cache_checksum},
      {"output_path", output_path},
      {"config", config},
      {"status", status},
  };
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.stage = j.at("stage").get<std::string>();
  for (auto it = j.at("sampling").begin(); it != j.at("sampling").end(); ++it) {
    m.sampling[it.key()] = {it.value().at("temperature").get<double>(),
                            it.value().at("max_new_tokens").get<int>()};
  }
  const auto& fc = j.at("filter_counts");
  m.counts.input_n = fc.at("input_n").get<std::uint64_t>();
  m.counts.rule1_rejected = fc.at("rule1_rejected").get<std::uint64_t>();
  m.counts.rule2_rejected = fc.at("rule2_rejected").get<std::uint64_t>();
  m.counts.emitted_n = fc.at("emitted_n").get<std::uint64_t>();
  m.trainer_hints = j.at("trainer_hints").get<std::map<std::string, double>>();
  m.detail = j.value("detail", std::map<std::string, std::uint64_t>{});
  m.choices = j.value("choices", std::map<std::string, std::string>{});
  m.seed = j.at("seed").get<std::uint64_t>();
  m.content_checksum = j.at("content_checksum").get<std::string>();
  m.cache_checksum = j.value("cache_checksum", "");
  m.output_path = j.value("output_path", "");
  m.config = j.value("config", json());
  m.status = j.value("status", "complete");
  return m;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestCorruptError("cannot open manifest: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ManifestCorruptError("unparseable manifest: " + path);
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw ManifestCorruptError("manifest missing fields: " + std::string(e.what()));
  }
}

std::map<std::string, SamplingParams> default_sampling() {
  return {{"respond", {0.7, 1024}}, {"critique", {0.0, 2048}}, {"score", {0.0, 2048}}};
}

std::map<std::string, double> default_trainer_hints(const std::string& stage) {
  if (stage == "build_dpo") {
    return {{"epochs", 1.0}, {"beta", 0.01}, {"learning_rate", 5e-7}, {"batch_size", 32.0}};
  }
  return {{"epochs", 5.0}, {"learning_rate", 1e-5}, {"batch_size", 32.0},
          {"max_seq_len", 8192.0}, {"warmup_ratio", 0.1}};
}

}  // namespace srt
