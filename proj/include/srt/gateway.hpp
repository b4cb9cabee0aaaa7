#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srt/hash.hpp"

namespace srt::gateway {

enum class RoleTag { respond, critique, score };

const char* to_string(RoleTag tag);

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_new_tokens = 2048;
  int n_samples = 1;
  std::optional<std::uint64_t> seed;
  RoleTag role_tag = RoleTag::respond;

  // Role defaults: respond samples at 0.7; critique/score run greedy with a
  // 2,048-token cap. Overrides are recorded in the run manifest.
  static GenerationRequest for_role(RoleTag tag, std::string prompt);

  std::uint64_t fingerprint() const;
};

enum class BackendKind { remote, cache, mock };

const char* to_string(BackendKind kind);

struct GenerationResult {
  std::vector<std::string> texts;
  BackendKind backend = BackendKind::mock;
  std::int64_t latency_ms = 0;
  std::uint64_t request_fingerprint = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Mock model: deterministic, format-canonical critic + responder for offline
// runs and tests. All behavior is a pure function of (config, request).

enum class ScoreFn { fixed, saturating, noisy_regressing };

struct MockCriticConfig {
  ScoreFn score_fn = ScoreFn::saturating;
  int fixed_score = 7;
  // Base quality of the initial response; absent means hash-derived per
  // instruction in [4.4, 6.4].
  std::optional<double> base_score;
  // Cumulative per-iteration gains for the saturating preset; the last entry
  // repeats beyond the list.
  std::vector<double> gains = {1.5, 0.1, -0.1, -0.05};
  double malformed_rate = 0.0;
  double refinement_gain = 2.0;  // noisy_regressing improvement when it fires
  double p_equal = 0.0;          // noisy_regressing: P(refinement score == initial)
  double p_worse = 0.0;          // noisy_regressing: P(refinement scores 1 lower)
  std::uint64_t seed = 0;
};

class MockModel : public Backend {
 public:
  explicit MockModel(MockCriticConfig config) : config_(std::move(config)) {}
  GenerationResult generate(const GenerationRequest& request) override;

  // Exposed so tests can replay the seeded decisions independently.
  bool malformed_fires(std::string_view instruction, std::string_view response) const;
  int score_at(std::string_view instruction, int iteration) const;

  const MockCriticConfig& config() const { return config_; }

 private:
  MockCriticConfig config_;
};

// Iteration tag embedded in mock refinement texts ("[refined:k] ...").
int mock_response_iteration(std::string_view response_text);

// Pulls the "### Instruction" / "### Response" sections out of a rendered
// prompt; empty when the prompt is a bare instruction.
struct PromptSections {
  std::string instruction;
  std::string response;
};
PromptSections split_prompt_sections(std::string_view prompt);

// ---------------------------------------------------------------------------
// Replay cache: append-only, content-addressed record log + offset index.

class ReplayCache {
 public:
  // `path_prefix` names two files: <prefix>.log and <prefix>.idx.
  explicit ReplayCache(std::string path_prefix);

  std::optional<GenerationResult> get(const GenerationRequest& request);
  void put(const GenerationRequest& request, const GenerationResult& result);

  // Re-reads every record and checks stored checksums; throws
  // ManifestCorruptError on mismatch. Returns the record count.
  std::size_t verify_integrity() const;

  // Order-dependent digest over all cached records.
  std::uint64_t content_checksum() const;

  std::size_t size() const;

 private:
  void load_index();

  std::string log_path_;
  std::string index_path_;
  mutable std::mutex mutex_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> entries_;  // (fingerprint, offset), append order
  std::unordered_multimap<std::uint64_t, std::uint64_t> lookup_;
};

class CachingBackend : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ReplayCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}
  GenerationResult generate(const GenerationRequest& request) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ReplayCache> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Remote OpenAI-compatible chat-completions backend.

struct RemoteConfig {
  std::string base_url;  // e.g. https://api.openai.com
  std::string api_key;
  std::string model;
  int max_retries = 5;
  int backoff_base_ms = 1000;
  int timeout_s = 120;

  // Reads SRT_API_BASE_URL / SRT_API_KEY / SRT_API_MODEL.
  static RemoteConfig from_env();
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  GenerationResult generate(const GenerationRequest& request) override;

  // Test seam for the backoff schedule.
  std::function<void(int ms)> sleep_fn;

 private:
  RemoteConfig config_;
};

// ---------------------------------------------------------------------------
// Gateway: the single entry point other modules use. Enforces request/token
// budgets; throws BudgetExceededError when a cap is hit so pipelines can halt
// with a resumable manifest.

struct Budget {
  std::optional<std::uint64_t> max_requests;
  std::optional<std::uint64_t> max_output_chars;
};

struct CandidateSet {
  std::vector<std::string> texts;
  std::size_t duplicate_count = 0;  // duplicates are tagged, never dropped
};

class ModelGateway {
 public:
  explicit ModelGateway(std::shared_ptr<Backend> backend, Budget budget = {})
      : backend_(std::move(backend)), budget_(budget) {}

  GenerationResult generate(const GenerationRequest& request);
  std::string generate_text(const GenerationRequest& request);
  CandidateSet sample_candidates(const std::string& prompt, int n, double temperature);

  std::uint64_t requests_made() const { return requests_; }
  std::uint64_t output_chars() const { return chars_; }

 private:
  std::shared_ptr<Backend> backend_;
  Budget budget_;
  std::mutex mutex_;
  std::uint64_t requests_ = 0;
  std::uint64_t chars_ = 0;
};

}  // namespace srt::gateway
