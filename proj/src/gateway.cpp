#include "srt/gateway.hpp"

#include "srt/errors.hpp"

namespace srt::gateway {

const char* to_string(RoleTag tag) {
  switch (tag) {
    case RoleTag::respond: return "respond";
    case RoleTag::critique: return "critique";
    case RoleTag::score: return "score";
  }
  return "unknown";
}

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::remote: return "remote";
    case BackendKind::cache: return "cache";
    case BackendKind::mock: return "mock";
  }
  return "unknown";
}

GenerationRequest GenerationRequest::for_role(RoleTag tag, std::string prompt) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.role_tag = tag;
  if (tag == RoleTag::respond) {
    req.temperature = 0.7;
    req.max_new_tokens = 1024;
  } else {
    req.temperature = 0.0;
    req.max_new_tokens = 2048;
  }
  return req;
}

std::uint64_t GenerationRequest::fingerprint() const {
  std::uint64_t h = fnv1a64(prompt);
  h = hash_combine(h, fnv1a64(std::to_string(temperature)));
  h = hash_combine(h, static_cast<std::uint64_t>(max_new_tokens));
  h = hash_combine(h, static_cast<std::uint64_t>(n_samples));
  h = hash_combine(h, seed ? *seed + 1 : 0);
  h = hash_combine(h, static_cast<std::uint64_t>(role_tag));
  return h;
}

GenerationResult CachingBackend::generate(const GenerationRequest& request) {
  if (auto cached = cache_->get(request)) {
    std::lock_guard lock(mutex_);
    ++hits_;
    return *cached;
  }
  GenerationResult result = inner_->generate(request);
  cache_->put(request, result);
  std::lock_guard lock(mutex_);
  ++misses_;
  return result;
}

GenerationResult ModelGateway::generate(const GenerationRequest& request) {
  if (request.prompt.empty()) throw DataError("generate: empty prompt");
  {
    std::lock_guard lock(mutex_);
    if (budget_.max_requests && requests_ >= *budget_.max_requests) {
      throw BudgetExceededError("request budget exhausted (" +
                                std::to_string(*budget_.max_requests) + ")");
    }
    if (budget_.max_output_chars && chars_ >= *budget_.max_output_chars) {
      throw BudgetExceededError("output budget exhausted");
    }
    ++requests_;
  }
  GenerationResult result = backend_->generate(request);
  if (static_cast<int>(result.texts.size()) != request.n_samples) {
    throw RemoteError("backend returned " + std::to_string(result.texts.size()) +
                      " completions, expected " + std::to_string(request.n_samples));
  }
  std::lock_guard lock(mutex_);
  for (const auto& t : result.texts) chars_ += t.size();
  return result;
}

std::string ModelGateway::generate_text(const GenerationRequest& request) {
  auto result = generate(request);
  return result.texts.at(0);
}

CandidateSet ModelGateway::sample_candidates(const std::string& prompt, int n,
                                             double temperature) {
  if (n < 1) throw DataError("sample_candidates: n must be >= 1");
  GenerationRequest req = GenerationRequest::for_role(RoleTag::respond, prompt);
  req.temperature = temperature;
  req.n_samples = n;
  auto result = generate(req);
  CandidateSet set;
  set.texts = result.texts;
  std::vector<std::string> sorted = set.texts;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) ++set.duplicate_count;
  }
  return set;
}

}  // namespace srt::gateway
