#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace aag {

struct GenerationConfig {
  std::string model;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;

  // Throws ValidationError unless 0 <= temperature <= 2, 0 < top_p <= 1, max_tokens > 0.
  void validate() const;
};

// "remote": deterministic decoding for hosted models. "local": low temperature
// and a tight nucleus for small local models.
GenerationConfig generation_profile(const std::string& name);

struct LlmPrompt {
  std::string system;
  std::string user;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string generate(const LlmPrompt& prompt, const GenerationConfig& config) = 0;
};

// Offline backend: returns "REPORT:\n" followed by the user part (the facts).
class EchoClient : public LlmClient {
 public:
  std::string generate(const LlmPrompt& prompt, const GenerationConfig& config) override;
};

struct RemoteOptions {
  std::string base_url = "https://api.openai.com/v1";  // POSTs to <base_url>/chat/completions
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;  // on 429, 5xx and dropped connections
  std::chrono::milliseconds backoff{500};  // doubles on each retry

  // Reads AAG_API_KEY, and AAG_LLM_URL when set.
  static RemoteOptions from_env();
};

// OpenAI-compatible chat-completions endpoint.
class RemoteClient : public LlmClient {
 public:
  explicit RemoteClient(RemoteOptions options);
  std::string generate(const LlmPrompt& prompt, const GenerationConfig& config) override;

 private:
  RemoteOptions opt_;
};

// "echo" or "remote"; throws ValidationError otherwise.
std::unique_ptr<LlmClient> make_llm_client(const std::string& backend);

}  // namespace aag
