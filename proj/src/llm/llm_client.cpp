#include "aag/llm_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "aag/error.hpp"
#include "aag/io.hpp"

namespace aag {

void GenerationConfig::validate() const {
  std::vector<Violation> v;
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    v.push_back({"Range", "temperature", "temperature must be within [0, 2]"});
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) v.push_back({"Range", "top_p", "top_p must be within (0, 1]"});
  if (max_tokens <= 0) v.push_back({"Range", "max_tokens", "max_tokens must be positive"});
  if (!v.empty()) throw ValidationError(std::move(v));
}

GenerationConfig generation_profile(const std::string& name) {
  GenerationConfig c;
  if (name == "remote") {
    c.temperature = 0.0;
  } else if (name == "local") {
    c.temperature = 0.2;
    c.top_p = 0.1;
  } else {
    throw ValidationError("profile", "unknown profile '" + name + "' (remote, local)");
  }
  return c;
}

std::string EchoClient::generate(const LlmPrompt& prompt, const GenerationConfig& config) {
  config.validate();
  return "REPORT:\n" + prompt.user;
}

RemoteOptions RemoteOptions::from_env() {
  RemoteOptions o;
  if (const char* k = std::getenv("AAG_API_KEY")) o.api_key = k;
  if (const char* u = std::getenv("AAG_LLM_URL")) o.base_url = u;
  return o;
}

RemoteClient::RemoteClient(RemoteOptions options) : opt_(std::move(options)) {}

namespace {

// "https://host:port/v1" -> ("https://host:port", "/v1")
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::HttpError, "bad base URL '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  auto path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string RemoteClient::generate(const LlmPrompt& prompt, const GenerationConfig& config) {
  config.validate();
  if (opt_.api_key.empty()) throw Error(ErrorCode::AuthError, "no API key (set AAG_API_KEY)");
  auto [host, prefix] = split_url(opt_.base_url);

  Json body{{"model", config.model.empty() ? "gpt-4o" : config.model},
            {"temperature", config.temperature},
            {"top_p", config.top_p},
            {"max_tokens", config.max_tokens},
            {"messages", Json::array({Json{{"role", "system"}, {"content", prompt.system}},
                                      Json{{"role", "user"}, {"content", prompt.user}}})}};
  auto payload = body.dump();

  httplib::Client client(host);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(opt_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opt_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers{{"Authorization", "Bearer " + opt_.api_key}};

  auto delay = opt_.backoff;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(prefix + "/chat/completions", headers, payload, "application/json");
    bool last = attempt >= opt_.max_retries;
    if (!res) {
      auto err = res.error();
      if (last) {
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
          throw Error(ErrorCode::TimeoutError, "no response from " + host + ": " + httplib::to_string(err));
        }
        throw Error(ErrorCode::HttpError, "request to " + host + " failed: " + httplib::to_string(err));
      }
    } else if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::AuthError, "server rejected the API key (HTTP " + std::to_string(res->status) + ")");
    } else if (res->status == 200) {
      Json reply = parse_json(res->body, "LLM response");
      try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const Json::exception&) {
        throw Error(ErrorCode::HttpError, "response has no choices[0].message.content");
      }
    } else if (!retryable(res->status) || last) {
      throw Error(ErrorCode::HttpError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

std::unique_ptr<LlmClient> make_llm_client(const std::string& backend) {
  if (backend == "echo") return std::make_unique<EchoClient>();
  if (backend == "remote") return std::make_unique<RemoteClient>(RemoteOptions::from_env());
  throw ValidationError("backend", "unknown backend '" + backend + "' (echo, remote)");
}

}  // namespace aag
