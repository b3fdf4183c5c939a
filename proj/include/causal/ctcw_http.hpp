#pragma once

#include <mutex>
#include <ostream>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "causal/ctcw.hpp"
#include "causal/error.hpp"

namespace causal {

struct HttpProviderConfig {
  std::string url;            // e.g. http://host:port/v1/chat/completions
  std::string api_key;        // sent as a bearer token when non-empty
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.9;
  std::ostream* log = nullptr; // request/response bodies are logged verbatim
};

/// Chat-completion client: posts the prompt as a single user message and
/// parses the reply text through ctcw_parse. Requests on one provider
/// instance are serialized.
class HttpProvider : public CtcwProvider {
public:
  explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) {
      throw ValidationError("HttpProvider: endpoint URL is empty (set CTCW_API_URL)");
    }
    const auto scheme_end = cfg_.url.find("://");
    if (scheme_end == std::string::npos) {
      throw ValidationError("HttpProvider: URL must start with http://");
    }
    const std::string scheme = cfg_.url.substr(0, scheme_end);
    if (scheme != "http") {
      throw ValidationError("HttpProvider: only http endpoints are supported; got " + scheme);
    }
    const auto path_start = cfg_.url.find('/', scheme_end + 3);
    host_ = cfg_.url.substr(scheme_end + 3,
                            path_start == std::string::npos ? std::string::npos
                                                            : path_start - scheme_end - 3);
    path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
  }

  ProbabilityTable probabilities(const std::string& prompt) override {
    std::lock_guard<std::mutex> lock(mutex_);
    nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", cfg_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const std::string payload = body.dump();
    if (cfg_.log) *cfg_.log << ">>> " << payload << '\n';

    httplib::Client client(("http://" + host_).c_str());
    client.set_read_timeout(60, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    }
    auto res = client.Post(path_.c_str(), headers, payload, "application/json");
    if (!res) {
      throw Error("HttpProvider: request to " + cfg_.url + " failed: " +
                  httplib::to_string(res.error()));
    }
    if (cfg_.log) *cfg_.log << "<<< " << res->body << '\n';
    if (res->status != 200) {
      throw Error("HttpProvider: HTTP " + std::to_string(res->status) + " from " + cfg_.url);
    }
    std::string content;
    try {
      const auto reply = nlohmann::json::parse(res->body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("HttpProvider: unexpected response shape: ") + e.what());
    }
    return ctcw_parse(content);
  }

private:
  HttpProviderConfig cfg_;
  std::string host_;
  std::string path_;
  std::mutex mutex_;
};

} // namespace causal
