/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "ragcheck/judge.hpp"

namespace ragcheck {

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8089
  std::string path = "/v1/chat/completions";
  std::string api_key;   // sent as a bearer token when non-empty
  std::string model;
  double temperature = 0.0;
  double timeout_seconds = 120.0;
};

/**
 * Chat-completions wire format over HTTP: the rendered prompt goes out as a
 * single user message, the verdict JSON comes back in
 * choices[0].message.content. Transport errors, 429 and 5xx responses are
 * retriable; other HTTP errors are not.
 */
class HttpJudgeBackend : public JudgeBackend {
public:
  explicit HttpJudgeBackend(const EndpointConfig& config) : config_(config) {
    if (config_.base_url.rfind("http://", 0) != 0) {
      throw std::invalid_argument(
          "HttpJudgeBackend: only http:// endpoints are supported in this build; "
          "terminate TLS in a local gateway for https upstreams");
    }
    client_ = std::make_unique<httplib::Client>(config_.base_url);
    client_->set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client_->set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    if (!config_.api_key.empty()) {
      client_->set_default_headers(
          {{"Authorization", "Bearer " + config_.api_key}});
    }
  }

  BackendResult complete(const BackendRequest& request) override {
    const json body = {
        {"model", request.model.empty() ? config_.model : request.model},
        {"temperature", request.temperature},
        {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
    };
    const httplib::Result res = client_->Post(config_.path, body.dump(),
                                              "application/json");
    if (!res) {
      return BackendFailure{"transport: " + httplib::to_string(res.error()), true};
    }
    if (res->status == 429 || res->status >= 500) {
      return BackendFailure{"http " + std::to_string(res->status), true};
    }
    if (res->status != 200) {
      return BackendFailure{"http " + std::to_string(res->status) + ": " + res->body,
                            false};
    }
    try {
      const json doc = json::parse(res->body);
      BackendReply reply;
      reply.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (doc.contains("usage")) {
        reply.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
        reply.completion_tokens = doc["usage"].value("completion_tokens", 0L);
      }
      return reply;
    } catch (const std::exception& e) {
      return BackendFailure{std::string("envelope: ") + e.what(), true};
    }
  }

private:
  EndpointConfig config_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace ragcheck
