#include "relic/wire.hpp"

#include <cmath>

#include <fmt/core.h>
#include <httplib.h>
#include <json.hpp>

#include "relic/error.hpp"

namespace relic {

std::string prompt_to_json(const RenderedPrompt& prompt) {
  nlohmann::ordered_json body;
  body["system"] = prompt.system;
  body["turns"] = nlohmann::ordered_json::array();
  for (const auto& turn : prompt.turns) {
    nlohmann::ordered_json t;
    t["speaker"] = std::string(speaker_name(turn.speaker));
    t["text"] = turn.text;
    body["turns"].push_back(std::move(t));
  }
  body["response"] = prompt.final_response;
  return body.dump();
}

RenderedPrompt prompt_from_json(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    RenderedPrompt prompt;
    prompt.system = j.at("system").get<std::string>();
    for (const auto& t : j.at("turns")) {
      const auto speaker = t.at("speaker").get<std::string>();
      Turn turn;
      if (speaker == "user") {
        turn.speaker = Speaker::kUser;
      } else if (speaker == "assistant") {
        turn.speaker = Speaker::kAssistant;
      } else {
        throw DataError(fmt::format("unknown speaker '{}'", speaker));
      }
      turn.text = t.at("text").get<std::string>();
      prompt.turns.push_back(std::move(turn));
    }
    prompt.final_response = j.at("response").get<std::string>();
    return prompt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed score request: {}", e.what()));
  }
}

std::string score_to_json(double score) {
  nlohmann::json reply;
  reply["score"] = score;
  return reply.dump();
}

double score_from_json(std::string_view body) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(fmt::format("malformed backend reply: {}", e.what()));
  }
  if (!reply.is_object() || !reply.contains("score") || !reply["score"].is_number()) {
    throw BackendError("backend reply has no numeric \"score\"");
  }
  return reply["score"].get<double>();
}

HttpRewardModel::HttpRewardModel(const std::string& url, double timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
  std::string rest = url;
  if (rest.starts_with("http://")) {
    rest = rest.substr(7);
  } else if (rest.find("://") != std::string::npos) {
    throw ConfigError(fmt::format("unsupported model URL scheme in '{}'", url));
  }
  rest = rest.substr(0, rest.find('/'));
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    host_ = rest;
  } else {
    host_ = rest.substr(0, colon);
    try {
      port_ = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad port in model URL '{}'", url));
    }
  }
  if (host_.empty()) throw ConfigError(fmt::format("model URL '{}' has no host", url));
}

HttpRewardModel::~HttpRewardModel() = default;

RewardScore HttpRewardModel::do_score(const RenderedPrompt& prompt) {
  // One client per call keeps the model usable from several threads at once.
  httplib::Client client(host_, port_);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  const auto res = client.Post("/v1/score", prompt_to_json(prompt), "application/json");
  if (!res) {
    throw BackendError(fmt::format("reward backend {}:{} unreachable ({})", host_, port_,
                                   httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw BackendError(fmt::format("reward backend returned HTTP {}", res->status));
  }
  return {score_from_json(res->body)};
}

struct OracleServer::Impl {
  SyntheticOracleConfig cfg;
  httplib::Server server;
};

OracleServer::OracleServer(SyntheticOracleConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->server.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const RenderedPrompt prompt = prompt_from_json(req.body);
      res.set_content(score_to_json(synthetic_oracle_score(impl_->cfg, prompt).value),
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      nlohmann::json err;
      err["error"] = e.what();
      res.set_content(err.dump(), "application/json");
    }
  });
}

OracleServer::~OracleServer() { stop(); }

int OracleServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void OracleServer::serve(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw ConfigError(fmt::format("cannot listen on {}:{}", host, port));
  }
}

void OracleServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace relic
