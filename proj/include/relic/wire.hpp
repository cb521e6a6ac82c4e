#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "relic/reward.hpp"

namespace relic {

/// Request body of POST /v1/score:
///   {"system": str, "turns": [{"speaker": "user"|"assistant", "text": str}, ...],
///    "response": str}
std::string prompt_to_json(const RenderedPrompt& prompt);

/// Inverse of prompt_to_json. Throws DataError on malformed bodies.
RenderedPrompt prompt_from_json(std::string_view body);

/// Reply body {"score": number}. Throws BackendError when malformed.
std::string score_to_json(double score);
double score_from_json(std::string_view body);

/// Remote reward model speaking the /v1/score protocol over HTTP.
class HttpRewardModel : public RewardModel {
 public:
  /// `url` is "http://host:port" (a trailing path is ignored).
  explicit HttpRewardModel(const std::string& url, double timeout_seconds = 30.0);
  ~HttpRewardModel() override;

 protected:
  RewardScore do_score(const RenderedPrompt& prompt) override;

 private:
  std::string host_;
  int port_ = 80;
  double timeout_seconds_;
};

/// Serves the synthetic oracle behind /v1/score.
class OracleServer {
 public:
  explicit OracleServer(SyntheticOracleConfig cfg);
  ~OracleServer();

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace relic
