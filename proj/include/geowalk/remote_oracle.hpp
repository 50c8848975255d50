// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "geowalk/oracle.hpp"

namespace geowalk {

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 8000;

  /// Accepts "http://host:port", "host:port" or "host" (port 80).
  static RemoteEndpoint parse(std::string_view url);
  std::string to_string() const;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};
  std::chrono::milliseconds timeout{10000};
};

// Wire protocol:
//   POST /predict  body {"points":[[x,y,z],...]}, numbers at 17 significant digits
//                  200 -> {"label":<int>}, 400 malformed input, 500 victim failure
//   GET  /health   200 -> {"classes":<int>}
std::string encode_predict_request(const Points& points);
/// Throws ProtocolError unless `body` is a JSON object with an integer "label".
int decode_predict_response(std::string_view body);
/// Throws ProtocolError unless `body` is a JSON object with an integer "classes".
int decode_health_response(std::string_view body);

/// Victim served over HTTP. Connection failures and 5xx answers are retried
/// with exponential backoff, then surface as TransportError. A 400 or an
/// unparsable 200 body raises ProtocolError immediately.
class RemoteOracle final : public HardLabelOracle {
 public:
  explicit RemoteOracle(RemoteEndpoint endpoint, RetryPolicy retry = {});

  int predict(const Points& points) const override;
  /// Number of classes reported by GET /health.
  int health() const;

  const RemoteEndpoint& endpoint() const { return endpoint_; }

 private:
  RemoteEndpoint endpoint_;
  RetryPolicy retry_;
};

/// One-shot convenience wrapper around RemoteOracle::predict.
int remote_predict(const RemoteEndpoint& endpoint, const Points& points, const RetryPolicy& retry = {});

}  // namespace geowalk
