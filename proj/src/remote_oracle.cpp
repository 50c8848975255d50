// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/remote_oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "geowalk/error.hpp"

namespace geowalk {
namespace {

void append_number(std::string& out, double v) {
  char buffer[32];
  const int len = std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  out.append(buffer, static_cast<std::size_t>(len));
}

int integer_field(std::string_view body, const char* key) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(std::string("response is not JSON (expected {\"") + key + "\": <int>})");
  }
  if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_number_integer()) {
    throw ProtocolError(std::string("response lacks integer field \"") + key + "\"");
  }
  return doc.at(key).get<int>();
}

httplib::Client make_client(const RemoteEndpoint& endpoint, const RetryPolicy& retry) {
  httplib::Client client(endpoint.host, endpoint.port);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(retry.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(retry.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  return client;
}

}  // namespace

RemoteEndpoint RemoteEndpoint::parse(std::string_view url) {
  if (url.starts_with("http://")) url.remove_prefix(7);
  if (url.starts_with("https://")) throw InvalidInput("RemoteEndpoint: TLS is not supported");
  while (!url.empty() && url.back() == '/') url.remove_suffix(1);
  RemoteEndpoint endpoint;
  endpoint.port = 80;
  const auto colon = url.rfind(':');
  if (colon == std::string_view::npos) {
    endpoint.host = std::string(url);
  } else {
    endpoint.host = std::string(url.substr(0, colon));
    const auto digits = url.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), endpoint.port);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || endpoint.port <= 0 || endpoint.port > 65535) {
      throw InvalidInput("RemoteEndpoint: bad port in '" + std::string(url) + "'");
    }
  }
  if (endpoint.host.empty()) throw InvalidInput("RemoteEndpoint: empty host");
  return endpoint;
}

std::string RemoteEndpoint::to_string() const { return "http://" + host + ":" + std::to_string(port); }

std::string encode_predict_request(const Points& points) {
  require_finite(points, "encode_predict_request");
  std::string out = "{\"points\":[";
  out.reserve(static_cast<std::size_t>(points.rows()) * 72 + 16);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (i > 0) out += ',';
    out += '[';
    append_number(out, points(i, 0));
    out += ',';
    append_number(out, points(i, 1));
    out += ',';
    append_number(out, points(i, 2));
    out += ']';
  }
  out += "]}";
  return out;
}

int decode_predict_response(std::string_view body) { return integer_field(body, "label"); }

int decode_health_response(std::string_view body) { return integer_field(body, "classes"); }

RemoteOracle::RemoteOracle(RemoteEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  if (retry_.max_attempts < 1) throw InvalidInput("RetryPolicy: max_attempts must be at least 1");
}

int RemoteOracle::predict(const Points& points) const {
  const std::string body = encode_predict_request(points);
  auto backoff = retry_.initial_backoff;
  std::string last_failure;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(retry_.max_backoff,
                         std::chrono::milliseconds(static_cast<long long>(
                             static_cast<double>(backoff.count()) * retry_.backoff_multiplier)));
    }
    auto client = make_client(endpoint_, retry_);
    const auto response = client.Post("/predict", body, "application/json");
    if (!response) {
      last_failure = httplib::to_string(response.error());
      continue;
    }
    if (response->status == 200) return decode_predict_response(response->body);
    if (response->status == 400) throw ProtocolError("victim rejected the cloud as malformed (400)");
    if (response->status >= 500) {
      last_failure = "victim failure (" + std::to_string(response->status) + ")";
      continue;
    }
    throw ProtocolError("unexpected status " + std::to_string(response->status) + " from /predict");
  }
  std::ostringstream msg;
  msg << "predict on " << endpoint_.to_string() << " failed after " << retry_.max_attempts
      << " attempts: " << last_failure;
  throw TransportError(msg.str());
}

int RemoteOracle::health() const {
  auto client = make_client(endpoint_, retry_);
  const auto response = client.Get("/health");
  if (!response) {
    throw TransportError("health check on " + endpoint_.to_string() + " failed: " +
                         httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw ProtocolError("health check returned status " + std::to_string(response->status));
  }
  return decode_health_response(response->body);
}

int remote_predict(const RemoteEndpoint& endpoint, const Points& points, const RetryPolicy& retry) {
  return RemoteOracle(endpoint, retry).predict(points);
}

}  // namespace geowalk
