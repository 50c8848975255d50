// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/discriminator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "geowalk/error.hpp"

namespace geowalk {
namespace {

constexpr std::array<std::pair<int, int>, Discriminator::kLayers> kShapes{{
    {64, 3},    // per-point encoder
    {128, 64},  // per-point encoder
    {64, 128},  // head
    {32, 64},   // head
    {1, 32},    // head
}};

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

// Per-point activations kept for the backward pass.
struct Forward {
  Eigen::MatrixXd z1, h1, z2, h2;
  Eigen::VectorXd pooled;
  std::vector<Eigen::Index> argmax;
  Eigen::VectorXd z3, a3, z4, a4;
  double logit = 0.0;
};

Forward forward(const Discriminator::Layers& layers, const Points& points) {
  Forward f;
  f.z1 = (points * layers[0].weight.transpose()).rowwise() + layers[0].bias.transpose();
  f.h1 = relu(f.z1);
  f.z2 = (f.h1 * layers[1].weight.transpose()).rowwise() + layers[1].bias.transpose();
  f.h2 = relu(f.z2);

  const auto channels = f.h2.cols();
  f.pooled.resize(channels);
  f.argmax.resize(static_cast<std::size_t>(channels));
  for (Eigen::Index c = 0; c < channels; ++c) {
    Eigen::Index row = 0;
    f.pooled(c) = f.h2.col(c).maxCoeff(&row);
    f.argmax[static_cast<std::size_t>(c)] = row;
  }

  f.z3 = layers[2].weight * f.pooled + layers[2].bias;
  f.a3 = f.z3.cwiseMax(0.0);
  f.z4 = layers[3].weight * f.a3 + layers[3].bias;
  f.a4 = f.z4.cwiseMax(0.0);
  f.logit = (layers[4].weight * f.a4 + layers[4].bias)(0);
  return f;
}

Eigen::VectorXd relu_mask(const Eigen::VectorXd& pre, const Eigen::VectorXd& grad) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw InvalidInput("Discriminator::read: truncated file");
  return v;
}

void put_tensor(std::ostream& out, const Eigen::MatrixXd& m, bool as_vector) {
  if (as_vector) {
    put_u64(out, 1);
    put_u64(out, static_cast<std::uint64_t>(m.size()));
  } else {
    put_u64(out, 2);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

Eigen::MatrixXd get_tensor(std::istream& in, Eigen::Index rows, Eigen::Index cols, bool as_vector) {
  const std::uint64_t rank = get_u64(in);
  std::vector<std::uint64_t> dims(rank);
  for (auto& d : dims) d = get_u64(in);
  const bool ok = as_vector ? (rank == 1 && dims[0] == static_cast<std::uint64_t>(rows))
                            : (rank == 2 && dims[0] == static_cast<std::uint64_t>(rows) &&
                               dims[1] == static_cast<std::uint64_t>(cols));
  if (!ok) throw InvalidInput("Discriminator::read: tensor shape does not match the architecture");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!in.read(reinterpret_cast<char*>(&v), 8)) throw InvalidInput("Discriminator::read: truncated tensor");
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

double CloudScorer::score(const Points& points) const { return sigmoid(logit(points)); }

Discriminator Discriminator::random_init(Rng& rng) {
  Discriminator d;
  for (std::size_t l = 0; l < kLayers; ++l) {
    const auto [rows, cols] = kShapes[l];
    const double stddev = std::sqrt(2.0 / cols);
    auto& layer = d.layers_[l];
    layer.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = stddev * rng.normal();
    }
    layer.bias = Eigen::VectorXd::Zero(rows);
  }
  return d;
}

Discriminator::Layers Discriminator::zeros_like() {
  Layers out;
  for (std::size_t l = 0; l < kLayers; ++l) {
    out[l].weight = Eigen::MatrixXd::Zero(kShapes[l].first, kShapes[l].second);
    out[l].bias = Eigen::VectorXd::Zero(kShapes[l].first);
  }
  return out;
}

double Discriminator::logit(const Points& points) const { return forward(layers_, points).logit; }

double Discriminator::accumulate_gradient(const Points& points, double label, Layers& grads) const {
  const Forward f = forward(layers_, points);
  const double loss = softplus(f.logit) - label * f.logit;
  const double d_logit = sigmoid(f.logit) - label;

  grads[4].weight += d_logit * f.a4.transpose();
  grads[4].bias(0) += d_logit;
  const Eigen::VectorXd dz4 = relu_mask(f.z4, layers_[4].weight.transpose() * d_logit);
  grads[3].weight += dz4 * f.a3.transpose();
  grads[3].bias += dz4;
  const Eigen::VectorXd dz3 = relu_mask(f.z3, layers_[3].weight.transpose() * dz4);
  grads[2].weight += dz3 * f.pooled.transpose();
  grads[2].bias += dz3;
  const Eigen::VectorXd d_pooled = layers_[2].weight.transpose() * dz3;

  // Max-pool routes each channel's gradient to one point; only those rows
  // contribute to the encoder gradient.
  std::vector<Eigen::Index> rows(f.argmax);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd dz2 = Eigen::MatrixXd::Zero(m, f.h2.cols());
  Eigen::MatrixXd h1(m, f.h1.cols());
  Eigen::MatrixXd z1(m, f.z1.cols());
  Points x(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    h1.row(i) = f.h1.row(rows[static_cast<std::size_t>(i)]);
    z1.row(i) = f.z1.row(rows[static_cast<std::size_t>(i)]);
    x.row(i) = points.row(rows[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index c = 0; c < f.h2.cols(); ++c) {
    const Eigen::Index row = f.argmax[static_cast<std::size_t>(c)];
    if (f.z2(row, c) <= 0.0) continue;
    const auto local = std::lower_bound(rows.begin(), rows.end(), row) - rows.begin();
    dz2(local, c) = d_pooled(c);
  }
  grads[1].weight += dz2.transpose() * h1;
  grads[1].bias += dz2.colwise().sum().transpose();
  const Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(dz2 * layers_[1].weight, 0.0);
  grads[0].weight += dz1.transpose() * x;
  grads[0].bias += dz1.colwise().sum().transpose();
  return loss;
}

bool Discriminator::all_finite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

void Discriminator::write(std::ostream& out) const {
  put_u64(out, 2 * kLayers);
  for (const auto& layer : layers_) {
    put_tensor(out, layer.weight, false);
    put_tensor(out, layer.bias, true);
  }
}

Discriminator Discriminator::read(std::istream& in) {
  if (get_u64(in) != 2 * kLayers) throw InvalidInput("Discriminator::read: unexpected tensor count");
  Discriminator d;
  for (std::size_t l = 0; l < kLayers; ++l) {
    const auto [rows, cols] = kShapes[l];
    d.layers_[l].weight = get_tensor(in, rows, cols, false);
    d.layers_[l].bias = get_tensor(in, rows, 1, true);
  }
  if (!d.all_finite()) throw InvalidInput("Discriminator::read: non-finite parameter");
  return d;
}

void Discriminator::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  write(out);
}

Discriminator Discriminator::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string() + " for reading");
  return read(in);
}

Discriminator train_discriminator(std::span<const Points> positives, std::span<const Points> negatives,
                                  const DiscriminatorTrainingConfig& config,
                                  DiscriminatorTrainingLog* log) {
  Rng init_rng(mix_seed(config.seed, 0));
  return train_discriminator(Discriminator::random_init(init_rng), positives, negatives, config, log);
}

Discriminator train_discriminator(Discriminator model, std::span<const Points> positives,
                                  std::span<const Points> negatives,
                                  const DiscriminatorTrainingConfig& config,
                                  DiscriminatorTrainingLog* log) {
  if (positives.empty() || negatives.empty()) {
    throw InvalidInput("train_discriminator: both positive and negative sets must be non-empty");
  }
  if (config.epochs < 0 || config.batch_size == 0 || !(config.learning_rate >= 0.0)) {
    throw InvalidInput("train_discriminator: invalid training configuration");
  }

  struct Sample {
    const Points* points;
    double label;
  };
  std::vector<Sample> samples;
  samples.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) samples.push_back({&p, 1.0});
  for (const auto& p : negatives) samples.push_back({&p, 0.0});

  Rng rng(mix_seed(config.seed, 1));
  auto first_moment = Discriminator::zeros_like();
  auto second_moment = Discriminator::zeros_like();
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(samples.begin(), samples.end(), rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < samples.size(); begin += config.batch_size) {
      const std::size_t end = std::min(samples.size(), begin + config.batch_size);
      auto grads = Discriminator::zeros_like();
      for (std::size_t s = begin; s < end; ++s) {
        epoch_loss += model.accumulate_gradient(*samples[s].points, samples[s].label, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);

      ++step;
      const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto adam = [&](auto& param, auto& m, auto& v, const auto& g_raw) {
        const auto g = (g_raw * scale).eval();
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
        param.array() -= config.learning_rate * (m.array() / correction1) /
                         ((v.array() / correction2).sqrt() + config.adam_epsilon);
      };
      for (std::size_t l = 0; l < Discriminator::kLayers; ++l) {
        auto& layer = model.layers()[l];
        adam(layer.weight, first_moment[l].weight, second_moment[l].weight, grads[l].weight);
        adam(layer.bias, first_moment[l].bias, second_moment[l].bias, grads[l].bias);
      }
    }
    epoch_loss /= static_cast<double>(samples.size());
    if (!std::isfinite(epoch_loss) || !model.all_finite()) {
      std::ostringstream msg;
      msg << "train_discriminator: diverged at epoch " << epoch << " (loss " << epoch_loss
          << ", learning rate " << config.learning_rate << ")";
      throw NumericalError(msg.str());
    }
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss);
  }
  return model;
}

double discriminator_accuracy(const CloudScorer& scorer, std::span<const Points> positives,
                              std::span<const Points> negatives) {
  const std::size_t total = positives.size() + negatives.size();
  if (total == 0) throw InvalidInput("discriminator_accuracy: no samples");
  std::size_t correct = 0;
  for (const auto& p : positives) correct += scorer.logit(p) > 0.0 ? 1 : 0;
  for (const auto& p : negatives) correct += scorer.logit(p) <= 0.0 ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace geowalk
