// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/native_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "geowalk/error.hpp"

namespace geowalk {

CloudFeatures extract_features(const Points& points, const FeatureOptions& options) {
  const Points unit = normalize_unit_ball(points);
  const auto n = static_cast<double>(unit.rows());

  CloudFeatures f = CloudFeatures::Zero();
  const Eigen::Matrix3d covariance = unit.transpose() * unit / n;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ascending = solver.eigenvalues();
  f(0) = ascending(2);
  f(1) = ascending(1);
  f(2) = ascending(0);

  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double r = unit.row(i).norm();
    const int bin = std::clamp(static_cast<int>(r * 8.0), 0, 7);
    f(3 + bin) += 1.0 / n;
  }

  if (options.include_bbox) {
    Eigen::Vector3d extent = (unit.colwise().maxCoeff() - unit.colwise().minCoeff()).transpose();
    std::sort(extent.data(), extent.data() + 3, std::greater<>());
    if (extent(0) > 0.0) {
      f(11) = extent(1) / extent(0);
      f(12) = extent(2) / extent(0);
    }
  }
  return f;
}

NativeCentroidClassifier::NativeCentroidClassifier(std::vector<std::pair<int, CloudFeatures>> centroids,
                                                   FeatureOptions options)
    : centroids_(std::move(centroids)), options_(options) {
  if (centroids_.size() < 2) throw InvalidInput("NativeCentroidClassifier: need at least two classes");
  std::sort(centroids_.begin(), centroids_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

int NativeCentroidClassifier::predict(const Points& points) const {
  const CloudFeatures f = extract_features(points, options_);
  int best_class = centroids_.front().first;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [class_id, centroid] : centroids_) {
    const double d = (f - centroid).squaredNorm();
    if (d < best) {  // strict: ties keep the lower class id
      best = d;
      best_class = class_id;
    }
  }
  return best_class;
}

double NativeCentroidClassifier::accuracy(std::span<const PointCloud> labelled) const {
  if (labelled.empty()) throw InvalidInput("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& cloud : labelled) {
    if (!cloud.label()) throw InvalidInput("accuracy: unlabelled cloud " + cloud.name());
    correct += predict(cloud.points()) == *cloud.label() ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labelled.size());
}

std::string NativeCentroidClassifier::to_json() const {
  nlohmann::ordered_json doc;
  doc["include_bbox"] = options_.include_bbox;
  auto& list = doc["centroids"];
  list = nlohmann::ordered_json::array();
  for (const auto& [class_id, centroid] : centroids_) {
    list.push_back({{"class_id", class_id},
                    {"features", std::vector<double>(centroid.data(), centroid.data() + kFeatureDim)}});
  }
  return doc.dump(2);
}

NativeCentroidClassifier NativeCentroidClassifier::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    FeatureOptions options;
    options.include_bbox = doc.value("include_bbox", true);
    std::vector<std::pair<int, CloudFeatures>> centroids;
    for (const auto& entry : doc.at("centroids")) {
      const auto values = entry.at("features").get<std::vector<double>>();
      if (values.size() != kFeatureDim) throw InvalidInput("classifier: centroid has wrong dimension");
      centroids.emplace_back(entry.at("class_id").get<int>(), CloudFeatures(values.data()));
    }
    return NativeCentroidClassifier(std::move(centroids), options);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("classifier: malformed document: ") + e.what());
  }
}

void NativeCentroidClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << to_json() << '\n';
}

NativeCentroidClassifier NativeCentroidClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

NativeCentroidClassifier train_native_classifier(std::span<const PointCloud> dataset,
                                                 const FeatureOptions& options, double* training_accuracy) {
  std::map<int, std::pair<CloudFeatures, std::size_t>> sums;
  for (const auto& cloud : dataset) {
    if (!cloud.label()) throw InvalidInput("train_native_classifier: unlabelled cloud " + cloud.name());
    auto& [sum, count] = sums.try_emplace(*cloud.label(), CloudFeatures::Zero(), 0).first->second;
    sum += extract_features(cloud.points(), options);
    ++count;
  }
  if (sums.size() < 2) throw InvalidInput("train_native_classifier: need at least two classes");

  std::vector<std::pair<int, CloudFeatures>> centroids;
  for (const auto& [class_id, entry] : sums) {
    if (entry.second < 5) {
      std::cerr << "warning: class " << class_id << " has only " << entry.second
                << " training clouds\n";
    }
    centroids.emplace_back(class_id, entry.first / static_cast<double>(entry.second));
  }
  NativeCentroidClassifier classifier(std::move(centroids), options);
  if (training_accuracy != nullptr) *training_accuracy = classifier.accuracy(dataset);
  return classifier;
}

}  // namespace geowalk
