// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "geowalk/cloud_io.hpp"
#include "geowalk/error.hpp"

namespace geowalk {
namespace {

using Vec3 = Eigen::RowVector3d;
constexpr double kPi = std::numbers::pi;

// Draws one of several surface pieces with probability proportional to area.
std::size_t pick_piece(const std::vector<double>& areas, Rng& rng) {
  double total = 0.0;
  for (const double a : areas) total += a;
  double x = rng.uniform(0.0, total);
  for (std::size_t i = 0; i + 1 < areas.size(); ++i) {
    if (x < areas[i]) return i;
    x -= areas[i];
  }
  return areas.size() - 1;
}

Vec3 sphere_point(Rng& rng) {
  Vec3 p(rng.normal(), rng.normal(), rng.normal());
  while (p.norm() < 1e-12) p = Vec3(rng.normal(), rng.normal(), rng.normal());
  return p / p.norm();
}

// Antipodal pairs, closed by a 120-degree triad when n is odd, so the sample
// mean is the sphere's centre.
void fill_sphere(Points& points, Rng& rng) {
  const Eigen::Index n = points.rows();
  const Eigen::Index paired = n % 2 == 0 ? n : n - 3;
  for (Eigen::Index i = 0; i < paired; i += 2) {
    points.row(i) = sphere_point(rng);
    points.row(i + 1) = -points.row(i);
  }
  if (paired == n) return;
  const Vec3 a = sphere_point(rng);
  Vec3 b = sphere_point(rng);
  b -= b.dot(a) * a;
  while (b.norm() < 1e-6) {
    b = sphere_point(rng);
    b -= b.dot(a) * a;
  }
  b /= b.norm();
  const double h = std::sqrt(3.0) / 2.0;
  points.row(paired) = a;
  points.row(paired + 1) = -0.5 * a + h * b;
  points.row(paired + 2) = -0.5 * a - h * b;
}

Vec3 box_point(const Vec3& half, Rng& rng) {
  const std::vector<double> areas = {half(1) * half(2), half(0) * half(2), half(0) * half(1)};
  const auto axis = static_cast<int>(pick_piece(areas, rng));
  Vec3 p;
  for (int d = 0; d < 3; ++d) p(d) = rng.uniform(-half(d), half(d));
  p(axis) = rng.uniform() < 0.5 ? -half(axis) : half(axis);
  return p;
}

Vec3 cylinder_point(double radius, double half_height, Rng& rng) {
  const double lateral = 2.0 * kPi * radius * 2.0 * half_height;
  const double cap = kPi * radius * radius;
  const std::size_t piece = pick_piece({lateral, cap, cap}, rng);
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  if (piece == 0) return Vec3(radius * std::cos(theta), radius * std::sin(theta), rng.uniform(-half_height, half_height));
  const double r = radius * std::sqrt(rng.uniform());
  return Vec3(r * std::cos(theta), r * std::sin(theta), piece == 1 ? half_height : -half_height);
}

Vec3 torus_point(double major, double minor, Rng& rng) {
  for (;;) {
    const double u = rng.uniform(0.0, 2.0 * kPi);
    const double v = rng.uniform(0.0, 2.0 * kPi);
    if (rng.uniform(0.0, major + minor) <= major + minor * std::cos(v)) {
      const double ring = major + minor * std::cos(v);
      return Vec3(ring * std::cos(u), ring * std::sin(u), minor * std::sin(v));
    }
  }
}

Vec3 cone_point(double radius, double height, Rng& rng) {
  const double slant = std::hypot(radius, height);
  const std::size_t piece = pick_piece({kPi * radius * slant, kPi * radius * radius}, rng);
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  const double s = std::sqrt(rng.uniform());
  if (piece == 0) return Vec3(s * radius * std::cos(theta), s * radius * std::sin(theta), height * (1.0 - s));
  return Vec3(s * radius * std::cos(theta), s * radius * std::sin(theta), 0.0);
}

Vec3 plane_point(double half_x, double half_y, Rng& rng) {
  return Vec3(rng.uniform(-half_x, half_x), rng.uniform(-half_y, half_y), 0.0);
}

std::filesystem::path cloud_file(const std::string& split, std::size_t index, const std::string& class_name) {
  std::ostringstream name;
  name << std::setw(4) << std::setfill('0') << index << '_' << class_name << ".xyz";
  return std::filesystem::path(split) / name.str();
}

}  // namespace

std::string_view shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::axis_box: return "axis-box";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::torus: return "torus";
    case ShapeKind::cone: return "cone";
    case ShapeKind::plane_patch: return "plane-patch";
  }
  return "unknown";
}

std::vector<ShapeKind> all_shapes() {
  return {ShapeKind::sphere, ShapeKind::axis_box, ShapeKind::cylinder,
          ShapeKind::torus,  ShapeKind::cone,     ShapeKind::plane_patch};
}

ShapeKind parse_shape(std::string_view name) {
  for (const auto kind : all_shapes()) {
    if (name == shape_name(kind)) return kind;
  }
  throw InvalidInput("unknown shape '" + std::string(name) + "'");
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

Points generate_shape(ShapeKind kind, std::size_t n, double jitter, bool rotate, Rng& rng) {
  if (n < kMinCloudPoints) throw InvalidInput("generate_shape: need at least 4 points");
  if (!(jitter >= 0.0)) throw InvalidInput("generate_shape: jitter must be non-negative");
  Points points(static_cast<Eigen::Index>(n), 3);
  const Vec3 box_half(1.0, rng.uniform(0.45, 0.9), rng.uniform(0.3, 0.6));
  const double cyl_radius = rng.uniform(0.35, 0.6);
  const double cyl_half_height = rng.uniform(0.8, 1.0);
  const double torus_minor = rng.uniform(0.2, 0.35);
  const double cone_radius = rng.uniform(0.6, 1.0);
  const double cone_height = rng.uniform(1.2, 1.8);
  const double plane_half_y = rng.uniform(0.5, 1.0);
  if (kind == ShapeKind::sphere) fill_sphere(points, rng);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    switch (kind) {
      case ShapeKind::sphere: break;
      case ShapeKind::axis_box: points.row(i) = box_point(box_half, rng); break;
      case ShapeKind::cylinder: points.row(i) = cylinder_point(cyl_radius, cyl_half_height, rng); break;
      case ShapeKind::torus: points.row(i) = torus_point(1.0, torus_minor, rng); break;
      case ShapeKind::cone: points.row(i) = cone_point(cone_radius, cone_height, rng); break;
      case ShapeKind::plane_patch: points.row(i) = plane_point(1.0, plane_half_y, rng); break;
    }
  }
  if (jitter > 0.0) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      points.row(i) += jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
  }
  if (rotate) points = (points * random_rotation(rng).transpose()).eval();
  return normalize_unit_ball(points);
}

void SyntheticDatasetSpec::validate() const {
  if (classes.size() < 2) throw InvalidInput("dataset spec: need at least two classes");
  if (n_points < 64) throw InvalidInput("dataset spec: n_points must be at least 64");
  if (instances_per_class < 2) throw InvalidInput("dataset spec: need at least two instances per class");
  if (!(jitter >= 0.0)) throw InvalidInput("dataset spec: jitter must be non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("dataset spec: train_fraction must lie in (0, 1)");
}

Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
  spec.validate();
  Dataset out;
  out.random_rotation = spec.random_rotation;
  const auto train_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.instances_per_class))),
      1, spec.instances_per_class - 1);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const std::string name(shape_name(spec.classes[c]));
    out.class_names.push_back(name);
    for (std::size_t i = 0; i < spec.instances_per_class; ++i) {
      Rng rng(mix_seed(spec.seed, c * 1000003 + i));
      PointCloud cloud(generate_shape(spec.classes[c], spec.n_points, spec.jitter, spec.random_rotation, rng),
                       static_cast<int>(c), name + "_" + std::to_string(i));
      (i < train_count ? out.train : out.test).push_back(std::move(cloud));
    }
  }
  return out;
}

std::vector<Points> Dataset::train_excluding(int label) const {
  std::vector<Points> out;
  for (const auto& cloud : train) {
    if (cloud.label() != label) out.push_back(cloud.points());
  }
  return out;
}

std::vector<Points> Dataset::train_of(int label) const {
  std::vector<Points> out;
  for (const auto& cloud : train) {
    if (cloud.label() == label) out.push_back(cloud.points());
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory / "train");
  std::filesystem::create_directories(directory / "test");
  nlohmann::ordered_json manifest;
  manifest["classes"] = dataset.class_names;
  manifest["random_rotation"] = dataset.random_rotation;
  for (const auto& [split, clouds] : {std::pair{"train", &dataset.train}, std::pair{"test", &dataset.test}}) {
    auto& list = manifest[split];
    list = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < clouds->size(); ++i) {
      const PointCloud& cloud = (*clouds)[i];
      if (!cloud.label()) throw InvalidInput("save_dataset: unlabelled cloud");
      const auto file = cloud_file(split, i, dataset.class_names.at(static_cast<std::size_t>(*cloud.label())));
      write_xyz(directory / file, cloud.points());
      list.push_back({{"file", file.generic_string()}, {"label", *cloud.label()}, {"name", cloud.name()}});
    }
  }
  std::ofstream out(directory / "manifest.json");
  if (!out) throw InvalidInput("cannot write " + (directory / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& directory) {
  std::ifstream in(directory / "manifest.json");
  if (!in) throw InvalidInput("no manifest.json in " + directory.string());
  Dataset out;
  try {
    const auto manifest = nlohmann::json::parse(in);
    out.class_names = manifest.at("classes").get<std::vector<std::string>>();
    out.random_rotation = manifest.value("random_rotation", false);
    for (const auto& [split, clouds] : {std::pair{"train", &out.train}, std::pair{"test", &out.test}}) {
      for (const auto& entry : manifest.at(split)) {
        clouds->emplace_back(read_xyz(directory / entry.at("file").get<std::string>()), entry.at("label").get<int>(),
                             entry.value("name", std::string{}));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed dataset manifest: ") + e.what());
  }
  return out;
}

Points sample_off_mesh(const std::filesystem::path& path, std::size_t n, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string header;
  in >> header;
  std::size_t vertices = 0;
  std::size_t faces = 0;
  std::size_t edges = 0;
  if (header == "OFF") {
    in >> vertices >> faces >> edges;
  } else if (header.rfind("OFF", 0) == 0) {
    // Some ModelNet files glue the counts to the keyword: "OFF490 518 0".
    std::istringstream rest(header.substr(3));
    rest >> vertices;
    in >> faces >> edges;
  } else {
    throw InvalidInput(path.string() + " is not an OFF file");
  }
  if (!in || vertices == 0 || faces == 0) throw InvalidInput(path.string() + ": bad OFF header");
  std::vector<Vec3> v(vertices);
  for (auto& p : v) in >> p(0) >> p(1) >> p(2);
  std::vector<std::array<std::size_t, 3>> triangles;
  std::vector<double> areas;
  for (std::size_t f = 0; f < faces; ++f) {
    std::size_t count = 0;
    in >> count;
    std::vector<std::size_t> ids(count);
    for (auto& id : ids) in >> id;
    if (!in) throw InvalidInput(path.string() + ": truncated face list");
    for (std::size_t j = 1; j + 1 < count; ++j) {
      const std::array<std::size_t, 3> tri{ids[0], ids[j], ids[j + 1]};
      for (const auto id : tri) {
        if (id >= vertices) throw InvalidInput(path.string() + ": face index out of range");
      }
      triangles.push_back(tri);
      areas.push_back(0.5 * (v[tri[1]] - v[tri[0]]).cross(v[tri[2]] - v[tri[0]]).norm());
    }
  }
  if (triangles.empty()) throw InvalidInput(path.string() + ": mesh has no faces");
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  Points out(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& tri = triangles[pick(rng.engine())];
    double a = rng.uniform();
    double b = rng.uniform();
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    out.row(i) = v[tri[0]] + a * (v[tri[1]] - v[tri[0]]) + b * (v[tri[2]] - v[tri[0]]);
  }
  return normalize_unit_ball(out);
}

}  // namespace geowalk
