// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#include "geowalk/cloud_io.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "geowalk/error.hpp"

namespace geowalk {
namespace {

constexpr int kDigits = std::numeric_limits<double>::max_digits10;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  return out;
}

Points from_rows(const std::vector<std::array<double, 3>>& rows) {
  Points points(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < 3; ++c) points(static_cast<Eigen::Index>(i), c) = rows[i][c];
  }
  require_finite(points, "cloud reader");
  return points;
}

void write_rows(std::ostream& out, const Points& points) {
  out << std::setprecision(kDigits);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out << points(i, 0) << ' ' << points(i, 1) << ' ' << points(i, 2) << '\n';
  }
}

}  // namespace

Points read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw InvalidInput("read_ply: missing 'ply' magic");
  }

  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool saw_vertex = false;
  std::vector<std::string> vertex_props;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string key;
    tokens >> key;
    if (key == "format") {
      std::string kind;
      tokens >> kind;
      if (kind != "ascii") throw InvalidInput("read_ply: only ascii PLY is supported");
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      tokens >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = count;
        saw_vertex = true;
      } else if (!saw_vertex) {
        throw InvalidInput("read_ply: vertex element must come first");
      }
    } else if (key == "property" && in_vertex) {
      std::string type;
      std::string name;
      tokens >> type;
      if (type == "list") throw InvalidInput("read_ply: list properties on vertices unsupported");
      tokens >> name;
      vertex_props.push_back(name);
    } else if (key == "end_header") {
      break;
    }
  }
  if (!saw_vertex) throw InvalidInput("read_ply: no vertex element");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t p = 0; p < vertex_props.size(); ++p) {
    if (vertex_props[p] == "x") ix = static_cast<int>(p);
    if (vertex_props[p] == "y") iy = static_cast<int>(p);
    if (vertex_props[p] == "z") iz = static_cast<int>(p);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw InvalidInput("read_ply: vertex lacks x/y/z");

  std::vector<std::array<double, 3>> rows(vertex_count);
  std::vector<double> values(vertex_props.size());
  for (std::size_t i = 0; i < vertex_count; ++i) {
    for (auto& v : values) {
      if (!(in >> v)) throw InvalidInput("read_ply: truncated vertex data");
    }
    rows[i] = {values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
               values[static_cast<std::size_t>(iz)]};
  }
  return from_rows(rows);
}

void write_ply(std::ostream& out, const Points& points) {
  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << points.rows() << '\n'
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "end_header\n";
  write_rows(out, points);
}

Points read_xyz(std::istream& in) {
  std::vector<std::array<double, 3>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::array<double, 3> row{};
    if (!(tokens >> row[0] >> row[1] >> row[2])) {
      throw InvalidInput("read_xyz: malformed line " + std::to_string(line_no));
    }
    rows.push_back(row);
  }
  return from_rows(rows);
}

void write_xyz(std::ostream& out, const Points& points) { write_rows(out, points); }

Points read_ply(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ply(in);
}

void write_ply(const std::filesystem::path& path, const Points& points) {
  auto out = open_out(path);
  write_ply(out, points);
}

Points read_xyz(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_xyz(in);
}

void write_xyz(const std::filesystem::path& path, const Points& points) {
  auto out = open_out(path);
  write_xyz(out, points);
}

Points read_cloud(const std::filesystem::path& path) {
  return path.extension() == ".ply" ? read_ply(path) : read_xyz(path);
}

}  // namespace geowalk
