// Copyright 2026 The geowalk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "geowalk/point_cloud.hpp"

namespace geowalk {

// ASCII PLY with a vertex element carrying x, y, z properties. Extra vertex
// properties are skipped on read. Writers emit 17 significant digits.
Points read_ply(std::istream& in);
void write_ply(std::ostream& out, const Points& points);
Points read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const Points& points);

// Plain "x y z" text, one point per line. Blank lines and '#' comments are skipped.
Points read_xyz(std::istream& in);
void write_xyz(std::ostream& out, const Points& points);
Points read_xyz(const std::filesystem::path& path);
void write_xyz(const std::filesystem::path& path, const Points& points);

/// Dispatches on extension (.ply or anything else as XYZ).
Points read_cloud(const std::filesystem::path& path);

}  // namespace geowalk
