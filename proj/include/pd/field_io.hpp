#pragma once

// Field container format: a directory holding manifest.json plus one raw
// little-endian float64 binary per field (node-major, last axis fastest,
// components contiguous per node, matrix components row-major).

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pd/grid.hpp"

namespace pd {

struct FieldEntry {
  std::string name;
  std::string kind;  // "scalar" | "vector" | "matrix"
  Field values;      // comps derived from kind
};

struct FieldContainer {
  std::shared_ptr<Grid> grid;
  std::vector<FieldEntry> fields;

  const FieldEntry* find(const std::string& name) const {
    for (const auto& f : fields) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
};

void write_container(const std::filesystem::path& dir, const FieldContainer& c);
FieldContainer read_container(const std::filesystem::path& dir);

}  // namespace pd
