#include "pd/field_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace pd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int comps_for_kind(const std::string& kind, int dim) {
  if (kind == "scalar") return 1;
  if (kind == "vector") return dim;
  if (kind == "matrix") return dim * dim;
  throw IoError("unknown field kind '" + kind + "'");
}

}  // namespace

void write_container(const fs::path& dir, const FieldContainer& c) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const Grid& g = *c.grid;

  json manifest;
  manifest["format_version"] = 1;
  manifest["dim"] = g.dim();
  std::vector<int> npts;
  std::vector<double> origin, spacing;
  for (int a = 0; a < g.dim(); ++a) {
    npts.push_back(g.points(a));
    origin.push_back(g.origin()(a));
    spacing.push_back(g.spacing()(a));
  }
  manifest["points_per_axis"] = npts;
  manifest["origin"] = origin;
  manifest["spacing"] = spacing;
  manifest["fields"] = json::array();

  for (const auto& f : c.fields) {
    const std::string file = f.name + ".bin";
    manifest["fields"].push_back({{"name", f.name}, {"kind", f.kind}, {"file", file}});
    const Vector& v = f.values.values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i))) {
        throw IoError("field '" + f.name + "' contains non-finite value at flat index " +
                      std::to_string(i));
      }
    }
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw IoError("cannot open " + (dir / file).string() + " for writing");
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw IoError("write failed for " + (dir / file).string());
  }

  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot write manifest in " + dir.string());
  mf << manifest.dump(2) << "\n";
}

FieldContainer read_container(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  if (!manifest.contains("format_version") || manifest["format_version"].get<int>() != 1) {
    throw IoError("unsupported manifest format_version in " + dir.string());
  }

  const int dim = manifest.at("dim").get<int>();
  auto npts = manifest.at("points_per_axis").get<std::vector<int>>();
  auto origin = manifest.at("origin").get<std::vector<double>>();
  auto spacing = manifest.at("spacing").get<std::vector<double>>();
  Vector o(dim), h(dim);
  for (int a = 0; a < dim; ++a) {
    o(a) = origin.at(a);
    h(a) = spacing.at(a);
  }

  FieldContainer c;
  try {
    c.grid = std::make_shared<Grid>(dim, npts, o, h);
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid grid in manifest: ") + e.what());
  }

  for (const auto& fj : manifest.at("fields")) {
    FieldEntry e;
    e.name = fj.at("name").get<std::string>();
    e.kind = fj.at("kind").get<std::string>();
    const int comps = comps_for_kind(e.kind, dim);
    e.values = Field(*c.grid, comps);

    const fs::path file = dir / fj.at("file").get<std::string>();
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + file.string());
    const std::int64_t bytes = static_cast<std::int64_t>(in.tellg());
    const std::int64_t expected =
        c.grid->num_nodes() * comps * static_cast<std::int64_t>(sizeof(double));
    if (bytes != expected) {
      throw IoError("size mismatch for field '" + e.name + "': payload is " +
                    std::to_string(bytes) + " bytes, manifest implies " + std::to_string(expected));
    }
    in.seekg(0);
    in.read(reinterpret_cast<char*>(e.values.values().data()), expected);
    if (!in) throw IoError("read failed for " + file.string());
    for (Eigen::Index i = 0; i < e.values.values().size(); ++i) {
      if (!std::isfinite(e.values.values()(i))) {
        throw IoError("field '" + e.name + "' contains non-finite value");
      }
    }
    c.fields.push_back(std::move(e));
  }
  return c;
}

}  // namespace pd
