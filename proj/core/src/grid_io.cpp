#include "lsf/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace lsf::io {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "grid binary format assumes a little-endian host");

namespace {

fs::path with_ext(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

}  // namespace

void write_stack(const fs::path& stem, const PsfStack& stack) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  const fs::path bin = with_ext(stem, ".bin");
  json header = {
      {"format", "lsf-grid"},
      {"version", 1},
      {"origin", {stack.spec.origin.x(), stack.spec.origin.y()}},
      {"resolution", stack.spec.resolution},
      {"nx", stack.spec.nx},
      {"ny", stack.spec.ny},
      {"n_theta", stack.spec.n_theta},
      {"timestamp", stack.timestamp},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"layout", "layer-major; row-major within a layer (x fastest)"},
      {"data", bin.filename().string()},
  };
  std::ofstream(with_ext(stem, ".json")) << header.dump(2) << '\n';

  std::ofstream out(bin, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + bin.string());
  for (const auto& layer : stack.layers) {
    const auto v = layer.values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  }
}

void write_grid(const fs::path& stem, const ScalarGrid2D& grid, double timestamp) {
  PsfStack s;
  s.spec = grid.spec();
  s.spec.n_theta = 1;
  s.timestamp = timestamp;
  s.layers = {grid};
  write_stack(stem, s);
}

PsfStack read_stack(const fs::path& stem) {
  const fs::path header_path = with_ext(stem, ".json");
  std::ifstream hin(header_path);
  if (!hin) throw ConfigError("cannot open grid header " + header_path.string());
  json h;
  try {
    h = json::parse(hin);
  } catch (const json::exception& e) {
    throw ConfigError("malformed grid header " + header_path.string() + ": " + e.what());
  }
  if (h.value("format", "") != "lsf-grid" || h.value("dtype", "") != "float64")
    throw ConfigError("unsupported grid header " + header_path.string());

  GridSpec spec;
  spec.origin = {h.at("origin").at(0).get<double>(), h.at("origin").at(1).get<double>()};
  spec.resolution = h.at("resolution").get<double>();
  spec.nx = h.at("nx").get<int>();
  spec.ny = h.at("ny").get<int>();
  spec.n_theta = h.at("n_theta").get<int>();
  spec.validate();

  PsfStack stack(spec, h.value("timestamp", 0.0));
  const fs::path bin = stem.parent_path() / h.at("data").get<std::string>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw ConfigError("cannot open grid data " + bin.string());
  std::vector<double> buf(spec.cell_count());
  for (auto& layer : stack.layers) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
      throw ConfigError("grid data " + bin.string() + " is shorter than its header declares");
    layer = ScalarGrid2D(spec, buf);
  }
  return stack;
}

ScalarGrid2D read_grid(const fs::path& stem) {
  PsfStack s = read_stack(stem);
  if (s.layers.size() != 1) throw ConfigError("expected a single-layer grid at " + stem.string());
  return s.layers.front();
}

}  // namespace lsf::io
