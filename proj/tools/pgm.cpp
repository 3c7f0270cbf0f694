#include "pgm.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace lsf::tools {

namespace {

std::string token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

int number(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = token(in);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw ConfigError(path.string() + ": bad PGM header field '" + tok + "'");
  }
}

}  // namespace

ScalarGrid2D read_pgm_occupancy(const std::filesystem::path& path, const GridSpec& spec_template, double threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open occupancy image " + path.string());
  const std::string magic = token(in);
  if (magic != "P2" && magic != "P5") throw ConfigError(path.string() + ": not a PGM file (P2/P5)");
  const int w = number(in, path);
  const int h = number(in, path);
  const int maxval = number(in, path);
  if (w < 3 || h < 3 || maxval <= 0 || maxval > 65535) throw ConfigError(path.string() + ": unsupported PGM geometry");

  std::vector<int> px(static_cast<std::size_t>(w) * h);
  if (magic == "P2") {
    for (int& v : px) v = number(in, path);
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(px.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw ConfigError(path.string() + ": truncated PGM data");
    for (std::size_t k = 0; k < px.size(); ++k)
      px[k] = bytes == 1 ? raw[k] : (raw[2 * k] << 8 | raw[2 * k + 1]);
  }

  GridSpec spec = spec_template;
  spec.nx = w;
  spec.ny = h;
  spec.validate();
  ScalarGrid2D occ(spec, 0.0);
  for (int row = 0; row < h; ++row)
    for (int i = 0; i < w; ++i)
      if (px[static_cast<std::size_t>(row) * w + i] < threshold * maxval) occ(i, h - 1 - row) = 1.0;
  return occ;
}

}  // namespace lsf::tools
