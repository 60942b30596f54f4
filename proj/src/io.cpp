#include "scenemap/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scenemap {

namespace {

constexpr const char* kObsMagic = "# scenemap-obs v1";
constexpr const char* kGridMagic = "# scenemap-grid v1";

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

}  // namespace

void write_observation_stream(std::ostream& out, const std::vector<WordObservation>& obs) {
  out << kObsMagic << '\n';
  char buf[160];
  for (const WordObservation& o : obs) {
    std::snprintf(buf, sizeof(buf), "%.10g %.17g %.17g %.17g %d\n", o.t, o.pos[0], o.pos[1],
                  o.pos[2], o.word);
    out << buf;
  }
}

void write_observation_stream(const std::string& path, const std::vector<WordObservation>& obs) {
  auto out = open_out(path);
  write_observation_stream(out, obs);
}

std::vector<WordObservation> read_observation_stream(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kObsMagic) {
    throw std::runtime_error("observation stream missing the 'scenemap-obs v1' header");
  }
  std::vector<WordObservation> out;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    WordObservation o;
    std::istringstream row(line);
    if (!(row >> o.t >> o.pos[0] >> o.pos[1] >> o.pos[2] >> o.word)) {
      throw std::runtime_error("malformed observation record at line " + std::to_string(lineno));
    }
    out.push_back(o);
  }
  return out;
}

std::vector<WordObservation> read_observation_stream(const std::string& path) {
  auto in = open_in(path);
  return read_observation_stream(in);
}

void write_label_grid(std::ostream& out, const LabelGrid& grid) {
  out << kGridMagic << '\n';
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d %d %.17g %lld %lld\n", grid.width, grid.height,
                grid.cell_size, static_cast<long long>(grid.origin_i),
                static_cast<long long>(grid.origin_j));
  out << buf;
  for (int32_t row = 0; row < grid.height; ++row) {
    for (int32_t col = 0; col < grid.width; ++col) {
      if (col) out << ' ';
      out << grid.at(col, row);
    }
    out << '\n';
  }
}

void write_label_grid(const std::string& path, const LabelGrid& grid) {
  auto out = open_out(path);
  write_label_grid(out, grid);
}

LabelGrid read_label_grid(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kGridMagic) {
    throw std::runtime_error("label grid missing the 'scenemap-grid v1' header");
  }
  if (!std::getline(in, line)) throw std::runtime_error("label grid missing the dimension line");
  LabelGrid grid;
  {
    std::istringstream header(line);
    long long oi = 0, oj = 0;
    if (!(header >> grid.width >> grid.height >> grid.cell_size)) {
      throw std::runtime_error("malformed label grid dimension line");
    }
    if (header >> oi >> oj) {  // origin is optional; fixtures default to (0, 0)
      grid.origin_i = oi;
      grid.origin_j = oj;
    }
  }
  if (grid.width < 0 || grid.height < 0 || !(grid.cell_size > 0)) {
    throw std::runtime_error("label grid header out of range");
  }
  grid.labels.reserve(static_cast<size_t>(grid.width) * grid.height);
  int32_t v;
  while (in >> v) grid.labels.push_back(v);
  if (grid.labels.size() != static_cast<size_t>(grid.width) * grid.height) {
    throw std::runtime_error("label grid payload size does not match header dimensions");
  }
  return grid;
}

LabelGrid read_label_grid(const std::string& path) {
  auto in = open_in(path);
  return read_label_grid(in);
}

std::string to_pgm_preview(const LabelGrid& grid) {
  std::ostringstream out;
  out << "P2\n" << grid.width << ' ' << grid.height << "\n255\n";
  const int32_t top =
      grid.labels.empty() ? 1 : std::max(1, *std::max_element(grid.labels.begin(), grid.labels.end()));
  for (int32_t row = 0; row < grid.height; ++row) {
    for (int32_t col = 0; col < grid.width; ++col) {
      if (col) out << ' ';
      out << grid.at(col, row) * 255 / top;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace scenemap
