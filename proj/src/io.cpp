#include "bohm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "bohm/error.hpp"

namespace bohm::io {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "container payloads are written as native little-endian doubles");

void write_container(const fs::path& path, const json& header, std::span<const double> payload) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  json h = header;
  h["count"] = payload.size();
  const std::string line = h.dump();
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw FormatError("short write to " + path.string());
}

Container read_container(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  Container c;
  try {
    c.header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  const auto count = c.header.at("count").get<std::size_t>();
  c.payload.resize(count);
  in.read(reinterpret_cast<char*>(c.payload.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw FormatError(path.string() + ": truncated payload");
  return c;
}

json grid_header(const Grid& grid) {
  std::vector<int> shape(static_cast<std::size_t>(grid.axes()), grid.n());
  std::vector<std::string> axes;
  for (int a = 0; a < grid.particles(); ++a)
    for (int c = 0; c < grid.dims(); ++c)
      axes.push_back("x" + std::to_string(a) + (grid.dims() > 1 ? "_" + std::to_string(c) : ""));
  return json{{"shape", shape},
              {"axes", axes},
              {"boundary", to_string(grid.boundary())},
              {"spin_dims", grid.spec().spin_dims},
              {"extent", {grid.spec().lo, grid.spec().hi}},
              {"particle_count", grid.particles()},
              {"dims_per_particle", grid.dims()}};
}

Grid grid_from_header(const json& h) {
  GridSpec s;
  s.particle_count = h.at("particle_count").get<int>();
  s.dims_per_particle = h.at("dims_per_particle").get<int>();
  s.points_per_axis = h.at("shape").at(0).get<int>();
  s.lo = h.at("extent").at(0).get<double>();
  s.hi = h.at("extent").at(1).get<double>();
  s.boundary = boundary_from_string(h.at("boundary").get<std::string>());
  s.spin_dims = h.at("spin_dims").get<std::vector<int>>();
  s.memory_budget = std::numeric_limits<std::size_t>::max();
  return Grid(s);
}

void write_field(const fs::path& path, const WaveField& psi) {
  json h = grid_header(psi.grid);
  h["format"] = "fld";
  h["kind"] = "wave";
  h["dtype"] = "complex128";
  h["time"] = psi.time;
  std::vector<double> data(2 * psi.amplitudes.size());
  std::memcpy(data.data(), psi.amplitudes.data(), data.size() * sizeof(double));
  write_container(path, h, data);
}

void write_field(const fs::path& path, const ScalarField& f, double time) {
  json h = grid_header(f.grid);
  h["format"] = "fld";
  h["kind"] = "scalar";
  h["dtype"] = "float64";
  h["time"] = time;
  write_container(path, h, f.values);
}

void write_field(const fs::path& path, const VectorField& f, double time) {
  json h = grid_header(f.grid);
  h["format"] = "fld";
  h["kind"] = "vector";
  h["dtype"] = "float64";
  h["components"] = f.components.size();
  h["time"] = time;
  std::vector<double> data;
  data.reserve(f.components.size() * f.grid.points());
  for (const auto& c : f.components) data.insert(data.end(), c.begin(), c.end());
  write_container(path, h, data);
}

WaveField read_wave_field(const fs::path& path) {
  Container c = read_container(path);
  if (c.header.value("kind", "") != "wave") throw FormatError(path.string() + " is not a wave field");
  WaveField psi(grid_from_header(c.header), c.header.at("time").get<double>());
  if (c.payload.size() != 2 * psi.amplitudes.size())
    throw FormatError(path.string() + ": payload size does not match header");
  std::memcpy(static_cast<void*>(psi.amplitudes.data()), c.payload.data(), c.payload.size() * sizeof(double));
  return psi;
}

ScalarField read_scalar_field(const fs::path& path) {
  Container c = read_container(path);
  if (c.header.value("kind", "") != "scalar")
    throw FormatError(path.string() + " is not a scalar field");
  return ScalarField(grid_from_header(c.header), std::move(c.payload));
}

}  // namespace bohm::io
