#pragma once

// Binary container shared by the .fld, .rdm, .trj and .ens formats: one line
// of compact JSON (the header), a newline, then little-endian float64 payload.
// Complex payloads are interleaved re/im.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "bohm/lattice.hpp"

namespace bohm::io {

struct Container {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const double> payload);
Container read_container(const std::filesystem::path& path);

/// Grid description used inside headers.
nlohmann::json grid_header(const Grid& grid);
Grid grid_from_header(const nlohmann::json& header);

void write_field(const std::filesystem::path& path, const WaveField& psi);
void write_field(const std::filesystem::path& path, const ScalarField& f, double time);
void write_field(const std::filesystem::path& path, const VectorField& f, double time);
WaveField read_wave_field(const std::filesystem::path& path);
ScalarField read_scalar_field(const std::filesystem::path& path);

}  // namespace bohm::io
