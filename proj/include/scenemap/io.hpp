#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "scenemap/core.hpp"

namespace scenemap {

// Observation stream, line-delimited, versioned:
//   # scenemap-obs v1
//   <t> <x> <y> <d> <w>        one decimal-text record per observation
void write_observation_stream(std::ostream& out, const std::vector<WordObservation>& obs);
void write_observation_stream(const std::string& path, const std::vector<WordObservation>& obs);
std::vector<WordObservation> read_observation_stream(std::istream& in);
std::vector<WordObservation> read_observation_stream(const std::string& path);

// World-label / annotation grid fixture, versioned:
//   # scenemap-grid v1
//   <width> <height> <cell_size> [<origin_i> <origin_j>]
//   row-major integer labels, one row per line
void write_label_grid(std::ostream& out, const LabelGrid& grid);
void write_label_grid(const std::string& path, const LabelGrid& grid);
LabelGrid read_label_grid(std::istream& in);
LabelGrid read_label_grid(const std::string& path);

// Portable graymap preview (P2), labels scaled to 0..255 for eyeballing.
std::string to_pgm_preview(const LabelGrid& grid);

std::vector<uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const std::vector<uint8_t>& bytes);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace scenemap
