#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenemap/core.hpp"

namespace scenemap {

// Wire format of a transmitted map: a losslessly compressed PNG whose pixel
// values are the compacted labels (0 = unexplored), plus a binary meta
// sidecar (origin, cell size, palette) so the receiver can georeference it.
// Both parts count toward the byte cost.
struct EncodedMap {
  std::vector<uint8_t> image;  // PNG container, 8- or 16-bit grayscale
  std::vector<uint8_t> meta;   // length-prefixed little-endian record
};

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic: compression level and filtering are pinned.
EncodedMap encode_map(const SceneMap& map);

// Exact inverse of encode_map; throws CodecError with offset diagnostics on
// corrupt input.
SceneMap decode_map(const EncodedMap& enc);

size_t encoded_size(const SceneMap& map);

// single-file form used on disk: meta record followed by the PNG bytes
std::vector<uint8_t> to_wire(const EncodedMap& enc);
EncodedMap from_wire(const std::vector<uint8_t>& bytes);

}  // namespace scenemap
