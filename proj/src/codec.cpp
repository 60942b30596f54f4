#include "scenemap/codec.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

namespace scenemap {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'M', '1'};
constexpr size_t kMetaBodyLen = 43;  // fixed fields after the length word

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int s = 0; s < 32; s += 8) b.push_back(static_cast<uint8_t>(v >> s));
}

void put_i64(std::vector<uint8_t>& b, int64_t v) {
  for (int s = 0; s < 64; s += 8) b.push_back(static_cast<uint8_t>(static_cast<uint64_t>(v) >> s));
}

void put_f64(std::vector<uint8_t>& b, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int s = 0; s < 64; s += 8) b.push_back(static_cast<uint8_t>(bits >> s));
}

class Reader {
 public:
  Reader(const std::vector<uint8_t>& data, const char* what) : data_(data), what_(what) {}

  size_t offset() const { return pos_; }

  void need(size_t n) const {
    if (pos_ + n > data_.size()) {
      throw CodecError(std::string(what_) + " truncated at byte offset " + std::to_string(pos_));
    }
  }

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<uint32_t>(data_[pos_++]) << s;
    return v;
  }
  int64_t i64() {
    need(8);
    uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= static_cast<uint64_t>(data_[pos_++]) << s;
    return static_cast<int64_t>(v);
  }
  double f64() {
    uint64_t bits = static_cast<uint64_t>(i64());
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  uint32_t u32_be() {
    need(4);
    uint32_t v = 0;
    for (int s = 24; s >= 0; s -= 8) v |= static_cast<uint32_t>(data_[pos_++]) << s;
    return v;
  }
  const uint8_t* bytes(size_t n) {
    need(n);
    const uint8_t* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  const std::vector<uint8_t>& data_;
  const char* what_;
  size_t pos_ = 0;
};

void png_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& payload) {
  auto put_be = [&](uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
  };
  put_be(static_cast<uint32_t>(payload.size()));
  const size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uint32_t crc = static_cast<uint32_t>(
      crc32(0, out.data() + type_at, static_cast<uInt>(4 + payload.size())));
  put_be(crc);
}

std::vector<uint8_t> deflate_bytes(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> out(bound);
  // level 9, default strategy: pinned so sizes reproduce across runs
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw CodecError("deflate failed");
  }
  out.resize(bound);
  return out;
}

std::vector<uint8_t> inflate_bytes(const uint8_t* data, size_t len, size_t expected) {
  std::vector<uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, data, static_cast<uLong>(len));
  if (rc != Z_OK || out_len != expected) {
    throw CodecError("PNG image data does not inflate to the expected scanline size");
  }
  return out;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

std::vector<uint8_t> encode_png(const SceneMap& map, int bit_depth) {
  const size_t bpp = bit_depth == 16 ? 2 : 1;
  const size_t stride = static_cast<size_t>(map.width) * bpp;
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(map.height) * (stride + 1));
  for (int32_t row = 0; row < map.height; ++row) {
    raw.push_back(0);  // filter type None, pinned
    for (int32_t col = 0; col < map.width; ++col) {
      const uint32_t v = static_cast<uint32_t>(map.at(col, row));
      if (bit_depth == 16) raw.push_back(static_cast<uint8_t>(v >> 8));  // PNG samples are big-endian
      raw.push_back(static_cast<uint8_t>(v));
    }
  }

  std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  auto put_be = [&](uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) ihdr.push_back(static_cast<uint8_t>(v >> s));
  };
  put_be(static_cast<uint32_t>(map.width));
  put_be(static_cast<uint32_t>(map.height));
  ihdr.push_back(static_cast<uint8_t>(bit_depth));
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  png_chunk(png, "IHDR", ihdr);
  png_chunk(png, "IDAT", deflate_bytes(raw));
  png_chunk(png, "IEND", {});
  return png;
}

}  // namespace

EncodedMap encode_map(const SceneMap& map) {
  if (map.width < 0 || map.height < 0) throw CodecError("negative map dimensions");
  const bool empty = map.width == 0 || map.height == 0;
  const int bit_depth = empty ? 8 : (map.palette.size() <= 255 ? 8 : 16);
  if (map.palette.size() > 65535) throw CodecError("palette exceeds 16-bit label capacity");

  EncodedMap enc;
  enc.meta.insert(enc.meta.end(), kMagic, kMagic + 4);
  put_u32(enc.meta, static_cast<uint32_t>(kMetaBodyLen + 4 * map.palette.size()));
  put_i64(enc.meta, map.origin_i);
  put_i64(enc.meta, map.origin_j);
  put_u32(enc.meta, static_cast<uint32_t>(map.width));
  put_u32(enc.meta, static_cast<uint32_t>(map.height));
  put_f64(enc.meta, map.cell_size_x);
  put_f64(enc.meta, map.cell_size_y);
  enc.meta.push_back(static_cast<uint8_t>(bit_depth));
  put_u16(enc.meta, static_cast<uint16_t>(map.palette.size()));
  for (int32_t original : map.palette) put_u32(enc.meta, static_cast<uint32_t>(original));

  if (!empty) enc.image = encode_png(map, bit_depth);
  return enc;
}

SceneMap decode_map(const EncodedMap& enc) {
  Reader meta(enc.meta, "meta sidecar");
  const uint8_t* magic = meta.bytes(4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CodecError("bad meta magic at byte offset 0");
  const uint32_t body_len = meta.u32();

  SceneMap map;
  map.origin_i = meta.i64();
  map.origin_j = meta.i64();
  map.width = static_cast<int32_t>(meta.u32());
  map.height = static_cast<int32_t>(meta.u32());
  map.cell_size_x = meta.f64();
  map.cell_size_y = meta.f64();
  const int bit_depth = meta.u8();
  const uint16_t palette_count = meta.u16();
  if (body_len != kMetaBodyLen + 4u * palette_count) {
    throw CodecError("meta length field disagrees with palette count");
  }
  for (uint16_t p = 0; p < palette_count; ++p) map.palette.push_back(static_cast<int32_t>(meta.u32()));

  if (map.width == 0 || map.height == 0) {
    if (!enc.image.empty()) throw CodecError("empty map carries image bytes");
    map.width = map.height = 0;
    return map;
  }
  if (bit_depth != 8 && bit_depth != 16) throw CodecError("unsupported bit depth " + std::to_string(bit_depth));

  Reader png(enc.image, "PNG container");
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(png.bytes(8), sig, 8) != 0) throw CodecError("bad PNG signature at byte offset 0");

  uint32_t width = 0, height = 0;
  std::vector<uint8_t> idat;
  bool seen_iend = false;
  while (!seen_iend) {
    const size_t chunk_at = png.offset();
    const uint32_t len = png.u32_be();
    const uint8_t* type_and_data = png.bytes(4 + len);
    const uint32_t want_crc = png.u32_be();
    const uint32_t got_crc =
        static_cast<uint32_t>(crc32(0, type_and_data, static_cast<uInt>(4 + len)));
    if (want_crc != got_crc) {
      throw CodecError("PNG chunk CRC mismatch at byte offset " + std::to_string(chunk_at));
    }
    const std::string type(reinterpret_cast<const char*>(type_and_data), 4);
    const uint8_t* data = type_and_data + 4;
    if (type == "IHDR") {
      if (len != 13) throw CodecError("bad IHDR length at byte offset " + std::to_string(chunk_at));
      auto be = [&](size_t at) {
        return (static_cast<uint32_t>(data[at]) << 24) | (data[at + 1] << 16) | (data[at + 2] << 8) |
               data[at + 3];
      };
      width = be(0);
      height = be(4);
      if (data[8] != bit_depth) throw CodecError("PNG bit depth disagrees with meta sidecar");
      if (data[9] != 0 || data[10] != 0 || data[11] != 0 || data[12] != 0) {
        throw CodecError("unsupported PNG layout (expect non-interlaced grayscale)");
      }
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      seen_iend = true;
    }
  }
  if (width != static_cast<uint32_t>(map.width) || height != static_cast<uint32_t>(map.height)) {
    throw CodecError("PNG dimensions disagree with meta sidecar");
  }

  const size_t bpp = bit_depth == 16 ? 2 : 1;
  const size_t stride = static_cast<size_t>(width) * bpp;
  std::vector<uint8_t> raw = inflate_bytes(idat.data(), idat.size(), height * (stride + 1));

  // unfilter (encoder emits None, but all five standard filters are accepted)
  std::vector<uint8_t> prev(stride, 0);
  map.labels.assign(static_cast<size_t>(map.width) * map.height, 0);
  for (uint32_t row = 0; row < height; ++row) {
    uint8_t* line = raw.data() + row * (stride + 1);
    const uint8_t filter = line[0];
    uint8_t* cur = line + 1;
    for (size_t x = 0; x < stride; ++x) {
      const int a = x >= bpp ? cur[x - bpp] : 0;
      const int b = prev[x];
      const int c = x >= bpp ? prev[x - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: cur[x] = static_cast<uint8_t>(cur[x] + a); break;
        case 2: cur[x] = static_cast<uint8_t>(cur[x] + b); break;
        case 3: cur[x] = static_cast<uint8_t>(cur[x] + (a + b) / 2); break;
        case 4: cur[x] = static_cast<uint8_t>(cur[x] + paeth(a, b, c)); break;
        default:
          throw CodecError("unknown PNG filter type " + std::to_string(filter) + " in row " +
                           std::to_string(row));
      }
    }
    std::memcpy(prev.data(), cur, stride);
    for (uint32_t col = 0; col < width; ++col) {
      const uint32_t v = bit_depth == 16
                             ? (static_cast<uint32_t>(cur[col * 2]) << 8) | cur[col * 2 + 1]
                             : cur[col];
      if (v > map.palette.size()) {
        throw CodecError("pixel value " + std::to_string(v) + " has no palette entry");
      }
      map.labels[static_cast<size_t>(row) * width + col] = static_cast<int32_t>(v);
    }
  }
  return map;
}

size_t encoded_size(const SceneMap& map) {
  const EncodedMap enc = encode_map(map);
  return enc.image.size() + enc.meta.size();
}

std::vector<uint8_t> to_wire(const EncodedMap& enc) {
  std::vector<uint8_t> out = enc.meta;
  put_u32(out, static_cast<uint32_t>(enc.image.size()));
  out.insert(out.end(), enc.image.begin(), enc.image.end());
  return out;
}

EncodedMap from_wire(const std::vector<uint8_t>& bytes) {
  Reader r(bytes, "wire record");
  const uint8_t* magic = r.bytes(4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CodecError("bad wire magic at byte offset 0");
  const uint32_t body_len = r.u32();
  r.bytes(body_len);  // bounds check the meta body
  EncodedMap enc;
  enc.meta.assign(bytes.begin(), bytes.begin() + static_cast<long>(r.offset()));
  const uint32_t image_len = r.u32();
  const uint8_t* img = r.bytes(image_len);
  enc.image.assign(img, img + image_len);
  return enc;
}

}  // namespace scenemap
