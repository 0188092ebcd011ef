// SPDX-License-Identifier: Apache-2.0
#include "sirilab/png.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>

#include "sirilab/common.hpp"

namespace sirilab::report {

namespace {

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(char(v >> 24));
  out.push_back(char((v >> 16) & 0xFF));
  out.push_back(char((v >> 8) & 0xFF));
  out.push_back(char(v & 0xFF));
}

void write_chunk(std::ostream& os, const char type[4], const std::string& data) {
  std::string head;
  put_be32(head, std::uint32_t(data.size()));
  os.write(head.data(), 4);
  os.write(type, 4);
  os.write(data.data(), std::streamsize(data.size()));
  std::uint32_t crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
                uInt(data.size()));
  std::string tail;
  put_be32(tail, crc);
  os.write(tail.data(), 4);
}

}  // namespace

void write_png(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
  require(width > 0 && height > 0, "write_png: empty image");
  require(rgb.size() == std::size_t(width) * std::size_t(height) * 3,
          "write_png: buffer size mismatch");

  // Raw scanlines, each prefixed with filter byte 0.
  std::vector<unsigned char> raw;
  raw.reserve(std::size_t(height) * (std::size_t(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const unsigned char* row = rgb.data() + std::size_t(y) * width * 3;
    raw.insert(raw.end(), row, row + std::size_t(width) * 3);
  }
  uLongf comp_size = compressBound(uLong(raw.size()));
  std::vector<unsigned char> comp(comp_size);
  require(compress2(comp.data(), &comp_size, raw.data(), uLong(raw.size()), 6) ==
              Z_OK,
          "write_png: deflate failed");
  comp.resize(comp_size);

  std::ofstream os(path, std::ios::binary);
  require(bool(os), "write_png: cannot open " + path);
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  os.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_be32(ihdr, std::uint32_t(width));
  put_be32(ihdr, std::uint32_t(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  write_chunk(os, "IHDR", ihdr);
  write_chunk(os, "IDAT", std::string(comp.begin(), comp.end()));
  write_chunk(os, "IEND", "");
}

}  // namespace sirilab::report
