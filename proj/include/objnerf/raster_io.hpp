#pragma once

#include <string>
#include <vector>

#include "objnerf/image.hpp"

namespace objnerf {

// Minimal PNG codec over zlib: 8-bit grayscale (1ch) and RGB (3ch),
// non-interlaced. The encoder always emits filter type 0; the decoder
// understands all five standard filters.
void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);
std::vector<uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_png(const std::vector<uint8_t>& bytes);

// .dpt: magic "DPT1", u32le width, u32le height, then width*height
// little-endian float32, row-major, top-left origin. Bit-exact round trip.
void write_dpt(const std::string& path, const ImageF& img);
ImageF read_dpt(const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t n);

} // namespace objnerf
