#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

// 8-bit RGBA PNG encode/decode over zlib. Reading accepts non-interlaced
// 8-bit gray, gray+alpha, RGB and RGBA images (all five scanline filters);
// writing emits RGBA, or RGB when `with_alpha` is false. Values are
// rounded to 8 bits on write.
std::vector<unsigned char> encode_png(const ImageBuffer& image, bool with_alpha = true);
ImageBuffer decode_png(const std::vector<unsigned char>& bytes, bool* had_alpha = nullptr);

void write_png(const std::string& path, const ImageBuffer& image, bool with_alpha = true);
ImageBuffer read_png(const std::string& path, bool* had_alpha = nullptr);

std::string base64_encode(const unsigned char* data, std::size_t size);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace splatalign
