#pragma once

#include <string>

#include "sim2real/image.hpp"

namespace sim2real {

enum class PngMode {
  kImage,       // 8-bit gray or RGB only
  kInstanceIds  // additionally accepts 16-bit gray
};

ImageBuffer LoadPng(const std::string& path, PngMode mode = PngMode::kImage);

struct PngInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
};

// Reads only the header.
PngInfo ReadPngInfo(const std::string& path);

// Writes 8-bit (values rounded and clamped to [0,255]) or 16-bit gray
// (values rounded and clamped to [0,65535]).
void SavePng(const ImageBuffer& img, const std::string& path, int bit_depth = 8);

}  // namespace sim2real
