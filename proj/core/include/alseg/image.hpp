#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace alseg {

// Label value for pixels excluded from every loss and metric.
inline constexpr std::uint8_t kVoidLabel = 255;

// Dense H x W x C feature image, row-major, float32 (matches the on-disk layout).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, 0.0f) {
    if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("Image: dimensions must be positive");
  }

  float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  float& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

  bool operator==(const Image&) const = default;
};

// Per-pixel class ids (0..C-1 or kVoidLabel), row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint8_t fill = 0) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("LabelMap: dimensions must be positive");
  }

  std::uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }

  bool operator==(const LabelMap&) const = default;
};

// Rectangular window into an Image; does not own the pixels.
struct PatchView {
  const Image* image = nullptr;
  int y0 = 0;
  int x0 = 0;
  int height = 0;
  int width = 0;

  float at(int dy, int dx, int c) const { return image->at(y0 + dy, x0 + dx, c); }
};

struct LabelPatchView {
  const LabelMap* labels = nullptr;
  int y0 = 0;
  int x0 = 0;
  int height = 0;
  int width = 0;

  std::uint8_t at(int dy, int dx) const { return labels->at(y0 + dy, x0 + dx); }
};

}  // namespace alseg
