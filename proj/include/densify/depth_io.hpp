#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "densify/geometry.hpp"

namespace densify {

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
    int width = 0, height = 0;
    std::vector<uint8_t> pixels;  // 3 * width * height

    const uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<size_t>(y) * width + x);
    }
};

// Raw depth interchange format (lossless float32):
//   u32 width, u32 height (little-endian), then width*height row-major
//   float32 values. Non-positive or non-finite values are invalid pixels.
DepthMap load_depth_raw(const std::string& path);
void save_depth_raw(const DepthMap& d, const std::string& path);

// 16-bit single-channel PNG with depth = raw / scale; raw 0 is invalid.
DepthMap load_depth_png16(const std::string& path, double scale);
void save_depth_png16(const DepthMap& d, const std::string& path, double scale);

/// Dispatches on extension: ".png" -> png16 with the given scale, else raw.
DepthMap load_depth_auto(const std::string& path, double png_scale);

RgbImage load_image_png(const std::string& path);
void save_image_png(const RgbImage& img, const std::string& path);

}  // namespace densify
