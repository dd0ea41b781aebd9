#pragma once

#include <stdexcept>
#include <string>

#include "djrhr/tensor.hpp"

namespace djrhr {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 8-bit PNG codec. Values map as v = byte / 255 on read and
// byte = round(clamp(v,0,1) * 255) on write.
Tensor read_png_rgb(const std::string& path);    // (1,3,H,W)
Tensor read_png_gray(const std::string& path);   // (1,1,H,W)
void write_png_rgb(const std::string& path, const Tensor& img);
void write_png_gray(const std::string& path, const Tensor& img);

}  // namespace djrhr
