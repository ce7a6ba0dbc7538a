#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mf/tensor.hpp"

namespace mf {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary PPM (3 channels) or PGM (1 channel). Values in [-1, 1] map affinely
// onto [0, 255]; out-of-range values are clamped.
void write_netpbm(const ImageTensor& x, const std::filesystem::path& path);
ImageTensor read_netpbm(const std::filesystem::path& path);

std::uint8_t to_byte(double v);

// Raw tensor dump: ASCII header "MFT1 c h w\n" followed by c*h*w
// little-endian float32 values in channel-major row-major order.
void write_mft(const ImageTensor& x, const std::filesystem::path& path);
ImageTensor read_mft(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

// Little-endian float32 helpers shared by the tensor and weight formats.
void put_f32_le(std::string& out, float v);
float get_f32_le(const unsigned char* p);

}  // namespace mf
