#include "mf/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mf {

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint8_t>(std::lround((c + 1.0) * 127.5));
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put_f32_le(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

void write_netpbm(const ImageTensor& x, const std::filesystem::path& path) {
  if (x.channels() != 1 && x.channels() != 3) {
    throw std::invalid_argument("write_netpbm: need 1 or 3 channels, got " + x.shape().str());
  }
  std::string buf = (x.channels() == 3 ? "P6\n" : "P5\n") + std::to_string(x.width()) + " " +
                    std::to_string(x.height()) + "\n255\n";
  for (std::size_t y = 0; y < x.height(); ++y)
    for (std::size_t xx = 0; xx < x.width(); ++xx)
      for (std::size_t c = 0; c < x.channels(); ++c)
        buf.push_back(static_cast<char>(to_byte(x.at(c, y, xx))));
  write_text(path, buf);
}

ImageTensor read_netpbm(const std::filesystem::path& path) {
  const std::string raw = read_text(path);
  std::istringstream in(raw);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  if ((magic != "P5" && magic != "P6") || maxv != 255 || w == 0 || h == 0) {
    throw IoError("unsupported netpbm file: " + path.string());
  }
  in.get();
  const std::size_t c = magic == "P6" ? 3 : 1;
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (raw.size() < offset + c * w * h) throw IoError("truncated netpbm file: " + path.string());
  ImageTensor out(c, h, w);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data() + offset);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < w; ++xx)
      for (std::size_t ch = 0; ch < c; ++ch) out.at(ch, y, xx) = *p++ / 127.5 - 1.0;
  return out;
}

void write_mft(const ImageTensor& x, const std::filesystem::path& path) {
  std::string buf = "MFT1 " + std::to_string(x.channels()) + " " + std::to_string(x.height()) +
                    " " + std::to_string(x.width()) + "\n";
  buf.reserve(buf.size() + 4 * x.size());
  for (double v : x.data()) put_f32_le(buf, static_cast<float>(v));
  write_text(path, buf);
}

ImageTensor read_mft(const std::filesystem::path& path) {
  const std::string raw = read_text(path);
  const auto nl = raw.find('\n');
  if (nl == std::string::npos) throw IoError("missing MFT1 header: " + path.string());
  std::istringstream header(raw.substr(0, nl));
  std::string magic;
  std::size_t c = 0, h = 0, w = 0;
  header >> magic >> c >> h >> w;
  if (magic != "MFT1" || c == 0 || h == 0 || w == 0) {
    throw IoError("bad MFT1 header: " + path.string());
  }
  if (raw.size() != nl + 1 + 4 * c * h * w) throw IoError("MFT1 size mismatch: " + path.string());
  std::vector<double> data(c * h * w);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data() + nl + 1);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_f32_le(p + 4 * i);
  return ImageTensor(Shape{c, h, w}, std::move(data));
}

}  // namespace mf
