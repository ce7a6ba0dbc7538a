#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mf/reference.hpp"

namespace mf::reference {

ImageTensor conv2d(const ImageTensor& input, const ConvKernel& k) {
  k.validate();
  if (input.channels() != k.in_channels) throw std::invalid_argument("conv2d: channel mismatch");
  const auto H = static_cast<long>(input.height());
  const auto W = static_cast<long>(input.width());
  const auto c = static_cast<long>(k.size / 2);
  const auto d = static_cast<long>(k.dilation);
  ImageTensor out(k.out_channels, input.height(), input.width());
  for (std::size_t o = 0; o < k.out_channels; ++o)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        double acc = k.bias[o];
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (std::size_t ky = 0; ky < k.size; ++ky)
            for (std::size_t kx = 0; kx < k.size; ++kx) {
              const long sy = y - d * (static_cast<long>(ky) - c);
              const long sx = x - d * (static_cast<long>(kx) - c);
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              acc += input.at(i, sy, sx) * k.w(o, i, ky, kx);
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

ImageTensor resample(const ImageTensor& x, ResampleMethod method, std::size_t out_height,
                     std::size_t out_width) {
  if (out_height == 0 || out_width == 0) throw std::invalid_argument("resample: degenerate size");
  if (out_height == x.height() && out_width == x.width()) return x;
  const bool cubic = method != ResampleMethod::bilinear;
  const long H = static_cast<long>(x.height()), W = static_cast<long>(x.width());
  const double sy_scale = static_cast<double>(H) / out_height;
  const double sx_scale = static_cast<double>(W) / out_width;
  auto weight = [cubic](double dist) {
    if (cubic) return catmull_rom_weight(dist);
    return std::max(0.0, 1.0 - std::abs(dist));
  };
  const long reach = cubic ? 2 : 1;
  ImageTensor out(x.channels(), out_height, out_width);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t oy = 0; oy < out_height; ++oy)
      for (std::size_t ox = 0; ox < out_width; ++ox) {
        const double sy = (oy + 0.5) * sy_scale - 0.5;
        const double sx = (ox + 0.5) * sx_scale - 0.5;
        const long by = static_cast<long>(std::floor(sy));
        const long bx = static_cast<long>(std::floor(sx));
        double acc = 0.0;
        for (long iy = by - reach + 1; iy <= by + reach; ++iy)
          for (long ix = bx - reach + 1; ix <= bx + reach; ++ix) {
            const double w = weight(sy - iy) * weight(sx - ix);
            acc += w * x.at(c, std::clamp(iy, 0L, H - 1), std::clamp(ix, 0L, W - 1));
          }
        out.at(c, oy, ox) = acc;
      }
  if (method == ResampleMethod::bicubic_gaussian) {
    const auto g = gaussian_kernel(5, 1.0);
    return filter2d_clamped(out, g, 5);
  }
  if (method == ResampleMethod::bicubic_edge) {
    const auto e = sharpen_kernel();
    return filter2d_clamped(out, e, 3);
  }
  return out;
}

ImageTensor mean_pool(const ImageTensor& x, std::size_t factor) {
  if (factor == 0 || x.height() % factor || x.width() % factor) {
    throw std::invalid_argument("mean_pool: dimensions not divisible");
  }
  ImageTensor out(x.channels(), x.height() / factor, x.width() / factor);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t y = 0; y < x.height(); ++y)
      for (std::size_t xx = 0; xx < x.width(); ++xx)
        out.at(c, y / factor, xx / factor) += x.at(c, y, xx);
  out *= 1.0 / static_cast<double>(factor * factor);
  return out;
}

}  // namespace mf::reference
