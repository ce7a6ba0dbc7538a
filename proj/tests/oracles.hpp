#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numeric kernels.

#include <cmath>
#include <cstddef>
#include <vector>

#include "mf/tensor.hpp"
#include "mf/tensorops.hpp"

namespace oracle {

// out(c_o, p) = b + sum_{c_i} sum_{(s,t)} in(c_i, p - delta (s,t)) k(c_o, c_i, s, t),
// taps (s,t) centred on the kernel, zero outside the image.
inline mf::ImageTensor direct_conv(const mf::ImageTensor& in, const mf::ConvKernel& k) {
  const long H = static_cast<long>(in.height()), W = static_cast<long>(in.width());
  const long r = static_cast<long>(k.size), c = r / 2, d = static_cast<long>(k.dilation);
  mf::ImageTensor out(k.out_channels, in.height(), in.width());
  for (std::size_t o = 0; o < k.out_channels; ++o)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        double acc = k.bias[o];
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (long s = -c; s <= c; ++s)
            for (long t = -c; t <= c; ++t) {
              const long sy = y - d * s, sx = x - d * t;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              acc += in.at(i, sy, sx) * k.weights[((o * k.in_channels + i) * k.size + (s + c)) * k.size + (t + c)];
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

// Bilinear at a single output coordinate, align-corners=false, edge clamp.
inline double bilinear_at(const mf::ImageTensor& x, std::size_t c, std::size_t oy, std::size_t ox,
                          std::size_t out_h, std::size_t out_w) {
  auto axis = [](double dst, std::size_t in, std::size_t out, long& i0, long& i1, double& f) {
    double src = (dst + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    const double fl = std::floor(src);
    f = src - fl;
    auto clamp = [in](long v) { return v < 0 ? 0 : (v >= static_cast<long>(in) ? static_cast<long>(in) - 1 : v); };
    i0 = clamp(static_cast<long>(fl));
    i1 = clamp(static_cast<long>(fl) + 1);
  };
  long y0, y1, x0, x1;
  double fy, fx;
  axis(static_cast<double>(oy), x.height(), out_h, y0, y1, fy);
  axis(static_cast<double>(ox), x.width(), out_w, x0, x1, fx);
  const double top = (1 - fx) * x.at(c, y0, x0) + fx * x.at(c, y0, x1);
  const double bot = (1 - fx) * x.at(c, y1, x0) + fx * x.at(c, y1, x1);
  return (1 - fy) * top + fy * bot;
}

// E[x0 | xt] for scalar x0 ~ N(mu, s2), xt = sqrt(ab) x0 + sqrt(1-ab) eps, by
// trapezoidal quadrature over x0.
inline double posterior_mean_quadrature(double xt, double ab, double mu, double s2) {
  const double sd = std::sqrt(s2);
  const int n = 20001;
  const double lo = mu - 12 * sd, hi = mu + 12 * sd, h = (hi - lo) / (n - 1);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    const double x0 = lo + i * h;
    const double prior = std::exp(-0.5 * (x0 - mu) * (x0 - mu) / s2);
    const double r = xt - std::sqrt(ab) * x0;
    const double lik = std::exp(-0.5 * r * r / (1 - ab));
    const double wgt = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    num += wgt * x0 * prior * lik;
    den += wgt * prior * lik;
  }
  return num / den;
}

// Naive O(N^4) DFT power |X(u,v)|^2 for one channel.
inline std::vector<double> dft_power(const mf::ImageTensor& x, std::size_t c) {
  const std::size_t H = x.height(), W = x.width();
  std::vector<double> p(H * W);
  for (std::size_t u = 0; u < H; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      double re = 0, im = 0;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          const double a = -2 * M_PI * (static_cast<double>(u * y) / H + static_cast<double>(v * xx) / W);
          re += x.at(c, y, xx) * std::cos(a);
          im += x.at(c, y, xx) * std::sin(a);
        }
      p[u * W + v] = re * re + im * im;
    }
  return p;
}

}  // namespace oracle
