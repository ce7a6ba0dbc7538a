#include "mf/tensorops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mf {

ConvKernel ConvKernel::zeros(std::size_t out_channels, std::size_t in_channels, std::size_t size) {
  ConvKernel k;
  k.out_channels = out_channels;
  k.in_channels = in_channels;
  k.size = size;
  k.weights.assign(out_channels * in_channels * size * size, 0.0);
  k.bias.assign(out_channels, 0.0);
  k.validate();
  return k;
}

void ConvKernel::validate() const {
  if (out_channels == 0 || in_channels == 0) {
    throw std::invalid_argument("ConvKernel: channel counts must be positive");
  }
  if (size == 0 || size % 2 == 0) throw std::invalid_argument("ConvKernel: size must be odd");
  if (dilation == 0) throw std::invalid_argument("ConvKernel: dilation must be >= 1");
  if (weights.size() != out_channels * in_channels * size * size || bias.size() != out_channels) {
    throw std::invalid_argument("ConvKernel: weight/bias length mismatch");
  }
}

namespace {

// Valid output range [lo, hi) along one axis for tap offset `off` (the input
// index is p - off).
inline void tap_range(std::ptrdiff_t off, std::ptrdiff_t n, std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
  lo = std::max<std::ptrdiff_t>(0, off);
  hi = std::min<std::ptrdiff_t>(n, n + off);
}

}  // namespace

ImageTensor conv2d(const ImageTensor& input, const ConvKernel& k) {
  k.validate();
  if (input.channels() != k.in_channels) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(input.channels()) +
                                " channels, kernel expects " + std::to_string(k.in_channels));
  }
  const auto H = static_cast<std::ptrdiff_t>(input.height());
  const auto W = static_cast<std::ptrdiff_t>(input.width());
  const auto r = static_cast<std::ptrdiff_t>(k.size);
  const auto c = r / 2;
  const auto d = static_cast<std::ptrdiff_t>(k.dilation);
  ImageTensor out(k.out_channels, input.height(), input.width());
  const double* in = input.data().data();
  double* o_ptr = out.data().data();
  const auto OC = static_cast<std::ptrdiff_t>(k.out_channels);
  const auto IC = static_cast<std::ptrdiff_t>(k.in_channels);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t o = 0; o < OC; ++o) {
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      double* row = o_ptr + (o * H + y) * W;
      for (std::ptrdiff_t x = 0; x < W; ++x) row[x] = k.bias[o];
      for (std::ptrdiff_t i = 0; i < IC; ++i) {
        const double* plane = in + i * H * W;
        for (std::ptrdiff_t ky = 0; ky < r; ++ky) {
          const std::ptrdiff_t sy = y - d * (ky - c);
          if (sy < 0 || sy >= H) continue;
          const double* src_row = plane + sy * W;
          for (std::ptrdiff_t kx = 0; kx < r; ++kx) {
            const double wv = k.weights[((o * IC + i) * r + ky) * r + kx];
            const std::ptrdiff_t off = d * (kx - c);
            std::ptrdiff_t lo, hi;
            tap_range(off, W, lo, hi);
            for (std::ptrdiff_t x = lo; x < hi; ++x) row[x] += wv * src_row[x - off];
          }
        }
      }
    }
  }
  return out;
}

ImageTensor conv2d_backward_input(const ImageTensor& grad_out, const ConvKernel& k,
                                  std::size_t in_channels) {
  k.validate();
  if (grad_out.channels() != k.out_channels || in_channels != k.in_channels) {
    throw std::invalid_argument("conv2d_backward_input: channel mismatch");
  }
  const auto H = static_cast<std::ptrdiff_t>(grad_out.height());
  const auto W = static_cast<std::ptrdiff_t>(grad_out.width());
  const auto r = static_cast<std::ptrdiff_t>(k.size);
  const auto c = r / 2;
  const auto d = static_cast<std::ptrdiff_t>(k.dilation);
  const auto OC = static_cast<std::ptrdiff_t>(k.out_channels);
  const auto IC = static_cast<std::ptrdiff_t>(k.in_channels);
  ImageTensor gin(k.in_channels, grad_out.height(), grad_out.width());
  const double* go = grad_out.data().data();
  double* gi = gin.data().data();

  // gin(s) = sum_t gout(s + d t) k(t)
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t i = 0; i < IC; ++i) {
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      double* row = gi + (i * H + y) * W;
      for (std::ptrdiff_t o = 0; o < OC; ++o) {
        const double* plane = go + o * H * W;
        for (std::ptrdiff_t ky = 0; ky < r; ++ky) {
          const std::ptrdiff_t py = y + d * (ky - c);
          if (py < 0 || py >= H) continue;
          const double* src_row = plane + py * W;
          for (std::ptrdiff_t kx = 0; kx < r; ++kx) {
            const double wv = k.weights[((o * IC + i) * r + ky) * r + kx];
            const std::ptrdiff_t off = -d * (kx - c);
            std::ptrdiff_t lo, hi;
            tap_range(off, W, lo, hi);
            for (std::ptrdiff_t x = lo; x < hi; ++x) row[x] += wv * src_row[x - off];
          }
        }
      }
    }
  }
  return gin;
}

void conv2d_backward_params(const ImageTensor& input, const ImageTensor& grad_out,
                            const ConvKernel& k, std::span<double> grad_weights,
                            std::span<double> grad_bias) {
  k.validate();
  if (input.channels() != k.in_channels || grad_out.channels() != k.out_channels ||
      input.height() != grad_out.height() || input.width() != grad_out.width()) {
    throw std::invalid_argument("conv2d_backward_params: shape mismatch");
  }
  if (grad_weights.size() != k.weights.size() || grad_bias.size() != k.bias.size()) {
    throw std::invalid_argument("conv2d_backward_params: gradient buffer size mismatch");
  }
  const auto H = static_cast<std::ptrdiff_t>(input.height());
  const auto W = static_cast<std::ptrdiff_t>(input.width());
  const auto r = static_cast<std::ptrdiff_t>(k.size);
  const auto c = r / 2;
  const auto d = static_cast<std::ptrdiff_t>(k.dilation);
  const auto OC = static_cast<std::ptrdiff_t>(k.out_channels);
  const auto IC = static_cast<std::ptrdiff_t>(k.in_channels);
  const double* in = input.data().data();
  const double* go = grad_out.data().data();

  for (std::ptrdiff_t o = 0; o < OC; ++o) {
    double acc = 0.0;
    for (std::ptrdiff_t p = 0; p < H * W; ++p) acc += go[o * H * W + p];
    grad_bias[o] += acc;
  }

  // dk(t) = sum_p gout(p) in(p - d t)
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t o = 0; o < OC; ++o) {
    for (std::ptrdiff_t i = 0; i < IC; ++i) {
      const double* g = go + o * H * W;
      const double* x = in + i * H * W;
      for (std::ptrdiff_t ky = 0; ky < r; ++ky) {
        const std::ptrdiff_t offy = d * (ky - c);
        std::ptrdiff_t ylo, yhi;
        tap_range(offy, H, ylo, yhi);
        for (std::ptrdiff_t kx = 0; kx < r; ++kx) {
          const std::ptrdiff_t offx = d * (kx - c);
          std::ptrdiff_t xlo, xhi;
          tap_range(offx, W, xlo, xhi);
          double acc = 0.0;
          for (std::ptrdiff_t y = ylo; y < yhi; ++y) {
            const double* grow = g + y * W;
            const double* xrow = x + (y - offy) * W;
            for (std::ptrdiff_t xx = xlo; xx < xhi; ++xx) acc += grow[xx] * xrow[xx - offx];
          }
          grad_weights[((o * IC + i) * r + ky) * r + kx] += acc;
        }
      }
    }
  }
}

ConvKernel dilate_kernel(ConvKernel k, std::size_t delta) {
  if (delta == 0) throw std::invalid_argument("dilate_kernel: delta must be >= 1");
  k.dilation = delta;
  return k;
}

ConvKernel zero_stuff(const ConvKernel& k) {
  k.validate();
  ConvKernel out = ConvKernel::zeros(k.out_channels, k.in_channels, k.receptive_field());
  out.bias = k.bias;
  for (std::size_t o = 0; o < k.out_channels; ++o)
    for (std::size_t i = 0; i < k.in_channels; ++i)
      for (std::size_t ky = 0; ky < k.size; ++ky)
        for (std::size_t kx = 0; kx < k.size; ++kx)
          out.w(o, i, ky * k.dilation, kx * k.dilation) = k.w(o, i, ky, kx);
  return out;
}

std::string to_string(ResampleMethod m) {
  switch (m) {
    case ResampleMethod::bilinear: return "bilinear";
    case ResampleMethod::bicubic: return "bicubic";
    case ResampleMethod::bicubic_gaussian: return "bicubic_gaussian";
    case ResampleMethod::bicubic_edge: return "bicubic_edge";
  }
  return "?";
}

ResampleMethod parse_resample_method(const std::string& name) {
  if (name == "bilinear" || name == "A") return ResampleMethod::bilinear;
  if (name == "bicubic" || name == "B") return ResampleMethod::bicubic;
  if (name == "bicubic_gaussian" || name == "C") return ResampleMethod::bicubic_gaussian;
  if (name == "bicubic_edge" || name == "D") return ResampleMethod::bicubic_edge;
  throw std::invalid_argument("unknown upsampler '" + name + "'");
}

char config_letter(ResampleMethod m) {
  switch (m) {
    case ResampleMethod::bilinear: return 'A';
    case ResampleMethod::bicubic: return 'B';
    case ResampleMethod::bicubic_gaussian: return 'C';
    case ResampleMethod::bicubic_edge: return 'D';
  }
  return '?';
}

double catmull_rom_weight(double d) {
  constexpr double a = -0.5;
  d = std::abs(d);
  if (d <= 1.0) return ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0;
  if (d < 2.0) return ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a;
  return 0.0;
}

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  if (size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd");
  const auto c = static_cast<double>(size / 2);
  std::vector<double> k(size * size);
  double sum = 0.0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = y - c, dx = x - c;
      k[y * size + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      sum += k[y * size + x];
    }
  for (auto& v : k) v /= sum;
  return k;
}

std::vector<double> sharpen_kernel() { return {0, -1, 0, -1, 5, -1, 0, -1, 0}; }

ImageTensor filter2d_clamped(const ImageTensor& x, std::span<const double> kernel,
                             std::size_t size) {
  if (size % 2 == 0 || kernel.size() != size * size) {
    throw std::invalid_argument("filter2d_clamped: kernel must be odd and square");
  }
  const auto H = static_cast<std::ptrdiff_t>(x.height());
  const auto W = static_cast<std::ptrdiff_t>(x.width());
  const auto C = static_cast<std::ptrdiff_t>(x.channels());
  const auto r = static_cast<std::ptrdiff_t>(size);
  const auto c = r / 2;
  ImageTensor out(x.shape());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t ch = 0; ch < C; ++ch) {
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      for (std::ptrdiff_t xx = 0; xx < W; ++xx) {
        double acc = 0.0;
        for (std::ptrdiff_t ky = 0; ky < r; ++ky) {
          const auto sy = std::clamp<std::ptrdiff_t>(y + ky - c, 0, H - 1);
          for (std::ptrdiff_t kx = 0; kx < r; ++kx) {
            const auto sx = std::clamp<std::ptrdiff_t>(xx + kx - c, 0, W - 1);
            acc += kernel[ky * r + kx] * x.at(ch, sy, sx);
          }
        }
        out.at(ch, y, xx) = acc;
      }
    }
  }
  return out;
}

namespace {

struct Taps {
  std::vector<std::ptrdiff_t> index;  // out_n * ntaps, clamped
  std::vector<double> weight;
  std::size_t ntaps = 0;
};

Taps make_taps(std::size_t in_n, std::size_t out_n, bool cubic) {
  Taps taps;
  taps.ntaps = cubic ? 4 : 2;
  taps.index.resize(out_n * taps.ntaps);
  taps.weight.resize(out_n * taps.ntaps);
  const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
  const auto last = static_cast<std::ptrdiff_t>(in_n) - 1;
  for (std::size_t o = 0; o < out_n; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const double fl = std::floor(src);
    const double f = src - fl;
    const auto i0 = static_cast<std::ptrdiff_t>(fl);
    for (std::size_t j = 0; j < taps.ntaps; ++j) {
      std::ptrdiff_t idx;
      double w;
      if (cubic) {
        idx = i0 - 1 + static_cast<std::ptrdiff_t>(j);
        w = catmull_rom_weight(f - (static_cast<double>(j) - 1.0));
      } else {
        idx = i0 + static_cast<std::ptrdiff_t>(j);
        w = j == 0 ? 1.0 - f : f;
      }
      taps.index[o * taps.ntaps + j] = std::clamp<std::ptrdiff_t>(idx, 0, last);
      taps.weight[o * taps.ntaps + j] = w;
    }
  }
  return taps;
}

}  // namespace

ImageTensor resample(const ImageTensor& x, ResampleMethod method, std::size_t out_height,
                     std::size_t out_width) {
  if (out_height == 0 || out_width == 0) {
    throw std::invalid_argument("resample: degenerate target size");
  }
  if (out_height == x.height() && out_width == x.width()) return x;
  const bool cubic = method != ResampleMethod::bilinear;
  const Taps ty = make_taps(x.height(), out_height, cubic);
  const Taps tx = make_taps(x.width(), out_width, cubic);
  const auto C = static_cast<std::ptrdiff_t>(x.channels());
  const auto H = static_cast<std::ptrdiff_t>(x.height());
  const auto OH = static_cast<std::ptrdiff_t>(out_height);
  const auto OW = static_cast<std::ptrdiff_t>(out_width);

  // Horizontal pass then vertical pass.
  ImageTensor tmp(x.channels(), x.height(), out_width);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < C; ++c)
    for (std::ptrdiff_t y = 0; y < H; ++y)
      for (std::ptrdiff_t ox = 0; ox < OW; ++ox) {
        double acc = 0.0;
        for (std::size_t j = 0; j < tx.ntaps; ++j)
          acc += tx.weight[ox * tx.ntaps + j] * x.at(c, y, tx.index[ox * tx.ntaps + j]);
        tmp.at(c, y, ox) = acc;
      }

  ImageTensor out(x.channels(), out_height, out_width);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < C; ++c)
    for (std::ptrdiff_t oy = 0; oy < OH; ++oy)
      for (std::ptrdiff_t ox = 0; ox < OW; ++ox) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ty.ntaps; ++j)
          acc += ty.weight[oy * ty.ntaps + j] * tmp.at(c, ty.index[oy * ty.ntaps + j], ox);
        out.at(c, oy, ox) = acc;
      }

  if (method == ResampleMethod::bicubic_gaussian) {
    static const std::vector<double> g = gaussian_kernel(5, 1.0);
    return filter2d_clamped(out, g, 5);
  }
  if (method == ResampleMethod::bicubic_edge) {
    static const std::vector<double> e = sharpen_kernel();
    return filter2d_clamped(out, e, 3);
  }
  return out;
}

ImageTensor resample(const ImageTensor& x, const ResampleConfig& cfg) {
  if (!(cfg.factor_y > 0.0) || !(cfg.factor_x > 0.0)) {
    throw std::invalid_argument("resample: factor must be positive");
  }
  const auto oh = static_cast<std::size_t>(std::llround(x.height() * cfg.factor_y));
  const auto ow = static_cast<std::size_t>(std::llround(x.width() * cfg.factor_x));
  return resample(x, cfg.method, oh, ow);
}

ImageTensor mean_pool(const ImageTensor& x, std::size_t factor) {
  if (factor == 0 || x.height() % factor != 0 || x.width() % factor != 0) {
    throw std::invalid_argument("mean_pool: " + x.shape().str() + " not divisible by " +
                                std::to_string(factor));
  }
  if (factor == 1) return x;
  const std::size_t oh = x.height() / factor, ow = x.width() / factor;
  const auto C = static_cast<std::ptrdiff_t>(x.channels());
  const auto OH = static_cast<std::ptrdiff_t>(oh);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  ImageTensor out(x.channels(), oh, ow);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t c = 0; c < C; ++c)
    for (std::ptrdiff_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < factor; ++dy)
          for (std::size_t dx = 0; dx < factor; ++dx)
            acc += x.at(c, oy * factor + dy, ox * factor + dx);
        out.at(c, oy, ox) = acc * inv;
      }
  return out;
}

}  // namespace mf
