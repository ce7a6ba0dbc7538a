#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mf/tensor.hpp"

namespace mf {

// Square convolution kernel with per-output-channel bias.
// Weight layout is [out][in][ky][kx]; tap (ky, kx) sits at spatial offset
// (ky - size/2, kx - size/2) scaled by the dilation.
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t size = 0;
  std::size_t dilation = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  static ConvKernel zeros(std::size_t out_channels, std::size_t in_channels, std::size_t size);

  double& w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * size + ky) * size + kx];
  }
  double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * size + ky) * size + kx];
  }

  std::size_t receptive_field() const { return dilation * (size - 1) + 1; }
  void validate() const;
  bool operator==(const ConvKernel&) const = default;
};

// Same-size zero-padded (dilated) convolution:
//   out(p) = bias + sum_t in(p - dilation * t) k(t),  t centred on the kernel.
// Parallel over (output channel, row); every output element is accumulated by
// one thread in a fixed order, so results do not depend on the thread count.
ImageTensor conv2d(const ImageTensor& input, const ConvKernel& k);

// Gradients of conv2d. The weight/bias variants accumulate into the spans.
ImageTensor conv2d_backward_input(const ImageTensor& grad_out, const ConvKernel& k,
                                  std::size_t in_channels);
void conv2d_backward_params(const ImageTensor& input, const ImageTensor& grad_out,
                            const ConvKernel& k, std::span<double> grad_weights,
                            std::span<double> grad_bias);

// Same weights, different dilation. Weights are never touched.
ConvKernel dilate_kernel(ConvKernel k, std::size_t delta);

// Dense equivalent of a dilated kernel: size dilation*(size-1)+1 with zeros
// between the original taps and dilation 1.
ConvKernel zero_stuff(const ConvKernel& k);

enum class ResampleMethod { bilinear, bicubic, bicubic_gaussian, bicubic_edge };

struct ResampleConfig {
  ResampleMethod method = ResampleMethod::bicubic;
  double factor_y = 1.0;
  double factor_x = 1.0;
};

std::string to_string(ResampleMethod m);
ResampleMethod parse_resample_method(const std::string& name);
// "A".."D" for bilinear, bicubic, bicubic_gaussian, bicubic_edge.
char config_letter(ResampleMethod m);

// Interpolating resampler with align-corners=false sample positions
//   src = (dst + 0.5) * in/out - 0.5
// and edge-clamped source indices. Bicubic uses Catmull-Rom (a = -0.5).
// The gaussian/edge variants post-filter the bicubic result with an
// edge-clamped 5x5 Gaussian (sigma 1) or 3x3 sharpen kernel. Resampling to the
// source size returns the input unchanged for every method.
ImageTensor resample(const ImageTensor& x, ResampleMethod method, std::size_t out_height,
                     std::size_t out_width);
// Output size round(source * factor) per axis.
ImageTensor resample(const ImageTensor& x, const ResampleConfig& cfg);

double catmull_rom_weight(double d);

// Normalized (size x size) Gaussian, row-major.
std::vector<double> gaussian_kernel(std::size_t size, double sigma);
std::vector<double> sharpen_kernel();

// Edge-clamped 2-D filter with an odd square kernel, applied per channel.
ImageTensor filter2d_clamped(const ImageTensor& x, std::span<const double> kernel,
                             std::size_t size);

// Mean over non-overlapping factor x factor blocks.
ImageTensor mean_pool(const ImageTensor& x, std::size_t factor);

}  // namespace mf
