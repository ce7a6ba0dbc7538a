#pragma once

#include <cstddef>
#include <vector>

#include "mf/denoiser.hpp"
#include "mf/tensor.hpp"

namespace mf {

// Exactly invertible stand-in for a VAE: every non-overlapping f x f patch of
// every image channel is multiplied by an orthonormal (f^2 x f^2) matrix,
// giving c * f^2 latent channels at 1/f resolution. Latent channel
// c * f^2 + k holds coefficient k of image channel c; k == 0 is the DC term.
class LatentCodec {
 public:
  // 2-D Haar basis (Kronecker square of the orthonormal 1-D Haar matrix);
  // f must be a power of two.
  explicit LatentCodec(std::size_t spatial_factor = 2);
  // Custom transform, rows are basis vectors over the row-major patch.
  LatentCodec(std::size_t spatial_factor, std::vector<double> transform);

  std::size_t spatial_factor() const { return factor_; }
  std::size_t patch_size() const { return factor_ * factor_; }
  const std::vector<double>& transform() const { return transform_; }

  ImageTensor encode(const ImageTensor& x) const;
  ImageTensor decode(const ImageTensor& z) const;

  // Lossy mode zeroes every detail coefficient (k > 0) on encode, so only
  // the patch means survive a roundtrip.
  LatentCodec with_lossy(bool lossy) const;
  bool lossy() const { return lossy_; }

  Shape latent_shape(const Shape& image) const;
  Shape image_shape(const Shape& latent) const;

  // max |T^T T - I|
  double orthonormality_error() const;

 private:
  std::size_t factor_;
  std::vector<double> transform_;  // row-major patch_size x patch_size
  bool lossy_ = false;
};

std::vector<double> haar_matrix_1d(std::size_t n);

// Pixel-space Gaussian prior mapped through the codec: latent means are the
// transform of a constant-mu patch; variances stay sigma2 (orthonormality).
AnalyticGaussianDenoiser latent_prior(const AnalyticGaussianDenoiser& pixel_prior,
                                      const LatentCodec& codec);

}  // namespace mf
