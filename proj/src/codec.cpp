#include "mf/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace mf {

std::vector<double> haar_matrix_1d(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("haar_matrix_1d: size must be a power of two");
  }
  if (n == 1) return {1.0};
  // H_n = [H_{n/2} (x) [1 1] ; I_{n/2} (x) [1 -1]] / sqrt(2)
  const std::size_t h = n / 2;
  const std::vector<double> sub = haar_matrix_1d(h);
  std::vector<double> m(n * n, 0.0);
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < h; ++c) {
      m[r * n + 2 * c] = sub[r * h + c] * s;
      m[r * n + 2 * c + 1] = sub[r * h + c] * s;
    }
  for (std::size_t r = 0; r < h; ++r) {
    m[(h + r) * n + 2 * r] = s;
    m[(h + r) * n + 2 * r + 1] = -s;
  }
  return m;
}

namespace {

std::vector<double> kron_square(const std::vector<double>& a, std::size_t n) {
  const std::size_t p = n * n;
  std::vector<double> k(p * p);
  for (std::size_t r1 = 0; r1 < n; ++r1)
    for (std::size_t r2 = 0; r2 < n; ++r2)
      for (std::size_t c1 = 0; c1 < n; ++c1)
        for (std::size_t c2 = 0; c2 < n; ++c2)
          k[(r1 * n + r2) * p + (c1 * n + c2)] = a[r1 * n + c1] * a[r2 * n + c2];
  return k;
}

}  // namespace

LatentCodec::LatentCodec(std::size_t spatial_factor)
    : factor_(spatial_factor),
      transform_(kron_square(haar_matrix_1d(spatial_factor), spatial_factor)) {}

LatentCodec::LatentCodec(std::size_t spatial_factor, std::vector<double> transform)
    : factor_(spatial_factor), transform_(std::move(transform)) {
  if (factor_ == 0) throw std::invalid_argument("LatentCodec: factor must be positive");
  if (transform_.size() != patch_size() * patch_size()) {
    throw std::invalid_argument("LatentCodec: transform must be f^2 x f^2");
  }
  if (orthonormality_error() > 1e-12) {
    throw std::invalid_argument("LatentCodec: transform is not orthonormal");
  }
}

double LatentCodec::orthonormality_error() const {
  const std::size_t p = patch_size();
  double worst = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += transform_[k * p + i] * transform_[k * p + j];
      worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

Shape LatentCodec::latent_shape(const Shape& image) const {
  if (image.height % factor_ != 0 || image.width % factor_ != 0) {
    throw std::invalid_argument("LatentCodec: image " + image.str() + " not divisible by " +
                                std::to_string(factor_));
  }
  return {image.channels * patch_size(), image.height / factor_, image.width / factor_};
}

Shape LatentCodec::image_shape(const Shape& latent) const {
  if (latent.channels % patch_size() != 0) {
    throw std::invalid_argument("LatentCodec: latent channels " + std::to_string(latent.channels) +
                                " not divisible by " + std::to_string(patch_size()));
  }
  return {latent.channels / patch_size(), latent.height * factor_, latent.width * factor_};
}

ImageTensor LatentCodec::encode(const ImageTensor& x) const {
  const Shape ls = latent_shape(x.shape());
  const std::size_t p = patch_size();
  ImageTensor z(ls);
  std::vector<double> patch(p);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t by = 0; by < ls.height; ++by)
      for (std::size_t bx = 0; bx < ls.width; ++bx) {
        for (std::size_t dy = 0; dy < factor_; ++dy)
          for (std::size_t dx = 0; dx < factor_; ++dx)
            patch[dy * factor_ + dx] = x.at(c, by * factor_ + dy, bx * factor_ + dx);
        for (std::size_t k = 0; k < p; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j) acc += transform_[k * p + j] * patch[j];
          z.at(c * p + k, by, bx) = (lossy_ && k > 0) ? 0.0 : acc;
        }
      }
  return z;
}

ImageTensor LatentCodec::decode(const ImageTensor& z) const {
  const Shape is = image_shape(z.shape());
  const std::size_t p = patch_size();
  ImageTensor x(is);
  for (std::size_t c = 0; c < is.channels; ++c)
    for (std::size_t by = 0; by < z.height(); ++by)
      for (std::size_t bx = 0; bx < z.width(); ++bx)
        for (std::size_t j = 0; j < p; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < p; ++k) acc += transform_[k * p + j] * z.at(c * p + k, by, bx);
          x.at(c, by * factor_ + j / factor_, bx * factor_ + j % factor_) = acc;
        }
  return x;
}

LatentCodec LatentCodec::with_lossy(bool lossy) const {
  LatentCodec c = *this;
  c.lossy_ = lossy;
  return c;
}

AnalyticGaussianDenoiser latent_prior(const AnalyticGaussianDenoiser& pixel_prior,
                                      const LatentCodec& codec) {
  const std::size_t f = codec.spatial_factor();
  const std::size_t channels = pixel_prior.data_channels();
  ImageTensor patch(channels, f, f);
  for (std::size_t c = 0; c < channels; ++c)
    for (auto& v : patch.channel(c)) v = pixel_prior.mu()[c];
  const ImageTensor means = codec.encode(patch);
  std::vector<double> mu(means.channels()), s2(means.channels());
  for (std::size_t k = 0; k < means.channels(); ++k) {
    mu[k] = means.at(k, 0, 0);
    s2[k] = pixel_prior.sigma2()[k / codec.patch_size()];
  }
  return AnalyticGaussianDenoiser(std::move(mu), std::move(s2));
}

}  // namespace mf
