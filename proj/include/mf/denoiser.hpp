#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mf/schedule.hpp"
#include "mf/tensor.hpp"

namespace mf {

// One epsilon-prediction query. References must outlive the call.
struct DenoiseRequest {
  const ImageTensor& input;  // x_t or z_t
  int t = 0;
  const NoiseSchedule& schedule;
  // Text-like condition vector; empty means the unconditional (null) token.
  std::span<const double> text_cond = {};
  // Image condition, already resampled to the input's spatial size.
  const ImageTensor* image_cond = nullptr;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual ImageTensor predict_eps(const DenoiseRequest& req) const = 0;

  // Channels of x_t (and of the predicted noise).
  virtual std::size_t data_channels() const = 0;
  virtual std::size_t middle_dilation() const { return 1; }
  // Copy with the middle layers re-dilated; weights unchanged.
  virtual std::unique_ptr<Denoiser> with_middle_dilation(std::size_t delta) const = 0;
};

// eps(null) + w * (eps(cond) - eps(null)). w == 1 or an empty condition
// skips the unconditional pass.
ImageTensor guided_eps(const Denoiser& d, const DenoiseRequest& req, double w);

// Closed-form MMSE noise predictor for data x0 ~ N(mu_c, sigma2_c) i.i.d. per
// pixel of channel c:
//   E[x0 | x_t] = mu + sqrt(ab) s2 / (ab s2 + 1 - ab) * (x_t - sqrt(ab) mu)
//   eps_hat     = sqrt(1 - ab) (x_t - sqrt(ab) mu) / (ab s2 + 1 - ab)
// A non-empty text condition (one value per channel) shifts the mean.
class AnalyticGaussianDenoiser final : public Denoiser {
 public:
  AnalyticGaussianDenoiser(std::vector<double> mu, std::vector<double> sigma2);

  ImageTensor predict_eps(const DenoiseRequest& req) const override;
  std::size_t data_channels() const override { return mu_.size(); }
  std::unique_ptr<Denoiser> with_middle_dilation(std::size_t) const override;

  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& sigma2() const { return sigma2_; }

  // E[x0 | x_t] for a single value.
  static double posterior_mean(double xt, double alpha_bar, double mu, double sigma2);

 private:
  std::vector<double> mu_;
  std::vector<double> sigma2_;
};

}  // namespace mf
