#pragma once

#include <string>
#include <vector>

#include "mf/tensor.hpp"

namespace mf {

struct RescheduleParams {
  // SNR multiplier between the base resolution and the target resolution.
  double gamma = 4.0;
};

// Discrete diffusion schedule over timesteps t = 1..T. Index 0 is the
// boundary: alpha_bar(0) == 1, beta(0) == 0, sigma(0) == 0.
// Immutable after construction.
class NoiseSchedule {
 public:
  static NoiseSchedule from_betas(const std::vector<double>& betas, double eta = 0.0);
  // alpha_bars[t-1] holds alpha_bar(t); betas are recovered from ratios so
  // the product structure holds by construction.
  static NoiseSchedule from_alpha_bars(const std::vector<double>& alpha_bars, double eta = 0.0);

  int num_steps() const { return static_cast<int>(alpha_bars_.size()) - 1; }
  double beta(int t) const { return betas_.at(checked(t)); }
  double alpha(int t) const { return alphas_.at(checked(t)); }
  double alpha_bar(int t) const { return alpha_bars_.at(checked(t)); }
  // 1 - alpha_bar(t), carried separately so it keeps full relative precision
  // when alpha_bar is close to 1.
  double one_minus_alpha_bar(int t) const { return complements_.at(checked(t)); }
  double sigma(int t) const { return sigmas_.at(checked(t)); }
  double eta() const { return eta_; }

  bool operator==(const NoiseSchedule&) const = default;

 private:
  NoiseSchedule() = default;
  int checked(int t) const;
  void fill_sigmas();

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<double> complements_;
  std::vector<double> sigmas_;
  double eta_ = 0.0;

  static NoiseSchedule from_pairs(const std::vector<double>& alpha_bars,
                                  const std::vector<double>& complements, double eta);

  friend NoiseSchedule schedule_from_csv(const std::string& csv);
  friend NoiseSchedule reschedule(const NoiseSchedule& s, struct RescheduleParams p);
};

// DDIM-family sampler noise: eta * sqrt((1-ab[t-1])/(1-ab[t])) * sqrt(1 - ab[t]/ab[t-1]).
double ddim_sigma(double alpha_bar_prev, double alpha_bar, double eta);

// Betas linearly spaced from beta_start to beta_end inclusive over T steps.
NoiseSchedule make_linear_schedule(int num_steps, double beta_start = 1e-4, double beta_end = 0.02,
                                   double eta = 0.0);

// Linear schedule whose endpoints are scaled by 1000/T, so a short T-step
// chain reaches the same terminal noise level as the usual 1000-step grid
// (alpha_bar(T) ~ 1e-5). Endpoints are capped at 0.999.
NoiseSchedule make_scaled_linear_schedule(int num_steps, double eta = 0.0);

// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps
ImageTensor forward_diffuse(const ImageTensor& x0, int t, const ImageTensor& eps,
                            const NoiseSchedule& s);

// ab_t / (1 - ab_t); +infinity when ab_t == 1.
double snr(const NoiseSchedule& s, int t);

// ab'_t = ab_t / (gamma - (gamma - 1) ab_t), which divides the SNR at every
// timestep by gamma. Sigmas are re-derived from ab' with the same eta.
NoiseSchedule reschedule(const NoiseSchedule& s, RescheduleParams p);

// CSV with header "t,beta,alpha,alpha_bar,sigma"; row t = 1..T.
std::string schedule_to_csv(const NoiseSchedule& s);
NoiseSchedule schedule_from_csv(const std::string& csv);

}  // namespace mf
