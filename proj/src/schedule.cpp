#include "mf/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mf {

int NoiseSchedule::checked(int t) const {
  if (t < 0 || t > num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(num_steps()) + "]");
  }
  return t;
}

double ddim_sigma(double alpha_bar_prev, double alpha_bar, double eta) {
  if (eta == 0.0 || alpha_bar >= 1.0) return 0.0;
  const double v = (1.0 - alpha_bar_prev) / (1.0 - alpha_bar) * (1.0 - alpha_bar / alpha_bar_prev);
  return eta * std::sqrt(std::max(v, 0.0));
}

void NoiseSchedule::fill_sigmas() {
  sigmas_.assign(alpha_bars_.size(), 0.0);
  for (int t = 1; t <= num_steps(); ++t) {
    sigmas_[t] = ddim_sigma(alpha_bars_[t - 1], alpha_bars_[t], eta_);
  }
}

NoiseSchedule NoiseSchedule::from_betas(const std::vector<double>& betas, double eta) {
  if (betas.empty()) throw std::domain_error("schedule needs at least one step");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("eta must lie in [0, 1]");
  NoiseSchedule s;
  s.eta_ = eta;
  s.betas_.push_back(0.0);
  s.alphas_.push_back(1.0);
  s.alpha_bars_.push_back(1.0);
  s.complements_.push_back(0.0);
  double prod = 1.0;
  double log_prod = 0.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
    const double a = 1.0 - b;
    prod *= a;
    log_prod += std::log1p(-b);
    s.betas_.push_back(b);
    s.alphas_.push_back(a);
    s.alpha_bars_.push_back(prod);
    s.complements_.push_back(-std::expm1(log_prod));
  }
  s.fill_sigmas();
  return s;
}

NoiseSchedule NoiseSchedule::from_alpha_bars(const std::vector<double>& alpha_bars, double eta) {
  std::vector<double> complements(alpha_bars.size());
  for (std::size_t i = 0; i < alpha_bars.size(); ++i) complements[i] = 1.0 - alpha_bars[i];
  return from_pairs(alpha_bars, complements, eta);
}

NoiseSchedule NoiseSchedule::from_pairs(const std::vector<double>& alpha_bars,
                                        const std::vector<double>& complements, double eta) {
  if (alpha_bars.empty()) throw std::domain_error("schedule needs at least one step");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("eta must lie in [0, 1]");
  NoiseSchedule s;
  s.eta_ = eta;
  s.betas_.push_back(0.0);
  s.alphas_.push_back(1.0);
  s.alpha_bars_.push_back(1.0);
  s.complements_.push_back(0.0);
  for (std::size_t i = 0; i < alpha_bars.size(); ++i) {
    const double ab = alpha_bars[i];
    const double prev = s.alpha_bars_.back();
    if (!(ab > 0.0 && ab <= prev)) {
      throw std::domain_error("alpha_bar must be positive and non-increasing");
    }
    const double a = ab / prev;
    s.alphas_.push_back(a);
    s.betas_.push_back(1.0 - a);
    s.alpha_bars_.push_back(ab);
    s.complements_.push_back(complements[i]);
  }
  s.fill_sigmas();
  return s;
}

NoiseSchedule make_linear_schedule(int num_steps, double beta_start, double beta_end, double eta) {
  if (num_steps < 1) throw std::domain_error("make_linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::domain_error("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(num_steps));
  if (num_steps == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / (num_steps - 1);
    for (int i = 0; i < num_steps; ++i) betas[i] = beta_start + step * i;
    betas.back() = beta_end;
  }
  return NoiseSchedule::from_betas(betas, eta);
}

NoiseSchedule make_scaled_linear_schedule(int num_steps, double eta) {
  if (num_steps < 1) throw std::domain_error("make_scaled_linear_schedule: T must be >= 1");
  const double scale = 1000.0 / num_steps;
  return make_linear_schedule(num_steps, std::min(1e-4 * scale, 0.999),
                              std::min(0.02 * scale, 0.999), eta);
}

ImageTensor forward_diffuse(const ImageTensor& x0, int t, const ImageTensor& eps,
                            const NoiseSchedule& s) {
  require_same_shape(x0, eps, "forward_diffuse");
  if (t < 1 || t > s.num_steps()) {
    throw std::out_of_range("forward_diffuse: timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(s.num_steps()) + "]");
  }
  return lincomb(std::sqrt(s.alpha_bar(t)), x0, std::sqrt(s.one_minus_alpha_bar(t)), eps);
}

double snr(const NoiseSchedule& s, int t) {
  if (t < 1 || t > s.num_steps()) throw std::out_of_range("snr: timestep out of range");
  const double c = s.one_minus_alpha_bar(t);
  if (c <= 0.0) return std::numeric_limits<double>::infinity();
  return s.alpha_bar(t) / c;
}

NoiseSchedule reschedule(const NoiseSchedule& s, RescheduleParams p) {
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
    throw std::domain_error("reschedule: gamma must be positive");
  }
  if (p.gamma == 1.0) return s;
  // gamma - (gamma - 1) ab == gamma (1 - ab) + ab, which avoids cancellation
  std::vector<double> abs(static_cast<std::size_t>(s.num_steps()));
  std::vector<double> comps(abs.size());
  for (int t = 1; t <= s.num_steps(); ++t) {
    const double ab = s.alpha_bar(t);
    const double c = s.one_minus_alpha_bar(t);
    const double den = p.gamma * c + ab;
    abs[t - 1] = ab / den;
    comps[t - 1] = p.gamma * c / den;
  }
  return NoiseSchedule::from_pairs(abs, comps, s.eta());
}

std::string schedule_to_csv(const NoiseSchedule& s) {
  std::string out = "t,beta,alpha,alpha_bar,sigma\n";
  char line[160];
  for (int t = 1; t <= s.num_steps(); ++t) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", t, s.beta(t), s.alpha(t),
                  s.alpha_bar(t), s.sigma(t));
    out += line;
  }
  return out;
}

NoiseSchedule schedule_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,beta,alpha,alpha_bar,sigma", 0) != 0) {
    throw std::invalid_argument("schedule CSV: missing header");
  }
  NoiseSchedule s;
  s.betas_ = {0.0};
  s.alphas_ = {1.0};
  s.alpha_bars_ = {1.0};
  s.complements_ = {0.0};
  s.sigmas_ = {0.0};
  int expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int t = 0;
    double b, a, ab, sg;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &t, &b, &a, &ab, &sg) != 5 ||
        t != expected) {
      throw std::invalid_argument("schedule CSV: malformed row '" + line + "'");
    }
    if (!(b > 0.0 && b < 1.0) || !(ab > 0.0 && ab <= s.alpha_bars_.back()) || sg < 0.0) {
      throw std::domain_error("schedule CSV: row " + std::to_string(t) + " violates invariants");
    }
    s.betas_.push_back(b);
    s.alphas_.push_back(a);
    s.alpha_bars_.push_back(ab);
    s.complements_.push_back(1.0 - ab);
    s.sigmas_.push_back(sg);
    ++expected;
  }
  if (expected == 1) throw std::invalid_argument("schedule CSV: no rows");
  // eta is not a column; recover it from the first row with a nonzero
  // unit-eta sigma.
  s.eta_ = 0.0;
  for (int t = 2; t <= s.num_steps(); ++t) {
    const double unit = ddim_sigma(s.alpha_bars_[t - 1], s.alpha_bars_[t], 1.0);
    if (unit > 0.0) {
      s.eta_ = s.sigmas_[t] / unit;
      break;
    }
  }
  return s;
}

}  // namespace mf
