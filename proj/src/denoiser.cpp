#include "mf/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace mf {

ImageTensor guided_eps(const Denoiser& d, const DenoiseRequest& req, double w) {
  ImageTensor cond = d.predict_eps(req);
  if (w == 1.0 || req.text_cond.empty()) return cond;
  DenoiseRequest null_req = req;
  null_req.text_cond = {};
  ImageTensor uncond = d.predict_eps(null_req);
  if (w == 0.0) return uncond;
  auto& u = uncond.data();
  const auto& c = cond.data();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += w * (c[i] - u[i]);
  return uncond;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(std::vector<double> mu,
                                                   std::vector<double> sigma2)
    : mu_(std::move(mu)), sigma2_(std::move(sigma2)) {
  if (mu_.empty() || mu_.size() != sigma2_.size()) {
    throw std::invalid_argument("AnalyticGaussianDenoiser: mu/sigma2 size mismatch");
  }
  for (double v : sigma2_) {
    if (!(v > 0.0)) throw std::invalid_argument("AnalyticGaussianDenoiser: sigma2 must be > 0");
  }
}

double AnalyticGaussianDenoiser::posterior_mean(double xt, double alpha_bar, double mu,
                                                double sigma2) {
  const double sa = std::sqrt(alpha_bar);
  return mu + sa * sigma2 / (alpha_bar * sigma2 + 1.0 - alpha_bar) * (xt - sa * mu);
}

ImageTensor AnalyticGaussianDenoiser::predict_eps(const DenoiseRequest& req) const {
  const ImageTensor& x = req.input;
  if (x.channels() != mu_.size()) {
    throw std::invalid_argument("AnalyticGaussianDenoiser: input " + x.shape().str() +
                                " does not match " + std::to_string(mu_.size()) + " channels");
  }
  if (!req.text_cond.empty() && req.text_cond.size() != mu_.size()) {
    throw std::invalid_argument("AnalyticGaussianDenoiser: condition needs one value per channel");
  }
  if (req.image_cond && (req.image_cond->height() != x.height() ||
                         req.image_cond->width() != x.width())) {
    throw std::invalid_argument("AnalyticGaussianDenoiser: image condition " +
                                req.image_cond->shape().str() + " vs input " + x.shape().str());
  }
  if (req.t < 1 || req.t > req.schedule.num_steps()) {
    throw std::out_of_range("AnalyticGaussianDenoiser: timestep out of range");
  }
  const double ab = req.schedule.alpha_bar(req.t);
  const double sa = std::sqrt(ab);
  const double c1 = req.schedule.one_minus_alpha_bar(req.t);
  const double sn = std::sqrt(c1);
  ImageTensor out(x.shape());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const double mu = mu_[c] + (req.text_cond.empty() ? 0.0 : req.text_cond[c]);
    const double gain = sn / (ab * sigma2_[c] + c1);
    auto src = x.channel(c);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = gain * (src[i] - sa * mu);
  }
  return out;
}

std::unique_ptr<Denoiser> AnalyticGaussianDenoiser::with_middle_dilation(std::size_t) const {
  return std::make_unique<AnalyticGaussianDenoiser>(*this);
}

}  // namespace mf
