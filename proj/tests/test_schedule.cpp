#include <doctest.h>

#include <cmath>

#include "mf/rng.hpp"
#include "mf/schedule.hpp"

using doctest::Approx;

TEST_SUITE("schedule") {

TEST_CASE("linear schedule endpoints and eta = 0") {
  const mf::NoiseSchedule s = mf::make_linear_schedule(50);
  CHECK(s.num_steps() == 50);
  CHECK(s.beta(1) == Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta(50) == Approx(0.02).epsilon(1e-12));
  CHECK(s.alpha_bar(0) == 1.0);
  for (int t = 1; t <= 50; ++t) {
    CHECK(s.sigma(t) == 0.0);
    CHECK(s.alpha(t) == Approx(1.0 - s.beta(t)));
  }
  double prod = 1.0;
  for (int t = 1; t <= 50; ++t) {
    prod *= 1.0 - s.beta(t);
    CHECK(s.alpha_bar(t) == Approx(prod).epsilon(1e-14));
  }
}

TEST_CASE("explicit betas give hand products") {
  const mf::NoiseSchedule s = mf::NoiseSchedule::from_betas({0.1, 0.2});
  CHECK(s.alpha_bar(1) == Approx(0.9).epsilon(1e-15));
  CHECK(s.alpha_bar(2) == Approx(0.72).epsilon(1e-15));
}

TEST_CASE("constructor preconditions") {
  CHECK_THROWS_AS(mf::make_linear_schedule(0), std::domain_error);
  CHECK_THROWS_AS(mf::make_linear_schedule(10, 0.0, 0.02), std::domain_error);
  CHECK_THROWS_AS(mf::make_linear_schedule(10, 0.03, 0.02), std::domain_error);
  CHECK_THROWS_AS(mf::make_linear_schedule(10, 1e-4, 1.0), std::domain_error);
  CHECK_THROWS_AS(mf::make_linear_schedule(10).alpha_bar(11), std::out_of_range);
}

TEST_CASE("ddim sigma with eta = 1 matches the posterior variance") {
  const mf::NoiseSchedule s = mf::make_linear_schedule(20, 1e-4, 0.02, 1.0);
  for (int t = 2; t <= 20; ++t) {
    const double post = (1 - s.alpha_bar(t - 1)) / (1 - s.alpha_bar(t)) * s.beta(t);
    CHECK(s.sigma(t) * s.sigma(t) == Approx(post).epsilon(1e-10));
  }
  CHECK(s.sigma(1) == 0.0);
}

TEST_CASE("forward_diffuse") {
  const mf::NoiseSchedule s = mf::NoiseSchedule::from_betas({0.1, 0.2});
  mf::Rng rng(1);
  const mf::ImageTensor eps = mf::gaussian_noise({1, 3, 3}, rng);
  const mf::ImageTensor zero(1, 3, 3, 0.0);
  const mf::ImageTensor xt = mf::forward_diffuse(zero, 2, eps, s);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(xt.data()[i] == Approx(std::sqrt(0.28) * eps.data()[i]));

  const mf::ImageTensor c(1, 3, 3, 0.4);
  const mf::ImageTensor xc = mf::forward_diffuse(c, 1, zero, s);
  for (double v : xc.data()) CHECK(v == Approx(std::sqrt(0.9) * 0.4));

  // alpha_bar -> 1: a tiny-beta schedule leaves x0 essentially untouched
  const mf::NoiseSchedule tiny = mf::NoiseSchedule::from_betas({1e-300});
  CHECK(mf::max_abs_diff(mf::forward_diffuse(c, 1, eps, tiny), c) < 1e-140);

  CHECK_THROWS(mf::forward_diffuse(c, 3, eps, s));
  CHECK_THROWS(mf::forward_diffuse(c, 1, mf::ImageTensor(1, 2, 2), s));
}

TEST_CASE("forward_diffuse variance is 1 - alpha_bar") {
  const mf::NoiseSchedule s = mf::make_linear_schedule(50);
  const int t = 30;
  mf::Rng rng(9);
  const mf::ImageTensor x0(1, 100, 100, 0.7);
  const mf::ImageTensor xt = mf::forward_diffuse(x0, t, mf::gaussian_noise(x0.shape(), rng), s);
  const double n = static_cast<double>(xt.size());
  double m = 0, v = 0;
  for (double x : xt.data()) m += x;
  m /= n;
  for (double x : xt.data()) v += (x - m) * (x - m);
  v /= n - 1;
  const double expected = 1 - s.alpha_bar(t);
  // standard error of a Gaussian sample variance: sigma^2 sqrt(2 / (n - 1))
  CHECK(std::abs(v - expected) < 3 * expected * std::sqrt(2 / (n - 1)));
  CHECK(std::abs(m - std::sqrt(s.alpha_bar(t)) * 0.7) < 3 * std::sqrt(expected / n));
}

TEST_CASE("snr values") {
  const mf::NoiseSchedule half = mf::NoiseSchedule::from_alpha_bars({0.5});
  CHECK(mf::snr(half, 1) == Approx(1.0).epsilon(1e-15));
  const mf::NoiseSchedule s = mf::NoiseSchedule::from_betas({0.1, 0.2});
  CHECK(mf::snr(s, 2) == Approx(0.72 / 0.28).epsilon(1e-14));
  const mf::NoiseSchedule noisy = mf::NoiseSchedule::from_alpha_bars({1e-12});
  CHECK(mf::snr(noisy, 1) < 1e-11);
  CHECK_THROWS_AS(mf::snr(half, 0), std::out_of_range);
  // a beta far below double epsilon: alpha_bar rounds to 1 and the stored
  // complement keeps the SNR finite and exact
  const mf::NoiseSchedule flat = mf::NoiseSchedule::from_betas({1e-20});
  CHECK(flat.alpha_bar(1) == 1.0);
  CHECK(mf::snr(flat, 1) == Approx(1e20).epsilon(1e-12));
}

TEST_CASE("reschedule examples") {
  const mf::NoiseSchedule s = mf::make_linear_schedule(50);
  CHECK(mf::reschedule(s, {1.0}) == s);
  const mf::NoiseSchedule half = mf::NoiseSchedule::from_alpha_bars({0.5});
  CHECK(mf::reschedule(half, {4.0}).alpha_bar(1) == Approx(0.2).epsilon(1e-15));
  CHECK(mf::RescheduleParams{}.gamma == 4.0);
  CHECK_THROWS_AS(mf::reschedule(s, {0.0}), std::domain_error);
}

TEST_CASE("reschedule properties") {
  for (const mf::NoiseSchedule& s : {mf::make_linear_schedule(50), mf::make_scaled_linear_schedule(50, 0.5),
                                     mf::make_linear_schedule(7, 0.05, 0.3, 1.0)}) {
    for (double g : {0.25, 0.5, 1.0, 1.5, 2.0, 2.25, 4.0, 8.0, 16.0}) {
      const mf::NoiseSchedule r = mf::reschedule(s, {g});
      CHECK(r.eta() == s.eta());
      double prod = 1.0;
      for (int t = 1; t <= s.num_steps(); ++t) {
        CHECK(std::abs(mf::snr(r, t) * g / mf::snr(s, t) - 1.0) <= 1e-12);
        if (t > 1) CHECK(r.alpha_bar(t) < r.alpha_bar(t - 1));
        prod *= r.alpha(t);
        CHECK(std::abs(prod - r.alpha_bar(t)) <= 1e-10 * r.alpha_bar(t));
        CHECK(r.sigma(t) == Approx(mf::ddim_sigma(r.alpha_bar(t - 1), r.alpha_bar(t), s.eta())).epsilon(1e-14));
      }
      for (double g2 : {2.0, 3.0}) {
        const mf::NoiseSchedule a = mf::reschedule(r, {g2});
        const mf::NoiseSchedule b = mf::reschedule(s, {g * g2});
        for (int t = 1; t <= s.num_steps(); ++t) CHECK(std::abs(a.alpha_bar(t) - b.alpha_bar(t)) <= 1e-10);
      }
    }
  }
}

TEST_CASE("scaled linear schedule reaches near-pure noise") {
  const mf::NoiseSchedule s = mf::make_scaled_linear_schedule(50);
  CHECK(s.beta(1) == Approx(0.002));
  CHECK(s.beta(50) == Approx(0.4));
  CHECK(s.alpha_bar(50) < 1e-4);
  CHECK(mf::make_linear_schedule(50).alpha_bar(50) > 0.5);
}

TEST_CASE("csv roundtrip") {
  const mf::NoiseSchedule s = mf::reschedule(mf::make_linear_schedule(12, 1e-4, 0.02, 0.3), {4.0});
  const std::string csv = mf::schedule_to_csv(s);
  CHECK(csv.rfind("t,beta,alpha,alpha_bar,sigma\n", 0) == 0);
  const mf::NoiseSchedule back = mf::schedule_from_csv(csv);
  CHECK(back.num_steps() == 12);
  for (int t = 1; t <= 12; ++t) {
    CHECK(back.alpha_bar(t) == s.alpha_bar(t));
    CHECK(back.sigma(t) == Approx(s.sigma(t)).epsilon(1e-12));
  }
}

}
