#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mf/reference.hpp"
#include "mf/rng.hpp"
#include "mf/tensorops.hpp"
#include "oracles.hpp"

using doctest::Approx;

namespace {

mf::ConvKernel random_kernel(mf::Rng& rng, std::size_t out, std::size_t in, std::size_t size,
                             std::size_t dilation = 1) {
  mf::ConvKernel k = mf::ConvKernel::zeros(out, in, size);
  k.dilation = dilation;
  for (double& w : k.weights) w = rng.normal();
  for (double& b : k.bias) b = rng.normal();
  return k;
}

}  // namespace

TEST_SUITE("tensorops") {

TEST_CASE("1x1 kernel scales every pixel") {
  mf::Rng rng(1);
  const mf::ImageTensor x = mf::gaussian_noise({1, 5, 6}, rng);
  mf::ConvKernel k = mf::ConvKernel::zeros(1, 1, 1);
  k.weights[0] = -2.5;
  const mf::ImageTensor y = mf::conv2d(x, k);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == -2.5 * x.data()[i]);
}

TEST_CASE("dilated all-ones kernel on a centred impulse") {
  mf::ImageTensor x(1, 5, 5);
  x.at(0, 2, 2) = 1.0;
  mf::ConvKernel k = mf::ConvKernel::zeros(1, 1, 3);
  std::fill(k.weights.begin(), k.weights.end(), 1.0);
  k.dilation = 2;
  const mf::ImageTensor y = mf::conv2d(x, k);
  const mf::ImageTensor ref = oracle::direct_conv(x, k);
  for (std::size_t yy = 0; yy < 5; ++yy)
    for (std::size_t xx = 0; xx < 5; ++xx) {
      const bool on = yy % 2 == 0 && xx % 2 == 0;
      CHECK(y.at(0, yy, xx) == (on ? 1.0 : 0.0));
      CHECK(ref.at(0, yy, xx) == y.at(0, yy, xx));
    }
}

TEST_CASE("conv2d matches the direct-sum oracle") {
  mf::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const std::size_t size = trial % 2 ? 3 : 5;
    const mf::ConvKernel k = random_kernel(rng, 2, 3, size, d);
    const mf::ImageTensor x = mf::gaussian_noise({3, 4 + static_cast<std::size_t>(trial % 5), 4}, rng);
    CHECK(mf::max_abs_diff(mf::conv2d(x, k), oracle::direct_conv(x, k)) < 1e-12);
    CHECK(mf::max_abs_diff(mf::conv2d(x, k), mf::reference::conv2d(x, k)) < 1e-12);
  }
}

TEST_CASE("conv2d preconditions") {
  CHECK_THROWS_AS(mf::ConvKernel::zeros(1, 1, 2), std::invalid_argument);
  mf::ConvKernel even = mf::ConvKernel::zeros(1, 1, 3);
  even.size = 2;
  CHECK_THROWS_AS(mf::conv2d(mf::ImageTensor(1, 3, 3), even), std::invalid_argument);
  CHECK_THROWS_AS(mf::conv2d(mf::ImageTensor(2, 3, 3), mf::ConvKernel::zeros(1, 1, 3)), std::invalid_argument);
  mf::ConvKernel zero_d = mf::ConvKernel::zeros(1, 1, 3);
  zero_d.dilation = 0;
  CHECK_THROWS_AS(mf::conv2d(mf::ImageTensor(1, 3, 3), zero_d), std::invalid_argument);
}

TEST_CASE("dilate_kernel keeps weights and matches zero stuffing") {
  mf::Rng rng(3);
  const mf::ConvKernel k = random_kernel(rng, 2, 2, 3);
  CHECK(mf::dilate_kernel(k, 1) == k);
  const mf::ConvKernel k2 = mf::dilate_kernel(k, 2);
  CHECK(k2.weights == k.weights);
  CHECK(k2.bias == k.bias);
  CHECK(k2.dilation == 2);
  CHECK(k2.receptive_field() == 5);
  const mf::ConvKernel stuffed = mf::zero_stuff(k2);
  CHECK(stuffed.size == 5);
  CHECK(stuffed.dilation == 1);
  CHECK(stuffed.weights[1] == 0.0);
  const mf::ImageTensor x = mf::gaussian_noise({2, 7, 6}, rng);
  CHECK(mf::max_abs_diff(mf::conv2d(x, k2), mf::conv2d(x, stuffed)) <= 1e-12);
}

TEST_CASE("conv2d is linear") {
  mf::Rng rng(4);
  mf::ConvKernel k = random_kernel(rng, 3, 2, 3, 2);
  std::fill(k.bias.begin(), k.bias.end(), 0.0);
  const mf::ImageTensor a = mf::gaussian_noise({2, 6, 6}, rng);
  const mf::ImageTensor b = mf::gaussian_noise({2, 6, 6}, rng);
  const mf::ImageTensor lhs = mf::conv2d(mf::lincomb(0.7, a, -1.3, b), k);
  const mf::ImageTensor rhs = mf::lincomb(0.7, mf::conv2d(a, k), -1.3, mf::conv2d(b, k));
  CHECK(mf::max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("conv2d backward passes agree with finite differences") {
  mf::Rng rng(5);
  const mf::ConvKernel k = random_kernel(rng, 2, 2, 3, 2);
  const mf::ImageTensor x = mf::gaussian_noise({2, 5, 5}, rng);
  const mf::ImageTensor g = mf::gaussian_noise({2, 5, 5}, rng);
  auto objective = [&](const mf::ImageTensor& in, const mf::ConvKernel& kk) {
    const mf::ImageTensor y = mf::conv2d(in, kk);
    return std::inner_product(y.data().begin(), y.data().end(), g.data().begin(), 0.0);
  };
  const mf::ImageTensor gin = mf::conv2d_backward_input(g, k, 2);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); i += 3) {
    mf::ImageTensor xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    CHECK(gin.data()[i] == Approx((objective(xp, k) - objective(xm, k)) / (2 * h)).epsilon(1e-6));
  }
  std::vector<double> gw(k.weights.size()), gb(k.bias.size());
  mf::conv2d_backward_params(x, g, k, gw, gb);
  for (std::size_t i = 0; i < gw.size(); i += 5) {
    mf::ConvKernel kp = k, km = k;
    kp.weights[i] += h;
    km.weights[i] -= h;
    CHECK(gw[i] == Approx((objective(x, kp) - objective(x, km)) / (2 * h)).epsilon(1e-6));
  }
  CHECK(gb[1] == Approx(std::accumulate(g.data().begin() + 25, g.data().end(), 0.0)));
}

TEST_CASE("resample to the source size is the identity") {
  mf::Rng rng(6);
  const mf::ImageTensor x = mf::gaussian_noise({2, 5, 7}, rng);
  for (auto m : {mf::ResampleMethod::bilinear, mf::ResampleMethod::bicubic, mf::ResampleMethod::bicubic_gaussian,
                 mf::ResampleMethod::bicubic_edge}) {
    CHECK(mf::resample(x, m, 5, 7) == x);
    CHECK(mf::resample(x, mf::ResampleConfig{m, 1.0, 1.0}) == x);
  }
}

TEST_CASE("constant images stay constant") {
  const mf::ImageTensor x(2, 4, 6, 0.37);
  for (auto m : {mf::ResampleMethod::bilinear, mf::ResampleMethod::bicubic, mf::ResampleMethod::bicubic_gaussian,
                 mf::ResampleMethod::bicubic_edge}) {
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 12}, {6, 9}, {3, 5}, {13, 7}}) {
      const mf::ImageTensor y = mf::resample(x, m, h, w);
      CHECK(y.shape() == mf::Shape{2, h, w});
      for (double v : y.data()) CHECK(std::abs(v - 0.37) < 1e-9);
    }
  }
}

TEST_CASE("bilinear 2x upsample matches the closed form") {
  mf::ImageTensor x(1, 2, 2);
  x.data() = {0, 1, 2, 3};
  const mf::ImageTensor y = mf::resample(x, mf::ResampleMethod::bilinear, 4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(y.at(0, i, j) == Approx(oracle::bilinear_at(x, 0, i, j, 4, 4)));
  // first row: source x = -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
  CHECK(y.at(0, 0, 0) == Approx(0.0));
  CHECK(y.at(0, 0, 1) == Approx(0.25));
  CHECK(y.at(0, 0, 2) == Approx(0.75));
  CHECK(y.at(0, 3, 3) == Approx(3.0));
  CHECK(y.at(0, 1, 1) == Approx(0.25 * 2 + 0.25));

  mf::Rng rng(7);
  const mf::ImageTensor r = mf::gaussian_noise({1, 5, 3}, rng);
  const mf::ImageTensor ry = mf::resample(r, mf::ResampleMethod::bilinear, 8, 7);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(ry.at(0, i, j) == Approx(oracle::bilinear_at(r, 0, i, j, 8, 7)));
}

TEST_CASE("resample agrees with the serial reference") {
  mf::Rng rng(8);
  const mf::ImageTensor x = mf::gaussian_noise({3, 6, 9}, rng);
  for (auto m : {mf::ResampleMethod::bilinear, mf::ResampleMethod::bicubic, mf::ResampleMethod::bicubic_gaussian,
                 mf::ResampleMethod::bicubic_edge}) {
    CHECK(mf::max_abs_diff(mf::resample(x, m, 12, 13), mf::reference::resample(x, m, 12, 13)) < 1e-12);
    CHECK(mf::max_abs_diff(mf::resample(x, m, 4, 5), mf::reference::resample(x, m, 4, 5)) < 1e-12);
  }
}

TEST_CASE("bicubic reproduces linear ramps in the interior") {
  mf::ImageTensor x(1, 1, 8);
  for (std::size_t i = 0; i < 8; ++i) x.at(0, 0, i) = 0.1 * static_cast<double>(i);
  const mf::ImageTensor y = mf::resample(x, mf::ResampleMethod::bicubic, 1, 16);
  for (std::size_t j = 4; j < 12; ++j) {
    const double src = (j + 0.5) / 2.0 - 0.5;
    CHECK(y.at(0, 0, j) == Approx(0.1 * src).epsilon(1e-12));
  }
}

TEST_CASE("catmull-rom weights") {
  CHECK(mf::catmull_rom_weight(0.0) == 1.0);
  CHECK(mf::catmull_rom_weight(1.0) == 0.0);
  CHECK(mf::catmull_rom_weight(2.0) == 0.0);
  for (double f : {0.1, 0.3, 0.5, 0.77}) {
    const double s = mf::catmull_rom_weight(1 + f) + mf::catmull_rom_weight(f) + mf::catmull_rom_weight(1 - f) +
                     mf::catmull_rom_weight(2 - f);
    CHECK(s == Approx(1.0).epsilon(1e-15));
  }
  CHECK(mf::catmull_rom_weight(0.5) == Approx(0.5625));
  CHECK(mf::catmull_rom_weight(1.5) == Approx(-0.0625));
}

TEST_CASE("post-filter kernels") {
  const std::vector<double> g = mf::gaussian_kernel(5, 1.0);
  REQUIRE(g.size() == 25);
  CHECK(std::accumulate(g.begin(), g.end(), 0.0) == Approx(1.0).epsilon(1e-15));
  CHECK(g[12] > g[11]);
  CHECK(g[0] == Approx(std::exp(-4.0) * g[12]));
  const std::vector<double> s = mf::sharpen_kernel();
  CHECK(s == std::vector<double>{0, -1, 0, -1, 5, -1, 0, -1, 0});
}

TEST_CASE("resample methods and letters") {
  CHECK(mf::parse_resample_method("A") == mf::ResampleMethod::bilinear);
  CHECK(mf::parse_resample_method("bicubic") == mf::ResampleMethod::bicubic);
  CHECK(mf::parse_resample_method("C") == mf::ResampleMethod::bicubic_gaussian);
  CHECK(mf::config_letter(mf::ResampleMethod::bicubic_edge) == 'D');
  CHECK_THROWS_AS(mf::parse_resample_method("lanczos"), std::invalid_argument);
  CHECK_THROWS(mf::resample(mf::ImageTensor(1, 2, 2), mf::ResampleMethod::bicubic, 0, 3));
}

TEST_CASE("mean_pool") {
  mf::ImageTensor x(1, 2, 2);
  x.data() = {0, 1, 2, 3};
  CHECK(mf::mean_pool(x, 1) == x);
  const mf::ImageTensor p = mf::mean_pool(x, 2);
  CHECK(p.shape() == mf::Shape{1, 1, 1});
  CHECK(p.at(0, 0, 0) == 1.5);
  CHECK_THROWS_AS(mf::mean_pool(mf::ImageTensor(1, 3, 4), 2), std::invalid_argument);
  CHECK(mf::max_abs_diff(mf::mean_pool(x, 2), mf::reference::mean_pool(x, 2)) == 0.0);
}

TEST_CASE("mean_pool quarters white-noise variance") {
  mf::Rng rng(10);
  const mf::ImageTensor x = mf::gaussian_noise({1, 256, 256}, rng);
  const mf::ImageTensor p = mf::mean_pool(x, 2);
  double v = 0;
  for (double a : p.data()) v += a * a;
  v /= static_cast<double>(p.size());
  CHECK(v == Approx(0.25).epsilon(0.05));
}

TEST_CASE("pooling a diffused constant image raises SNR by factor^2") {
  mf::Rng rng(11);
  const double c = 0.5, sig = 0.8;
  for (std::size_t f : {2, 4}) {
    const mf::ImageTensor noise = mf::gaussian_noise({1, 256, 256}, rng);
    mf::ImageTensor x = noise * sig;
    for (double& v : x.data()) v += c;
    auto measured_snr = [c](const mf::ImageTensor& t) {
      double v = 0;
      for (double a : t.data()) v += (a - c) * (a - c);
      return c * c / (v / static_cast<double>(t.size()));
    };
    const double ratio = measured_snr(mf::mean_pool(x, f)) / measured_snr(x);
    CHECK(ratio == Approx(static_cast<double>(f * f)).epsilon(0.05));
  }
}

}
