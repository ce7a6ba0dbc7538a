#include "mf/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "mf/rng.hpp"

namespace mf {

namespace {

void render_blobs(Rng& rng, std::size_t n, std::vector<double>& plane) {
  std::fill(plane.begin(), plane.end(), -0.6);
  const auto count = rng.uniform_int(1, 3);
  for (std::int64_t b = 0; b < count; ++b) {
    const double cy = rng.uniform() * n;
    const double cx = rng.uniform() * n;
    const double radius = 1.5 + 2.5 * rng.uniform();
    const double amp = 0.8 + 0.8 * rng.uniform();
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
        plane[y * n + x] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
      }
  }
}

void render_checker(Rng& rng, std::size_t n, std::vector<double>& plane) {
  const auto coarse_phase_y = rng.uniform_int(0, 7), coarse_phase_x = rng.uniform_int(0, 7);
  const auto fine_phase_y = rng.uniform_int(0, 1), fine_phase_x = rng.uniform_int(0, 1);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const auto cy = (y + coarse_phase_y) / 4, cx = (x + coarse_phase_x) / 4;
      const auto fy = (y + fine_phase_y) / 1, fx = (x + fine_phase_x) / 1;
      const double coarse = ((cy + cx) % 2 == 0) ? 1.0 : -1.0;
      const double fine = ((fy + fx) % 2 == 0) ? 1.0 : -1.0;
      plane[y * n + x] = sign * (0.6 * coarse + 0.3 * fine);
    }
}

}  // namespace

TrainingSample synthetic_sample(Rng& rng, std::size_t size, std::size_t channels) {
  std::vector<double> plane(size * size);
  const bool checker = rng.uniform() < 0.5;
  if (checker) {
    render_checker(rng, size, plane);
  } else {
    render_blobs(rng, size, plane);
  }
  ImageTensor img(channels, size, size);
  for (std::size_t c = 0; c < channels; ++c) {
    const double gain = c == 0 ? 1.0 : 0.6 + 0.4 * rng.uniform();
    auto dst = img.channel(c);
    for (std::size_t i = 0; i < plane.size(); ++i) dst[i] = std::clamp(gain * plane[i], -1.0, 1.0);
  }
  return {std::move(img), checker ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0}};
}

SampleSource synthetic_dataset(std::size_t size, std::size_t channels) {
  return [size, channels](Rng& rng) { return synthetic_sample(rng, size, channels); };
}

}  // namespace mf
