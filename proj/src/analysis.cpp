#include "mf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mf {

CostModel CostModel::area() {
  return {[](std::size_t h, std::size_t w) { return static_cast<double>(h) * static_cast<double>(w); },
          0.0};
}

double plan_cost(const StagePlan& plan, const CostModel& m) {
  double total = m.overhead;
  for (const auto& s : plan.stages) total += s.steps * m.per_step(s.height, s.width);
  return total;
}

CostReport pipeline_cost(const StagePlan& plan, const StagePlan& baseline, const CostModel& m) {
  plan.validate();
  baseline.validate();
  CostReport r;
  r.total = m.overhead;
  for (const auto& s : plan.stages) {
    const double c = s.steps * m.per_step(s.height, s.width);
    if (!(c > 0.0)) throw std::invalid_argument("pipeline_cost: cost must be positive");
    r.per_stage.push_back({s.height, s.width, s.steps, c});
    r.total += c;
  }
  r.baseline_total = plan_cost(baseline, m);
  r.ratio = r.total / r.baseline_total;
  return r;
}

CostReport pipeline_cost(const StagePlan& plan, const CostModel& m) {
  return pipeline_cost(plan, final_resolution_plan(plan), m);
}

std::string cost_report_csv(const CostReport& r) {
  std::string out = "stage,height,width,steps,cost\n";
  char line[160];
  for (std::size_t i = 0; i < r.per_stage.size(); ++i) {
    const auto& s = r.per_stage[i];
    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%d,%.17g\n", i, s.height, s.width, s.steps, s.cost);
    out += line;
  }
  std::snprintf(line, sizeof line, "total,,,,%.17g\nbaseline,,,,%.17g\nratio,,,,%.17g\n", r.total,
                r.baseline_total, r.ratio);
  out += line;
  return out;
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(4.0 / mse);
}

std::vector<SpectrumBand> radial_spectrum(const ImageTensor& x) {
  if (x.height() != x.width()) {
    throw std::invalid_argument("radial_spectrum: needs a square image, got " + x.shape().str());
  }
  const std::size_t n = x.height();
  std::vector<double> cs(n), sn(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    cs[k] = std::cos(a);
    sn[k] = std::sin(a);
  }
  auto radius = [n](std::size_t ky, std::size_t kx) {
    const double fy = ky <= n / 2 ? double(ky) : double(ky) - double(n);
    const double fx = kx <= n / 2 ? double(kx) : double(kx) - double(n);
    return static_cast<std::size_t>(std::lround(std::sqrt(fy * fy + fx * fx)));
  };
  const std::size_t rmax = radius(n / 2, n / 2);
  std::vector<SpectrumBand> bands(rmax + 1);
  for (std::size_t r = 0; r <= rmax; ++r) bands[r].radius = r;
  for (std::size_t ky = 0; ky < n; ++ky)
    for (std::size_t kx = 0; kx < n; ++kx) ++bands[radius(ky, kx)].bins;

  // Separable DFT: rows, then columns.
  std::vector<double> re(n * n), im(n * n);
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto plane = x.channel(c);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t k = 0; k < n; ++k) {
        double r = 0.0, i = 0.0;
        for (std::size_t xx = 0; xx < n; ++xx) {
          const std::size_t idx = (k * xx) % n;
          r += plane[y * n + xx] * cs[idx];
          i -= plane[y * n + xx] * sn[idx];
        }
        re[y * n + k] = r;
        im[y * n + k] = i;
      }
    for (std::size_t kx = 0; kx < n; ++kx)
      for (std::size_t ky = 0; ky < n; ++ky) {
        double r = 0.0, i = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          const std::size_t idx = (ky * y) % n;
          r += re[y * n + kx] * cs[idx] + im[y * n + kx] * sn[idx];
          i += im[y * n + kx] * cs[idx] - re[y * n + kx] * sn[idx];
        }
        bands[radius(ky, kx)].energy += (r * r + i * i) * norm;
      }
  }
  for (auto& b : bands) b.mean_energy = b.bins ? b.energy / static_cast<double>(b.bins) : 0.0;
  return bands;
}

double high_band_energy(const std::vector<SpectrumBand>& spectrum) {
  if (spectrum.empty()) return 0.0;
  const double cut = 0.75 * static_cast<double>(spectrum.back().radius);
  double energy = 0.0;
  std::size_t bins = 0;
  for (const auto& b : spectrum) {
    if (static_cast<double>(b.radius) >= cut) {
      energy += b.energy;
      bins += b.bins;
    }
  }
  return bins ? energy / static_cast<double>(bins) : 0.0;
}

std::string spectrum_csv(const std::vector<SpectrumBand>& spectrum) {
  std::string out = "radius,bins,energy,mean_energy\n";
  char line[128];
  for (const auto& b : spectrum) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g\n", b.radius, b.bins, b.energy,
                  b.mean_energy);
    out += line;
  }
  return out;
}

Moments moments(const ImageTensor& x) {
  Moments m;
  if (x.empty()) return m;
  const auto& d = x.data();
  m.min = *std::min_element(d.begin(), d.end());
  m.max = *std::max_element(d.begin(), d.end());
  double sum = 0.0;
  for (double v : d) sum += v;
  m.mean = sum / static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(var / static_cast<double>(d.size()));
  return m;
}

}  // namespace mf
