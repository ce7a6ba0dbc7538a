#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mf/pipeline.hpp"
#include "mf/tensor.hpp"

namespace mf {

// Per-step denoiser cost as a function of stage resolution, plus a fixed
// per-run overhead.
struct CostModel {
  std::function<double(std::size_t height, std::size_t width)> per_step;
  double overhead = 0.0;

  // Cost proportional to pixel count (height * width).
  static CostModel area();
};

struct StageCost {
  std::size_t height = 0;
  std::size_t width = 0;
  int steps = 0;
  double cost = 0.0;
};

struct CostReport {
  std::vector<StageCost> per_stage;
  double total = 0.0;
  double baseline_total = 0.0;
  double ratio = 0.0;
};

double plan_cost(const StagePlan& plan, const CostModel& m);
CostReport pipeline_cost(const StagePlan& plan, const StagePlan& baseline, const CostModel& m);
// Against final_resolution_plan(plan).
CostReport pipeline_cost(const StagePlan& plan, const CostModel& m = CostModel::area());

std::string cost_report_csv(const CostReport& r);

// 10 log10(peak^2 / MSE) with peak 2 (range [-1, 1]); +infinity for equal inputs.
double psnr(const ImageTensor& a, const ImageTensor& b);

struct SpectrumBand {
  std::size_t radius = 0;
  std::size_t bins = 0;
  double energy = 0.0;       // sum over the ring
  double mean_energy = 0.0;  // energy / bins
};

// |DFT|^2 / (h w) summed over channels, grouped into rings of integer radius
// (rounded distance from DC on the signed frequency grid). The band energies
// sum to the spatial sum of squares.
std::vector<SpectrumBand> radial_spectrum(const ImageTensor& x);

// Mean per-bin energy over bands with radius >= 3/4 of the largest radius.
double high_band_energy(const std::vector<SpectrumBand>& spectrum);

std::string spectrum_csv(const std::vector<SpectrumBand>& spectrum);

struct Moments {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
Moments moments(const ImageTensor& x);

}  // namespace mf
