#include "mf/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace mf {

namespace {

struct Geometry {
  const char* name;
  std::vector<std::size_t> sides;
  std::vector<int> steps;
  Space space;
  double guidance;
};

const std::vector<Geometry>& geometries() {
  static const std::vector<Geometry> g = {
      {"sdm", {512, 768, 1024}, {40, 5, 5}, Space::latent, 7.0},
      {"sdxl", {1024, 2048}, {40, 10}, Space::latent, 7.0},
      {"sd3", {1024, 2048}, {20, 8}, Space::latent, 7.0},
      {"floyd-1", {64, 128}, {80, 20}, Space::pixel, 7.0},
      {"floyd-2", {256, 512}, {40, 10}, Space::pixel, 4.0},
  };
  return g;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& g : geometries()) {
    out.emplace_back(g.name);
    out.emplace_back(std::string(g.name) + "-toy");
  }
  return out;
}

void apply_enhancements(StagePlan& plan) {
  if (plan.stages.empty()) return;
  const Stage& base = plan.stages.front();
  const double base_area = static_cast<double>(base.height) * static_cast<double>(base.width);
  for (std::size_t i = 1; i < plan.stages.size(); ++i) {
    Stage& s = plan.stages[i];
    const double area = static_cast<double>(s.height) * static_cast<double>(s.width);
    if (area <= base_area) continue;
    s.gamma = area / base_area;
    s.dilation = static_cast<std::size_t>(std::max(1L, std::lround(std::sqrt(area / base_area))));
  }
}

Preset make_preset(const std::string& name, bool enhanced) {
  std::string base = name;
  std::size_t divisor = 1;
  const std::string suffix = "-toy";
  if (base.size() > suffix.size() && base.ends_with(suffix)) {
    base.resize(base.size() - suffix.size());
    divisor = 32;
  }
  for (const auto& g : geometries()) {
    if (base != g.name) continue;
    Preset p;
    p.name = name;
    p.guidance = g.guidance;
    p.plan.space = g.space;
    p.plan.upsampler = ResampleMethod::bicubic;
    for (std::size_t i = 0; i < g.sides.size(); ++i) {
      Stage s;
      s.height = s.width = g.sides[i] / divisor;
      s.steps = g.steps[i];
      p.plan.stages.push_back(s);
      p.plan.total_steps += s.steps;
    }
    if (enhanced) apply_enhancements(p.plan);
    p.plan.validate();
    return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace mf
