#pragma once

#include <string>
#include <vector>

#include "mf/pipeline.hpp"

namespace mf {

// Geometry-only stage plans for the model families the method was evaluated
// on. Names: sdm, sdxl, sd3, floyd-1, floyd-2; a "-toy" suffix divides every
// resolution by 32 and keeps the step plan verbatim.
struct Preset {
  std::string name;
  StagePlan plan;
  double guidance = 7.0;
};

std::vector<std::string> preset_names();

// `enhanced` adds dilation and noise re-scheduling on every stage above the
// base resolution: gamma = area ratio to the first stage, dilation =
// round(linear scale factor).
Preset make_preset(const std::string& name, bool enhanced = true);

// Apply the enhanced defaults above to an arbitrary plan.
void apply_enhancements(StagePlan& plan);

}  // namespace mf
