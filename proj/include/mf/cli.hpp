#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mf/config.hpp"

namespace mf {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4 };

// --out, then the config's "out", then $MF_OUT_DIR, then ./mf_out.
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& flag,
                                      const std::optional<std::filesystem::path>& config);

struct AblationSetting {
  std::string label;
  RunConfig config;
};

// Sweep for kind in {upsampler, gamma, delta, truncation, guidance}; the base
// config itself is not part of the sweep. Throws ConfigError
// (ABLATE_UNKNOWN_KIND) for anything else.
std::vector<AblationSetting> ablation_settings(const std::string& kind, const RunConfig& base);

int run_cli(int argc, char** argv);

}  // namespace mf
