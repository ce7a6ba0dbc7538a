#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mf/codec.hpp"
#include "mf/denoiser.hpp"
#include "mf/pipeline.hpp"
#include "mf/schedule.hpp"

namespace mf {

// Configuration problem; `code` is a stable machine-readable identifier such
// as CONFIG_INVALID or CONFIG_WEIGHTS_NOT_FOUND.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline constexpr int kSpecVersion = 1;

struct ScheduleSpec {
  std::string kind = "scaled_linear";  // or "linear"
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double eta = 0.0;
  StepRule rule = StepRule::ddim;
};

struct DenoiserSpec {
  std::string kind = "oracle";  // or "tiny"
  std::vector<double> mu;
  std::vector<double> sigma2;
  std::filesystem::path weights;
};

struct CodecSpec {
  std::optional<bool> enabled;  // defaults to plan.space == latent
  std::size_t factor = 2;
  bool lossy = false;
};

struct RunConfig {
  std::string preset;
  bool enhanced = true;
  StagePlan plan;
  ScheduleSpec schedule;
  DenoiserSpec denoiser;
  CodecSpec codec;
  std::size_t channels = 1;
  double guidance = 1.0;
  std::vector<double> text_cond;
  std::optional<std::filesystem::path> image_cond;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
  bool trace = true;
};

struct TrainConfig {
  int steps = 2000;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::size_t batch = 4;
  double uncond_prob = 0.1;
  std::size_t hidden = 16;
  std::size_t channels = 1;
  std::size_t size = 16;
  Space space = Space::pixel;
  std::size_t codec_factor = 2;
  bool class_conditional = true;
  std::optional<std::filesystem::path> init;
  int schedule_steps = 50;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
};

// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig preset_run_config(const std::string& preset);

TrainConfig parse_train_config(const std::string& json_text, const std::filesystem::path& base_dir);
TrainConfig load_train_config(const std::filesystem::path& path);

NoiseSchedule build_schedule(const ScheduleSpec& spec, int num_steps);
std::optional<LatentCodec> build_codec(const RunConfig& cfg);
// Loads weights for "tiny"; throws ConfigError(CONFIG_WEIGHTS_NOT_FOUND) when
// the file is missing.
std::unique_ptr<Denoiser> build_denoiser(const RunConfig& cfg, const LatentCodec* codec);

}  // namespace mf
