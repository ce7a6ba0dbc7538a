#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mf/codec.hpp"
#include "mf/denoiser.hpp"
#include "mf/rng.hpp"
#include "mf/schedule.hpp"
#include "mf/tensorops.hpp"

namespace mf {

enum class Space { pixel, latent };
enum class RelayNoiseSource { rescheduled, original };

// ddim:      z_{t-1} = sqrt(ab_{t-1}) x0_hat + sqrt(1 - ab_{t-1} - sigma^2) eps_hat + sigma eps
// ancestral: z_{t-1} = (z_t - (1 - a_t) / sqrt(1 - ab_t) eps_hat) / sqrt(a_t) + sigma eps
// With eta = 1 both produce the same mean and variance.
enum class StepRule { ddim, ancestral };

std::string to_string(Space s);
std::string to_string(RelayNoiseSource s);
std::string to_string(StepRule r);
Space parse_space(const std::string& s);
RelayNoiseSource parse_relay_noise_source(const std::string& s);
StepRule parse_step_rule(const std::string& s);

struct Stage {
  std::size_t height = 0;  // image-space resolution
  std::size_t width = 0;
  int steps = 0;
  std::optional<double> gamma;  // reschedule factor relative to the base schedule
  std::size_t dilation = 1;     // middle-layer dilation while this stage runs
};

struct StagePlan {
  std::vector<Stage> stages;
  int total_steps = 0;
  ResampleMethod upsampler = ResampleMethod::bicubic;
  Space space = Space::pixel;
  RelayNoiseSource relay_noise_source = RelayNoiseSource::rescheduled;

  // Throws std::invalid_argument on an empty plan, a zero-step stage, a
  // decreasing resolution, or sum(steps) != total_steps.
  void validate() const;

  // Timestep label of stage i's last reverse step: T - sum_{j<=i} T_j + 1.
  int relay_timestep(std::size_t i) const;
  // Noise level of the state when stage i finishes: T - sum_{j<=i} T_j.
  int relay_level(std::size_t i) const { return relay_timestep(i) - 1; }
};

// Plan with every step at `plan`'s final resolution.
StagePlan final_resolution_plan(const StagePlan& plan);

struct RunState {
  ImageTensor current;  // z_t (latent) or x_t (pixel)
  int t = 0;            // noise level of `current`; decreases by one per step
  std::size_t stage_index = 0;
  Rng rng;
  int steps_taken = 0;
};

struct Guidance {
  double weight = 1.0;
  std::span<const double> text_cond = {};
  const ImageTensor* image_cond = nullptr;  // already at the state's spatial size
};

// Closed-form pieces of the sampler.
ImageTensor clean_estimate(const ImageTensor& z, const ImageTensor& eps_hat, int t,
                           const NoiseSchedule& s);
ImageTensor apply_reverse_update(const ImageTensor& z, const ImageTensor& eps_hat, int t,
                                 const NoiseSchedule& s, StepRule rule,
                                 const ImageTensor* noise);

// One reverse step from state.t to state.t - 1.
void reverse_step(RunState& state, const Denoiser& d, const NoiseSchedule& s, const Guidance& g,
                  StepRule rule = StepRule::ddim);

// x0 estimate at state.t; the state is not advanced.
ImageTensor predict_clean(const RunState& state, const Denoiser& d, const NoiseSchedule& s,
                          const Guidance& g);

// Truncate the finished stage and relay into the next one: estimate the clean
// signal, decode (latent), upsample, re-encode (latent) and re-noise at
// state.t with the next stage's schedule (or `base` when the plan asks for the
// original one). Returns the upsampled clean estimate in image space.
ImageTensor truncate_and_relay(RunState& state, const StagePlan& plan, const LatentCodec* codec,
                               std::span<const NoiseSchedule> schedules, const NoiseSchedule& base,
                               const Denoiser& d, const Guidance& g);

struct Conditions {
  std::vector<double> text;
  std::optional<ImageTensor> image;
};

struct StepEvent {
  std::size_t stage_index;
  int t;                     // timestep label of the step about to run
  const ImageTensor& state;  // z_t before the step
  std::size_t active_dilation;
};

struct RunOptions {
  StepRule rule = StepRule::ddim;
  std::function<void(const StepEvent&)> on_step;
};

struct Snapshot {
  std::size_t stage = 0;
  int global_t = 0;     // relay timestep label; 0 for the final output
  ImageTensor image;    // image-space clean estimate
};

struct StageRecord {
  std::size_t stage = 0;
  Shape state_shape;
  int steps = 0;
  double gamma = 1.0;
  std::size_t dilation = 1;
  std::optional<Shape> image_cond_shape;
};

struct RunTrace {
  std::vector<Snapshot> snapshots;
  std::vector<StageRecord> stages;
  int total_steps = 0;
  // Sigmas at rescheduled stages are derived from the rescheduled alpha_bar.
  bool sigma_rederived = true;
};

struct RunResult {
  ImageTensor image;
  RunTrace trace;
};

// Truncate-and-relay sampling: Gaussian noise at the first stage's shape,
// exactly plan.total_steps reverse steps spread over the stages, relays in
// between. Bit-deterministic in (plan, denoiser, conditions, seed).
RunResult run_pipeline(const StagePlan& plan, const Denoiser& d, const LatentCodec* codec,
                       const NoiseSchedule& base, const Conditions& conds, double w,
                       std::uint64_t seed, const RunOptions& opt = {});

// Baseline: all steps at the first stage's resolution, then one upsample to
// the final resolution with the plan's upsampler.
RunResult run_direct_upsample(const StagePlan& plan, const Denoiser& d, const LatentCodec* codec,
                              const NoiseSchedule& base, const Conditions& conds, double w,
                              std::uint64_t seed, const RunOptions& opt = {});

// The noise schedule a stage samples with.
NoiseSchedule stage_schedule(const Stage& stage, const NoiseSchedule& base);

// CSV manifest: stage,global_t,min,max,mean,std
std::string trace_manifest_csv(const RunTrace& trace);

}  // namespace mf
