#include "mf/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "mf/analysis.hpp"

namespace mf {

std::string to_string(Space s) { return s == Space::latent ? "latent" : "pixel"; }
std::string to_string(RelayNoiseSource s) {
  return s == RelayNoiseSource::original ? "original" : "rescheduled";
}
std::string to_string(StepRule r) { return r == StepRule::ancestral ? "ancestral" : "ddim"; }

Space parse_space(const std::string& s) {
  if (s == "pixel") return Space::pixel;
  if (s == "latent") return Space::latent;
  throw std::invalid_argument("unknown space '" + s + "'");
}

RelayNoiseSource parse_relay_noise_source(const std::string& s) {
  if (s == "rescheduled") return RelayNoiseSource::rescheduled;
  if (s == "original") return RelayNoiseSource::original;
  throw std::invalid_argument("unknown relay_noise_source '" + s + "'");
}

StepRule parse_step_rule(const std::string& s) {
  if (s == "ddim") return StepRule::ddim;
  if (s == "ancestral") return StepRule::ancestral;
  throw std::invalid_argument("unknown sampler '" + s + "'");
}

void StagePlan::validate() const {
  if (stages.empty()) throw std::invalid_argument("StagePlan: no stages");
  int sum = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    if (s.steps < 1) throw std::invalid_argument("StagePlan: stage " + std::to_string(i) + " has no steps");
    if (s.height == 0 || s.width == 0) throw std::invalid_argument("StagePlan: zero resolution");
    if (s.dilation == 0) throw std::invalid_argument("StagePlan: dilation must be >= 1");
    if (s.gamma && !(*s.gamma > 0.0)) throw std::invalid_argument("StagePlan: gamma must be > 0");
    if (i > 0 && (s.height < stages[i - 1].height || s.width < stages[i - 1].width)) {
      throw std::invalid_argument("StagePlan: resolutions must be non-decreasing");
    }
    sum += s.steps;
  }
  if (sum != total_steps) {
    throw std::invalid_argument("StagePlan: stage steps sum to " + std::to_string(sum) +
                                ", declared total " + std::to_string(total_steps));
  }
}

int StagePlan::relay_timestep(std::size_t i) const {
  if (i >= stages.size()) throw std::out_of_range("relay_timestep: no such stage");
  int consumed = 0;
  for (std::size_t j = 0; j <= i; ++j) consumed += stages[j].steps;
  return total_steps - consumed + 1;
}

StagePlan final_resolution_plan(const StagePlan& plan) {
  plan.validate();
  StagePlan out = plan;
  Stage last = plan.stages.back();
  last.steps = plan.total_steps;
  last.gamma.reset();
  last.dilation = 1;
  out.stages = {last};
  return out;
}

NoiseSchedule stage_schedule(const Stage& stage, const NoiseSchedule& base) {
  if (!stage.gamma || *stage.gamma == 1.0) return base;
  return reschedule(base, RescheduleParams{*stage.gamma});
}

ImageTensor clean_estimate(const ImageTensor& z, const ImageTensor& eps_hat, int t,
                           const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  return lincomb(1.0 / std::sqrt(ab), z, -std::sqrt(s.one_minus_alpha_bar(t)) / std::sqrt(ab), eps_hat);
}

ImageTensor apply_reverse_update(const ImageTensor& z, const ImageTensor& eps_hat, int t,
                                 const NoiseSchedule& s, StepRule rule,
                                 const ImageTensor* noise) {
  require_same_shape(z, eps_hat, "reverse update");
  if (t < 1 || t > s.num_steps()) {
    throw std::out_of_range("reverse update: timestep " + std::to_string(t) +
                            " outside schedule of " + std::to_string(s.num_steps()) + " steps");
  }
  const double sigma = s.sigma(t);
  ImageTensor next;
  if (rule == StepRule::ancestral) {
    const double a = s.alpha(t);
    next = lincomb(1.0 / std::sqrt(a), z, -s.beta(t) / (std::sqrt(s.one_minus_alpha_bar(t)) * std::sqrt(a)),
                   eps_hat);
  } else {
    const double ab_prev = s.alpha_bar(t - 1);
    const ImageTensor x0 = clean_estimate(z, eps_hat, t, s);
    const double dir = std::sqrt(std::max(0.0, s.one_minus_alpha_bar(t - 1) - sigma * sigma));
    next = lincomb(std::sqrt(ab_prev), x0, dir, eps_hat);
  }
  if (sigma > 0.0) {
    if (!noise) throw std::invalid_argument("reverse update: sigma > 0 requires noise");
    require_same_shape(z, *noise, "reverse update noise");
    auto& nd = next.data();
    for (std::size_t i = 0; i < nd.size(); ++i) nd[i] += sigma * noise->data()[i];
  }
  return next;
}

namespace {

ImageTensor guided(const RunState& state, const Denoiser& d, const NoiseSchedule& s,
                   const Guidance& g) {
  DenoiseRequest req{state.current, state.t, s, g.text_cond, g.image_cond};
  return guided_eps(d, req, g.weight);
}

}  // namespace

void reverse_step(RunState& state, const Denoiser& d, const NoiseSchedule& s, const Guidance& g,
                  StepRule rule) {
  if (state.t < 1) throw std::out_of_range("reverse_step: state already at t = 0");
  if (state.t > s.num_steps()) throw std::out_of_range("reverse_step: schedule/timestep mismatch");
  const ImageTensor eps_hat = guided(state, d, s, g);
  std::optional<ImageTensor> noise;
  if (s.sigma(state.t) > 0.0) noise = gaussian_noise(state.current.shape(), state.rng);
  state.current = apply_reverse_update(state.current, eps_hat, state.t, s, rule,
                                       noise ? &*noise : nullptr);
  --state.t;
  ++state.steps_taken;
}

ImageTensor predict_clean(const RunState& state, const Denoiser& d, const NoiseSchedule& s,
                          const Guidance& g) {
  if (state.t < 1) return state.current;
  return clean_estimate(state.current, guided(state, d, s, g), state.t, s);
}

ImageTensor truncate_and_relay(RunState& state, const StagePlan& plan, const LatentCodec* codec,
                               std::span<const NoiseSchedule> schedules, const NoiseSchedule& base,
                               const Denoiser& d, const Guidance& g) {
  const std::size_t i = state.stage_index;
  if (i + 1 >= plan.stages.size()) throw std::logic_error("truncate_and_relay: plan exhausted");
  if (schedules.size() != plan.stages.size()) {
    throw std::invalid_argument("truncate_and_relay: one schedule per stage required");
  }
  if (state.t != plan.relay_level(i)) {
    throw std::logic_error("truncate_and_relay: state at t = " + std::to_string(state.t) +
                           ", stage " + std::to_string(i) + " relays at " +
                           std::to_string(plan.relay_level(i)));
  }
  const bool latent = plan.space == Space::latent;
  if (latent && !codec) throw std::invalid_argument("truncate_and_relay: latent plan needs a codec");
  const Stage& next = plan.stages[i + 1];

  const ImageTensor clean = predict_clean(state, d, schedules[i], g);
  const ImageTensor image = latent ? codec->decode(clean) : clean;
  ImageTensor up = resample(image, plan.upsampler, next.height, next.width);
  const ImageTensor relay_clean = latent ? codec->encode(up) : up;

  const NoiseSchedule& noise_schedule =
      plan.relay_noise_source == RelayNoiseSource::rescheduled ? schedules[i + 1] : base;
  const double ab = noise_schedule.alpha_bar(state.t);
  const double c = noise_schedule.one_minus_alpha_bar(state.t);
  const ImageTensor eps = gaussian_noise(relay_clean.shape(), state.rng);
  state.current = lincomb(std::sqrt(ab), relay_clean, std::sqrt(c), eps);
  ++state.stage_index;
  return up;
}

namespace {

Shape state_shape(const Stage& stage, std::size_t channels, Space space, const LatentCodec* codec) {
  const Shape image{channels, stage.height, stage.width};
  return space == Space::latent ? codec->latent_shape(image) : image;
}

}  // namespace

RunResult run_pipeline(const StagePlan& plan, const Denoiser& d, const LatentCodec* codec,
                       const NoiseSchedule& base, const Conditions& conds, double w,
                       std::uint64_t seed, const RunOptions& opt) {
  plan.validate();
  if (base.num_steps() != plan.total_steps) {
    throw std::invalid_argument("run_pipeline: schedule has " + std::to_string(base.num_steps()) +
                                " steps, plan needs " + std::to_string(plan.total_steps));
  }
  const bool latent = plan.space == Space::latent;
  if (latent && !codec) throw std::invalid_argument("run_pipeline: latent plan needs a codec");
  std::size_t image_channels = d.data_channels();
  if (latent) {
    if (d.data_channels() % codec->patch_size() != 0) {
      throw std::invalid_argument("run_pipeline: denoiser channels not a multiple of codec patch");
    }
    image_channels = d.data_channels() / codec->patch_size();
  }

  std::vector<NoiseSchedule> schedules;
  schedules.reserve(plan.stages.size());
  for (const auto& st : plan.stages) schedules.push_back(stage_schedule(st, base));

  RunResult result;
  RunTrace& trace = result.trace;
  RunState state{ImageTensor{}, plan.total_steps, 0, Rng(seed), 0};
  state.current = gaussian_noise(state_shape(plan.stages[0], image_channels, plan.space, codec),
                                 state.rng);

  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const Stage& stage = plan.stages[i];
    std::unique_ptr<Denoiser> redilated;
    if (stage.dilation != d.middle_dilation()) redilated = d.with_middle_dilation(stage.dilation);
    const Denoiser& active = redilated ? *redilated : d;

    std::optional<ImageTensor> cond_image;
    if (conds.image) {
      cond_image = resample(*conds.image, plan.upsampler, state.current.height(),
                            state.current.width());
    }
    Guidance g{w, conds.text, cond_image ? &*cond_image : nullptr};
    trace.stages.push_back({i, state.current.shape(), stage.steps, stage.gamma.value_or(1.0),
                            active.middle_dilation(),
                            cond_image ? std::optional<Shape>(cond_image->shape()) : std::nullopt});

    for (int k = 0; k < stage.steps; ++k) {
      if (opt.on_step) opt.on_step({i, state.t, state.current, active.middle_dilation()});
      reverse_step(state, active, schedules[i], g, opt.rule);
      if (!state.current.all_finite()) {
        throw NumericError("RUN_NONFINITE: stage " + std::to_string(i) + ", t = " +
                           std::to_string(state.t + 1));
      }
    }

    if (i + 1 < plan.stages.size()) {
      const int label = plan.relay_timestep(i);
      ImageTensor up = truncate_and_relay(state, plan, codec, schedules, base, active, g);
      trace.snapshots.push_back({i, label, std::move(up)});
      require_finite(state.current, "relay after stage " + std::to_string(i));
    }
  }
  trace.total_steps = state.steps_taken;
  result.image = latent ? codec->decode(state.current) : state.current;
  trace.snapshots.push_back({plan.stages.size() - 1, 0, result.image});
  return result;
}

RunResult run_direct_upsample(const StagePlan& plan, const Denoiser& d, const LatentCodec* codec,
                              const NoiseSchedule& base, const Conditions& conds, double w,
                              std::uint64_t seed, const RunOptions& opt) {
  plan.validate();
  StagePlan single = plan;
  Stage first = plan.stages.front();
  first.steps = plan.total_steps;
  first.gamma.reset();
  first.dilation = 1;
  single.stages = {first};
  RunResult r = run_pipeline(single, d, codec, base, conds, w, seed, opt);
  const Stage& last = plan.stages.back();
  r.image = resample(r.image, plan.upsampler, last.height, last.width);
  r.trace.snapshots.back().image = r.image;
  return r;
}

std::string trace_manifest_csv(const RunTrace& trace) {
  std::string out = "stage,global_t,min,max,mean,std\n";
  char line[192];
  for (const auto& s : trace.snapshots) {
    const Moments m = moments(s.image);
    std::snprintf(line, sizeof line, "%zu,%d,%.9g,%.9g,%.9g,%.9g\n", s.stage, s.global_t, m.min,
                  m.max, m.mean, m.std);
    out += line;
  }
  return out;
}

}  // namespace mf
