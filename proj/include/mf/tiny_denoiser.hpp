#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "mf/denoiser.hpp"
#include "mf/rng.hpp"
#include "mf/tensorops.hpp"

namespace mf {

struct TinyDenoiserConfig {
  std::size_t data_channels = 1;
  std::size_t cond_channels = 0;  // extra input channels for image conditioning
  std::size_t text_dim = 0;       // length of the text-like condition vector
  std::size_t hidden = 16;
  std::size_t embed_dim = 8;      // sinusoidal timestep embedding width (even)
  double negative_slope = 0.1;    // leaky rectifier; 1.0 makes the net linear

  bool operator==(const TinyDenoiserConfig&) const = default;
};

// Three 3x3 convolutions (in -> C -> C -> out) with leaky-rectifier
// activations. The first layer also receives per-channel biases from the
// timestep embedding and from the condition vector (or a learned null vector
// when the request is unconditional). Only the middle layer is ever dilated.
class TinyDenoiser final : public Denoiser {
 public:
  explicit TinyDenoiser(TinyDenoiserConfig cfg);
  // He-style normal initialisation from a seed; biases start at zero.
  static TinyDenoiser initialized(TinyDenoiserConfig cfg, std::uint64_t seed);

  ImageTensor predict_eps(const DenoiseRequest& req) const override;
  std::size_t data_channels() const override { return cfg_.data_channels; }
  std::size_t middle_dilation() const override { return middle_dilation_; }
  std::unique_ptr<Denoiser> with_middle_dilation(std::size_t delta) const override;

  TinyDenoiser set_middle_dilation(std::size_t delta) const;

  // Mean squared error against `target`; accumulates d(loss)/d(params) into
  // `grad` when it is non-empty.
  double loss_and_grad(const DenoiseRequest& req, const ImageTensor& target,
                       std::span<double> grad) const;

  const TinyDenoiserConfig& config() const { return cfg_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Parameter blocks in storage order.
  struct Block {
    const char* name;
    std::size_t offset;
    std::vector<std::size_t> dims;
    std::size_t count() const;
  };
  std::vector<Block> blocks() const;

  std::vector<double> time_embedding(int t, int num_steps) const;

  // Sign of every hidden pre-activation (both leaky-ReLU layers) for req.
  std::vector<bool> activation_pattern(const DenoiseRequest& req) const;

  bool operator==(const TinyDenoiser& o) const {
    return cfg_ == o.cfg_ && params_ == o.params_ && middle_dilation_ == o.middle_dilation_;
  }

 private:
  struct Forward;
  Forward forward(const DenoiseRequest& req) const;
  ConvKernel layer(int index) const;

  TinyDenoiserConfig cfg_;
  std::vector<double> params_;
  std::size_t middle_dilation_ = 1;

  std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0, off_w3_ = 0, off_b3_ = 0;
  std::size_t off_time_ = 0, off_cond_ = 0, off_null_ = 0;
};

// Weight file: ASCII lines "MFW1", "config <data> <cond> <text> <hidden>
// <embed> <slope>", one "<block> <dims...>" line per parameter block, "end",
// then every parameter as little-endian float32 in block order.
void save_weights(const TinyDenoiser& d, const std::filesystem::path& path);
TinyDenoiser load_weights(const std::filesystem::path& path);

struct TrainingSample {
  ImageTensor image;
  std::vector<double> cond;  // text-like condition; empty when unlabelled
};
using SampleSource = std::function<TrainingSample(Rng&)>;

struct TrainOptions {
  int steps = 2000;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::size_t batch = 4;
  double uncond_prob = 0.1;  // condition dropout so the null vector is learned
  std::uint64_t seed = 0;
};

struct TrainResult {
  TinyDenoiser model;
  std::vector<double> losses;  // batch-mean MSE before each update
};

// SGD with momentum on the epsilon-prediction MSE at uniformly drawn t.
// Deterministic given the options; throws NumericError on a non-finite loss.
TrainResult train_tiny(TinyDenoiser d, const SampleSource& data, const NoiseSchedule& s,
                       const TrainOptions& opt);

std::string loss_trace_csv(const std::vector<double>& losses);

// Max relative error between backpropagated gradients and central finite
// differences (step h) over every parameter.
double grad_check(const TinyDenoiser& d, const DenoiseRequest& probe, const ImageTensor& target,
                  double h = 1e-4);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  // Parameters whose +-h evaluations flip a leaky-ReLU sign relative to the
  // unperturbed probe. The central difference is not a valid oracle there.
  std::size_t kink_crossings = 0;
};

GradCheckReport grad_check_report(const TinyDenoiser& d, const DenoiseRequest& probe,
                                  const ImageTensor& target, double h = 1e-4);

}  // namespace mf
