#include "mf/tiny_denoiser.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mf/io.hpp"
#include "mf/rng.hpp"

namespace mf {

namespace {
constexpr std::size_t kKernel = 3;
}

std::size_t TinyDenoiser::Block::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

TinyDenoiser::TinyDenoiser(TinyDenoiserConfig cfg) : cfg_(cfg) {
  if (cfg_.data_channels == 0 || cfg_.hidden == 0) {
    throw std::invalid_argument("TinyDenoiser: data_channels and hidden must be positive");
  }
  if (cfg_.embed_dim == 0 || cfg_.embed_dim % 2 != 0) {
    throw std::invalid_argument("TinyDenoiser: embed_dim must be even and positive");
  }
  const std::size_t in = cfg_.data_channels + cfg_.cond_channels;
  const std::size_t kk = kKernel * kKernel;
  std::size_t off = 0;
  auto take = [&off](std::size_t n) {
    const std::size_t o = off;
    off += n;
    return o;
  };
  off_w1_ = take(cfg_.hidden * in * kk);
  off_b1_ = take(cfg_.hidden);
  off_w2_ = take(cfg_.hidden * cfg_.hidden * kk);
  off_b2_ = take(cfg_.hidden);
  off_w3_ = take(cfg_.data_channels * cfg_.hidden * kk);
  off_b3_ = take(cfg_.data_channels);
  off_time_ = take(cfg_.hidden * cfg_.embed_dim);
  off_cond_ = take(cfg_.hidden * cfg_.text_dim);
  off_null_ = take(cfg_.text_dim);
  params_.assign(off, 0.0);
}

std::vector<TinyDenoiser::Block> TinyDenoiser::blocks() const {
  const std::size_t in = cfg_.data_channels + cfg_.cond_channels;
  return {
      {"conv1.weight", off_w1_, {cfg_.hidden, in, kKernel, kKernel}},
      {"conv1.bias", off_b1_, {cfg_.hidden}},
      {"conv2.weight", off_w2_, {cfg_.hidden, cfg_.hidden, kKernel, kKernel}},
      {"conv2.bias", off_b2_, {cfg_.hidden}},
      {"conv3.weight", off_w3_, {cfg_.data_channels, cfg_.hidden, kKernel, kKernel}},
      {"conv3.bias", off_b3_, {cfg_.data_channels}},
      {"time.weight", off_time_, {cfg_.hidden, cfg_.embed_dim}},
      {"cond.weight", off_cond_, {cfg_.hidden, cfg_.text_dim}},
      {"cond.null", off_null_, {cfg_.text_dim}},
  };
}

TinyDenoiser TinyDenoiser::initialized(TinyDenoiserConfig cfg, std::uint64_t seed) {
  TinyDenoiser d(cfg);
  Rng rng(seed);
  const std::size_t in = cfg.data_channels + cfg.cond_channels;
  auto fill = [&](std::size_t off, std::size_t n, double stddev) {
    for (std::size_t i = 0; i < n; ++i) d.params_[off + i] = stddev * rng.normal();
  };
  const double kk = kKernel * kKernel;
  fill(d.off_w1_, cfg.hidden * in * kKernel * kKernel, std::sqrt(2.0 / (in * kk)));
  fill(d.off_w2_, cfg.hidden * cfg.hidden * kKernel * kKernel, std::sqrt(2.0 / (cfg.hidden * kk)));
  fill(d.off_w3_, cfg.data_channels * cfg.hidden * kKernel * kKernel,
       0.5 * std::sqrt(1.0 / (cfg.hidden * kk)));
  fill(d.off_time_, cfg.hidden * cfg.embed_dim, 0.1);
  return d;
}

ConvKernel TinyDenoiser::layer(int index) const {
  const std::size_t in = cfg_.data_channels + cfg_.cond_channels;
  std::size_t oc = cfg_.hidden, ic = in, w_off = off_w1_, b_off = off_b1_;
  if (index == 1) {
    ic = cfg_.hidden;
    w_off = off_w2_;
    b_off = off_b2_;
  } else if (index == 2) {
    oc = cfg_.data_channels;
    ic = cfg_.hidden;
    w_off = off_w3_;
    b_off = off_b3_;
  }
  ConvKernel k = ConvKernel::zeros(oc, ic, kKernel);
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(w_off), k.weights.size(),
              k.weights.begin());
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(b_off), oc, k.bias.begin());
  if (index == 1) k.dilation = middle_dilation_;
  return k;
}

std::vector<double> TinyDenoiser::time_embedding(int t, int num_steps) const {
  const double s = static_cast<double>(t) / static_cast<double>(num_steps);
  const std::size_t half = cfg_.embed_dim / 2;
  std::vector<double> e(cfg_.embed_dim);
  for (std::size_t j = 0; j < half; ++j) {
    const double freq = std::numbers::pi * static_cast<double>(1u << j);
    e[j] = std::sin(freq * s);
    e[half + j] = std::cos(freq * s);
  }
  return e;
}

struct TinyDenoiser::Forward {
  ImageTensor x_in, a1, h1, a2, h2, y;
  std::vector<double> emb;
  std::vector<double> cond;  // condition actually used (text or null)
  bool used_null = false;
};

namespace {

ImageTensor leaky(const ImageTensor& a, double slope) {
  ImageTensor h = a;
  for (auto& v : h.data()) v = v > 0.0 ? v : slope * v;
  return h;
}

}  // namespace

TinyDenoiser::Forward TinyDenoiser::forward(const DenoiseRequest& req) const {
  const ImageTensor& x = req.input;
  if (x.channels() != cfg_.data_channels) {
    throw std::invalid_argument("TinyDenoiser: input " + x.shape().str() + " but model has " +
                                std::to_string(cfg_.data_channels) + " data channels");
  }
  if (req.t < 1 || req.t > req.schedule.num_steps()) {
    throw std::out_of_range("TinyDenoiser: timestep out of range");
  }
  if (!req.text_cond.empty() && req.text_cond.size() != cfg_.text_dim) {
    throw std::invalid_argument("TinyDenoiser: condition vector length " +
                                std::to_string(req.text_cond.size()) + ", expected " +
                                std::to_string(cfg_.text_dim));
  }
  Forward f;
  if (cfg_.cond_channels > 0) {
    if (!req.image_cond || req.image_cond->channels() != cfg_.cond_channels) {
      throw std::invalid_argument("TinyDenoiser: image condition with " +
                                  std::to_string(cfg_.cond_channels) + " channels required");
    }
    if (req.image_cond->height() != x.height() || req.image_cond->width() != x.width()) {
      throw std::invalid_argument("TinyDenoiser: image condition " + req.image_cond->shape().str() +
                                  " vs input " + x.shape().str());
    }
    f.x_in = concat_channels(x, *req.image_cond);
  } else {
    f.x_in = x;
  }

  f.emb = time_embedding(req.t, req.schedule.num_steps());
  if (req.text_cond.empty()) {
    f.cond.assign(params_.begin() + static_cast<std::ptrdiff_t>(off_null_),
                  params_.begin() + static_cast<std::ptrdiff_t>(off_null_ + cfg_.text_dim));
    f.used_null = true;
  } else {
    f.cond.assign(req.text_cond.begin(), req.text_cond.end());
  }

  f.a1 = conv2d(f.x_in, layer(0));
  for (std::size_t c = 0; c < cfg_.hidden; ++c) {
    double shift = 0.0;
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j)
      shift += params_[off_time_ + c * cfg_.embed_dim + j] * f.emb[j];
    for (std::size_t j = 0; j < cfg_.text_dim; ++j)
      shift += params_[off_cond_ + c * cfg_.text_dim + j] * f.cond[j];
    for (auto& v : f.a1.channel(c)) v += shift;
  }
  f.h1 = leaky(f.a1, cfg_.negative_slope);
  f.a2 = conv2d(f.h1, layer(1));
  f.h2 = leaky(f.a2, cfg_.negative_slope);
  f.y = conv2d(f.h2, layer(2));
  return f;
}

std::vector<bool> TinyDenoiser::activation_pattern(const DenoiseRequest& req) const {
  const Forward f = forward(req);
  std::vector<bool> signs;
  signs.reserve(f.a1.data().size() + f.a2.data().size());
  for (double v : f.a1.data()) signs.push_back(v > 0.0);
  for (double v : f.a2.data()) signs.push_back(v > 0.0);
  return signs;
}

ImageTensor TinyDenoiser::predict_eps(const DenoiseRequest& req) const { return forward(req).y; }

TinyDenoiser TinyDenoiser::set_middle_dilation(std::size_t delta) const {
  if (delta == 0) throw std::invalid_argument("set_middle_dilation: delta must be >= 1");
  TinyDenoiser d = *this;
  d.middle_dilation_ = delta;
  return d;
}

std::unique_ptr<Denoiser> TinyDenoiser::with_middle_dilation(std::size_t delta) const {
  return std::make_unique<TinyDenoiser>(set_middle_dilation(delta));
}

double TinyDenoiser::loss_and_grad(const DenoiseRequest& req, const ImageTensor& target,
                                   std::span<double> grad) const {
  Forward f = forward(req);
  require_same_shape(f.y, target, "TinyDenoiser::loss_and_grad");
  const double n = static_cast<double>(target.size());
  ImageTensor dy(f.y.shape());
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = f.y.data()[i] - target.data()[i];
    loss += r * r;
    dy.data()[i] = 2.0 * r / n;
  }
  loss /= n;
  if (grad.empty()) return loss;
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("loss_and_grad: gradient buffer has wrong size");
  }

  auto sub = [&grad](std::size_t off, std::size_t count) { return grad.subspan(off, count); };
  const ConvKernel k1 = layer(0), k2 = layer(1), k3 = layer(2);
  const double slope = cfg_.negative_slope;

  conv2d_backward_params(f.h2, dy, k3, sub(off_w3_, k3.weights.size()), sub(off_b3_, k3.bias.size()));
  ImageTensor g = conv2d_backward_input(dy, k3, cfg_.hidden);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= f.a2.data()[i] > 0.0 ? 1.0 : slope;

  conv2d_backward_params(f.h1, g, k2, sub(off_w2_, k2.weights.size()), sub(off_b2_, k2.bias.size()));
  g = conv2d_backward_input(g, k2, cfg_.hidden);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= f.a1.data()[i] > 0.0 ? 1.0 : slope;

  conv2d_backward_params(f.x_in, g, k1, sub(off_w1_, k1.weights.size()), sub(off_b1_, k1.bias.size()));
  for (std::size_t c = 0; c < cfg_.hidden; ++c) {
    double gc = 0.0;
    for (double v : g.channel(c)) gc += v;
    for (std::size_t j = 0; j < cfg_.embed_dim; ++j) grad[off_time_ + c * cfg_.embed_dim + j] += gc * f.emb[j];
    for (std::size_t j = 0; j < cfg_.text_dim; ++j) {
      grad[off_cond_ + c * cfg_.text_dim + j] += gc * f.cond[j];
      if (f.used_null) grad[off_null_ + j] += gc * params_[off_cond_ + c * cfg_.text_dim + j];
    }
  }
  return loss;
}

void save_weights(const TinyDenoiser& d, const std::filesystem::path& path) {
  const auto& c = d.config();
  char line[256];
  std::snprintf(line, sizeof line, "MFW1\nconfig %zu %zu %zu %zu %zu %.17g\n", c.data_channels,
                c.cond_channels, c.text_dim, c.hidden, c.embed_dim, c.negative_slope);
  std::string out = line;
  for (const auto& b : d.blocks()) {
    out += b.name;
    for (auto dim : b.dims) out += " " + std::to_string(dim);
    out += "\n";
  }
  out += "end\n";
  for (double v : d.params()) put_f32_le(out, static_cast<float>(v));
  write_text(path, out);
}

TinyDenoiser load_weights(const std::filesystem::path& path) {
  const std::string raw = read_text(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = raw.find('\n', pos);
    if (nl == std::string::npos) throw IoError("truncated MFW1 header: " + path.string());
    std::string l = raw.substr(pos, nl - pos);
    pos = nl + 1;
    return l;
  };
  if (next_line() != "MFW1") throw IoError("not an MFW1 weight file: " + path.string());
  TinyDenoiserConfig cfg;
  {
    std::istringstream in(next_line());
    std::string tag;
    in >> tag >> cfg.data_channels >> cfg.cond_channels >> cfg.text_dim >> cfg.hidden >>
        cfg.embed_dim >> cfg.negative_slope;
    if (tag != "config" || !in) throw IoError("bad MFW1 config line: " + path.string());
  }
  TinyDenoiser d(cfg);
  for (const auto& b : d.blocks()) {
    std::istringstream in(next_line());
    std::string name;
    in >> name;
    std::vector<std::size_t> dims;
    std::size_t v;
    while (in >> v) dims.push_back(v);
    if (name != b.name || dims != b.dims) {
      throw IoError("MFW1 block mismatch at '" + name + "': " + path.string());
    }
  }
  if (next_line() != "end") throw IoError("MFW1 header not terminated: " + path.string());
  if (raw.size() != pos + 4 * d.num_params()) throw IoError("MFW1 payload size mismatch: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data() + pos);
  auto params = d.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] = get_f32_le(p + 4 * i);
  return d;
}

TrainResult train_tiny(TinyDenoiser d, const SampleSource& data, const NoiseSchedule& s,
                       const TrainOptions& opt) {
  if (opt.steps < 0 || opt.batch == 0) throw std::invalid_argument("train_tiny: bad options");
  TrainResult result{std::move(d), {}};
  TinyDenoiser& model = result.model;
  Rng rng(opt.seed);
  std::vector<double> velocity(model.num_params(), 0.0);
  std::vector<double> grad(model.num_params());
  result.losses.reserve(static_cast<std::size_t>(opt.steps));

  for (int step = 0; step < opt.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < opt.batch; ++b) {
      TrainingSample sample = data(rng);
      const int t = static_cast<int>(rng.uniform_int(1, s.num_steps()));
      const ImageTensor eps = gaussian_noise(sample.image.shape(), rng);
      const ImageTensor xt = forward_diffuse(sample.image, t, eps, s);
      const bool drop = rng.uniform() < opt.uncond_prob;
      DenoiseRequest req{xt, t, s};
      if (!drop) req.text_cond = sample.cond;
      loss += model.loss_and_grad(req, eps, grad);
    }
    loss /= static_cast<double>(opt.batch);
    if (!std::isfinite(loss)) {
      throw NumericError("TRAIN_NONFINITE: loss became non-finite at step " + std::to_string(step));
    }
    result.losses.push_back(loss);
    auto params = model.params();
    const double scale = 1.0 / static_cast<double>(opt.batch);
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity[i] = opt.momentum * velocity[i] - opt.learning_rate * grad[i] * scale;
      params[i] += velocity[i];
    }
  }
  return result;
}

std::string loss_trace_csv(const std::vector<double>& losses) {
  std::string out = "step,mse\n";
  char line[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i, losses[i]);
    out += line;
  }
  return out;
}

GradCheckReport grad_check_report(const TinyDenoiser& d, const DenoiseRequest& probe,
                                  const ImageTensor& target, double h) {
  GradCheckReport r;
  std::vector<double> analytic(d.num_params(), 0.0);
  d.loss_and_grad(probe, target, analytic);
  const auto base = d.activation_pattern(probe);
  TinyDenoiser work = d;
  auto params = work.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = work.loss_and_grad(probe, target, {});
    bool crossed = work.activation_pattern(probe) != base;
    params[i] = orig - h;
    const double down = work.loss_and_grad(probe, target, {});
    crossed = crossed || work.activation_pattern(probe) != base;
    params[i] = orig;
    if (crossed) ++r.kink_crossings;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
    const double rel = std::abs(analytic[i] - fd) / denom;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_param = i;
    }
  }
  return r;
}

double grad_check(const TinyDenoiser& d, const DenoiseRequest& probe, const ImageTensor& target,
                  double h) {
  return grad_check_report(d, probe, target, h).max_rel_error;
}

}  // namespace mf
