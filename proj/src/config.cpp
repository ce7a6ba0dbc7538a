#include "mf/config.hpp"

#include <json.hpp>

#include "mf/io.hpp"
#include "mf/presets.hpp"
#include "mf/tiny_denoiser.hpp"

namespace mf {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw ConfigError("CONFIG_INVALID", msg); }

json parse_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("CONFIG_PARSE", e.what());
  }
  if (!doc.is_object()) invalid("top level must be an object");
  if (!doc.contains("spec_version")) invalid("missing spec_version");
  if (doc.at("spec_version") != kSpecVersion) {
    invalid("unsupported spec_version " + doc.at("spec_version").dump());
  }
  return doc;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(std::string("field '") + key + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ScheduleSpec parse_schedule(const json& j) {
  ScheduleSpec s;
  s.kind = get_or<std::string>(j, "kind", s.kind);
  if (s.kind != "linear" && s.kind != "scaled_linear") invalid("unknown schedule kind " + s.kind);
  s.beta_start = get_or(j, "beta_start", s.beta_start);
  s.beta_end = get_or(j, "beta_end", s.beta_end);
  s.eta = get_or(j, "eta", s.eta);
  try {
    s.rule = parse_step_rule(get_or<std::string>(j, "sampler", "ddim"));
  } catch (const std::invalid_argument& e) {
    invalid(e.what());
  }
  return s;
}

void parse_plan(const json& j, StagePlan& plan) {
  try {
    if (j.contains("stages")) {
      plan.stages.clear();
      int total = 0;
      for (const auto& st : j.at("stages")) {
        Stage s;
        s.height = st.at("height").get<std::size_t>();
        s.width = get_or<std::size_t>(st, "width", s.height);
        s.steps = st.at("steps").get<int>();
        if (st.contains("gamma") && !st.at("gamma").is_null()) s.gamma = st.at("gamma").get<double>();
        s.dilation = get_or<std::size_t>(st, "dilation", 1);
        total += s.steps;
        plan.stages.push_back(s);
      }
      plan.total_steps = get_or(j, "total_steps", total);
    }
    if (j.contains("space")) plan.space = parse_space(j.at("space").get<std::string>());
    if (j.contains("upsampler")) plan.upsampler = parse_resample_method(j.at("upsampler").get<std::string>());
    if (j.contains("relay_noise_source")) {
      plan.relay_noise_source = parse_relay_noise_source(j.at("relay_noise_source").get<std::string>());
    }
  } catch (const json::exception& e) {
    invalid(std::string("plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    invalid(std::string("plan: ") + e.what());
  }
}

}  // namespace

RunConfig preset_run_config(const std::string& preset) {
  RunConfig cfg;
  try {
    Preset p = make_preset(preset, true);
    cfg.preset = preset;
    cfg.plan = p.plan;
    cfg.guidance = p.guidance;
  } catch (const std::invalid_argument& e) {
    invalid(e.what());
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_document(json_text);
  RunConfig cfg;
  cfg.enhanced = get_or(doc, "enhanced", true);
  if (doc.contains("preset")) {
    cfg.preset = doc.at("preset").get<std::string>();
    try {
      Preset p = make_preset(cfg.preset, cfg.enhanced);
      cfg.plan = p.plan;
      cfg.guidance = p.guidance;
    } catch (const std::invalid_argument& e) {
      invalid(e.what());
    }
  }
  if (doc.contains("plan")) parse_plan(doc.at("plan"), cfg.plan);
  if (cfg.plan.stages.empty()) invalid("config needs a preset or plan.stages");
  try {
    cfg.plan.validate();
  } catch (const std::invalid_argument& e) {
    invalid(e.what());
  }

  if (doc.contains("schedule")) cfg.schedule = parse_schedule(doc.at("schedule"));
  if (doc.contains("denoiser")) {
    const json& d = doc.at("denoiser");
    cfg.denoiser.kind = get_or<std::string>(d, "kind", "oracle");
    cfg.denoiser.mu = get_or<std::vector<double>>(d, "mu", {});
    cfg.denoiser.sigma2 = get_or<std::vector<double>>(d, "sigma2", {});
    if (d.contains("weights")) cfg.denoiser.weights = resolve(base_dir, d.at("weights").get<std::string>());
    if (cfg.denoiser.kind != "oracle" && cfg.denoiser.kind != "tiny") {
      invalid("unknown denoiser kind " + cfg.denoiser.kind);
    }
    if (cfg.denoiser.kind == "tiny" && cfg.denoiser.weights.empty()) invalid("tiny denoiser needs weights");
  }
  if (doc.contains("codec")) {
    const json& c = doc.at("codec");
    if (c.contains("enabled")) cfg.codec.enabled = c.at("enabled").get<bool>();
    cfg.codec.factor = get_or<std::size_t>(c, "factor", 2);
    cfg.codec.lossy = get_or(c, "lossy", false);
  }
  cfg.channels = get_or<std::size_t>(doc, "channels", cfg.channels);
  if (cfg.channels == 0) invalid("channels must be positive");
  cfg.guidance = get_or(doc, "guidance", cfg.guidance);
  cfg.text_cond = get_or<std::vector<double>>(doc, "text_cond", {});
  if (doc.contains("image_cond")) cfg.image_cond = resolve(base_dir, doc.at("image_cond").get<std::string>());
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (doc.contains("out")) cfg.out = resolve(base_dir, doc.at("out").get<std::string>());
  cfg.trace = get_or(doc, "trace", true);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError("CONFIG_NOT_FOUND", e.what());
  }
  return parse_run_config(text, path.parent_path());
}

TrainConfig parse_train_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_document(json_text);
  TrainConfig cfg;
  const json t = doc.value("train", json::object());
  cfg.steps = get_or(t, "steps", cfg.steps);
  cfg.learning_rate = get_or(t, "lr", cfg.learning_rate);
  cfg.momentum = get_or(t, "momentum", cfg.momentum);
  cfg.batch = get_or(t, "batch", cfg.batch);
  cfg.uncond_prob = get_or(t, "uncond_prob", cfg.uncond_prob);
  cfg.hidden = get_or(t, "hidden", cfg.hidden);
  cfg.channels = get_or(t, "channels", cfg.channels);
  cfg.size = get_or(t, "size", cfg.size);
  cfg.codec_factor = get_or(t, "codec_factor", cfg.codec_factor);
  cfg.class_conditional = get_or(t, "class_conditional", cfg.class_conditional);
  try {
    cfg.space = parse_space(get_or<std::string>(t, "space", "pixel"));
  } catch (const std::invalid_argument& e) {
    invalid(e.what());
  }
  if (t.contains("init")) cfg.init = resolve(base_dir, t.at("init").get<std::string>());
  if (cfg.steps < 0 || cfg.batch == 0 || cfg.hidden == 0 || cfg.channels == 0 || cfg.size == 0) {
    invalid("train: steps >= 0 and positive batch/hidden/channels/size required");
  }
  if (doc.contains("schedule")) {
    cfg.schedule = parse_schedule(doc.at("schedule"));
    cfg.schedule_steps = get_or(doc.at("schedule"), "steps", cfg.schedule_steps);
  }
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (doc.contains("out")) cfg.out = resolve(base_dir, doc.at("out").get<std::string>());
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError("CONFIG_NOT_FOUND", e.what());
  }
  return parse_train_config(text, path.parent_path());
}

NoiseSchedule build_schedule(const ScheduleSpec& spec, int num_steps) {
  try {
    if (spec.kind == "linear") {
      return make_linear_schedule(num_steps, spec.beta_start, spec.beta_end, spec.eta);
    }
    return make_scaled_linear_schedule(num_steps, spec.eta);
  } catch (const std::domain_error& e) {
    invalid(std::string("schedule: ") + e.what());
  }
}

std::optional<LatentCodec> build_codec(const RunConfig& cfg) {
  const bool enabled = cfg.codec.enabled.value_or(cfg.plan.space == Space::latent);
  if (cfg.plan.space == Space::latent && !enabled) invalid("latent plan requires the codec");
  if (!enabled) return std::nullopt;
  try {
    return LatentCodec(cfg.codec.factor).with_lossy(cfg.codec.lossy);
  } catch (const std::invalid_argument& e) {
    invalid(std::string("codec: ") + e.what());
  }
}

std::unique_ptr<Denoiser> build_denoiser(const RunConfig& cfg, const LatentCodec* codec) {
  const bool latent = cfg.plan.space == Space::latent;
  if (cfg.denoiser.kind == "tiny") {
    if (!std::filesystem::exists(cfg.denoiser.weights)) {
      throw ConfigError("CONFIG_WEIGHTS_NOT_FOUND",
                        "weight file not found: " + cfg.denoiser.weights.string());
    }
    try {
      auto d = std::make_unique<TinyDenoiser>(load_weights(cfg.denoiser.weights));
      if (latent && d->data_channels() % codec->patch_size() != 0) {
        invalid("tiny denoiser channels do not match the latent codec");
      }
      return d;
    } catch (const IoError& e) {
      throw ConfigError("CONFIG_WEIGHTS_INVALID", e.what());
    }
  }
  std::vector<double> mu = cfg.denoiser.mu;
  std::vector<double> s2 = cfg.denoiser.sigma2;
  if (mu.empty()) mu.assign(cfg.channels, 0.3);
  if (s2.empty()) s2.assign(mu.size(), 0.25);
  try {
    AnalyticGaussianDenoiser pixel(mu, s2);
    if (latent) return std::make_unique<AnalyticGaussianDenoiser>(latent_prior(pixel, *codec));
    return std::make_unique<AnalyticGaussianDenoiser>(std::move(pixel));
  } catch (const std::invalid_argument& e) {
    invalid(std::string("denoiser: ") + e.what());
  }
}

}  // namespace mf
