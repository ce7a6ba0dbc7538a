#include "mf/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "mf/analysis.hpp"
#include "mf/dataset.hpp"
#include "mf/io.hpp"
#include "mf/presets.hpp"
#include "mf/tiny_denoiser.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mf {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve_out_dir(const std::optional<fs::path>& flag, const std::optional<fs::path>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("MF_OUT_DIR"); env && *env) return env;
  return "mf_out";
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Netpbm for 1 or 3 channels; raw tensor otherwise.
std::string write_image(const ImageTensor& x, const fs::path& stem) {
  if (x.channels() == 1 || x.channels() == 3) {
    fs::path p = stem;
    p += x.channels() == 3 ? ".ppm" : ".pgm";
    write_netpbm(x, p);
    return p.filename().string();
  }
  fs::path p = stem;
  p += ".mft";
  write_mft(x, p);
  return p.filename().string();
}

struct Prepared {
  NoiseSchedule base;
  std::optional<LatentCodec> codec;
  std::unique_ptr<Denoiser> denoiser;
  Conditions conds;
};

// Everything that can fail on bad input happens here, before any output
// directory is touched.
Prepared prepare(const RunConfig& cfg) {
  Prepared p{build_schedule(cfg.schedule, cfg.plan.total_steps), build_codec(cfg), nullptr, {}};
  p.denoiser = build_denoiser(cfg, p.codec ? &*p.codec : nullptr);
  p.conds.text = cfg.text_cond;
  if (cfg.image_cond) {
    try {
      ImageTensor img = read_netpbm(*cfg.image_cond);
      p.conds.image = p.codec ? p.codec->encode(img) : img;
    } catch (const IoError& e) {
      throw ConfigError("CONFIG_INVALID", std::string("image_cond: ") + e.what());
    }
  }
  return p;
}

RunResult execute(const RunConfig& cfg, const Prepared& p) {
  try {
    return run_pipeline(cfg.plan, *p.denoiser, p.codec ? &*p.codec : nullptr, p.base, p.conds,
                        cfg.guidance, cfg.seed, RunOptions{cfg.schedule.rule, {}});
  } catch (const std::invalid_argument& e) {
    throw ConfigError("CONFIG_INVALID", e.what());
  }
}

json shape_json(const Shape& s) { return json::array({s.channels, s.height, s.width}); }

int cmd_generate(const RunConfig& cfg, const std::optional<fs::path>& out_flag) {
  Prepared prep = prepare(cfg);
  RunResult r = execute(cfg, prep);
  const CostReport cost = pipeline_cost(cfg.plan);

  const fs::path out = resolve_out_dir(out_flag, cfg.out);
  ensure_dir(out);
  json files = json::array();
  files.push_back(write_image(r.image, out / "image"));
  write_mft(r.image, out / "image.mft");
  files.push_back("image.mft");
  if (cfg.trace) {
    ensure_dir(out / "snapshots");
    for (const Snapshot& s : r.trace.snapshots) {
      const std::string stem = "stage" + std::to_string(s.stage) + "_t" + std::to_string(s.global_t);
      files.push_back("snapshots/" + write_image(s.image, out / "snapshots" / stem));
    }
    write_text(out / "manifest.csv", trace_manifest_csv(r.trace));
    files.push_back("manifest.csv");
  }
  write_text(out / "cost.csv", cost_report_csv(cost));
  files.push_back("cost.csv");

  json stages = json::array();
  for (const StageRecord& s : r.trace.stages) {
    json js{{"stage", s.stage},     {"state_shape", shape_json(s.state_shape)},
            {"steps", s.steps},     {"gamma", s.gamma},
            {"dilation", s.dilation}};
    js["image_cond_shape"] = s.image_cond_shape ? shape_json(*s.image_cond_shape) : json();
    stages.push_back(js);
  }
  json relays = json::array();
  for (std::size_t i = 0; i + 1 < cfg.plan.stages.size(); ++i) relays.push_back(cfg.plan.relay_timestep(i));
  const Moments m = moments(r.image);
  json manifest{{"spec_version", kSpecVersion},
                {"command", "generate"},
                {"preset", cfg.preset},
                {"seed", cfg.seed},
                {"space", to_string(cfg.plan.space)},
                {"upsampler", to_string(cfg.plan.upsampler)},
                {"relay_noise_source", to_string(cfg.plan.relay_noise_source)},
                {"sampler", to_string(cfg.schedule.rule)},
                {"denoiser", cfg.denoiser.kind},
                {"guidance", cfg.guidance},
                {"total_steps", cfg.plan.total_steps},
                {"steps_taken", r.trace.total_steps},
                {"relay_timesteps", relays},
                {"sigma_rederived", r.trace.sigma_rederived},
                {"stages", stages},
                {"cost_ratio", cost.ratio},
                {"output_shape", shape_json(r.image.shape())},
                {"output_moments", {{"min", m.min}, {"max", m.max}, {"mean", m.mean}, {"std", m.std}}}};
  manifest["files"] = files;
  write_text(out / "run.json", manifest.dump(2) + "\n");

  std::cout << "generate: " << r.trace.stages.size() << " stages, " << r.trace.total_steps
            << " steps, output " << r.image.shape().str() << ", cost ratio " << fmt(cost.ratio)
            << ", wrote " << (out / files[0].get<std::string>()).string() << "\n";
  return kExitOk;
}

void print_cost_table(std::ostream& os, const std::string& name, const CostReport& r) {
  char line[160];
  os << "cost: " << name << "\n";
  std::snprintf(line, sizeof line, "  %-6s %-12s %-6s %-14s\n", "stage", "resolution", "steps", "cost");
  os << line;
  for (std::size_t i = 0; i < r.per_stage.size(); ++i) {
    const StageCost& s = r.per_stage[i];
    const std::string res = std::to_string(s.height) + "x" + std::to_string(s.width);
    std::snprintf(line, sizeof line, "  %-6zu %-12s %-6d %-14.6g\n", i + 1, res.c_str(), s.steps, s.cost);
    os << line;
  }
  std::snprintf(line, sizeof line, "  total %.6g, baseline %.6g, ratio %.4f\n", r.total, r.baseline_total,
                r.ratio);
  os << line;
}

int cmd_cost(const RunConfig& cfg, const std::optional<fs::path>& out_flag) {
  const CostReport r = pipeline_cost(cfg.plan);
  print_cost_table(std::cout, cfg.preset.empty() ? "plan" : cfg.preset, r);
  const char* env = std::getenv("MF_OUT_DIR");
  if (out_flag || cfg.out || (env && *env)) {
    const fs::path out = resolve_out_dir(out_flag, cfg.out);
    ensure_dir(out);
    write_text(out / "cost.csv", cost_report_csv(r));
  }
  return kExitOk;
}

struct AblationRow {
  std::string label;
  double cost_ratio = 0;
  int total_steps = 0;
  double psnr = 0;
  Moments m;
  double high_band = 0;
  ImageTensor image;
};

int cmd_ablate(const std::string& kind, const RunConfig& base, const std::optional<fs::path>& out_flag,
               int jobs) {
  const std::vector<AblationSetting> settings = ablation_settings(kind, base);
  std::vector<Prepared> prepared;
  prepared.push_back(prepare(base));
  for (const auto& s : settings) prepared.push_back(prepare(s.config));

  // Row 0 is the unmodified base config and serves as the PSNR reference.
  std::vector<AblationRow> rows(settings.size() + 1);
  std::vector<std::string> errors(rows.size());
  const int n = static_cast<int>(rows.size());
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : 1;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int i = 0; i < n; ++i) {
    const RunConfig& cfg = i == 0 ? base : settings[i - 1].config;
    try {
      RunResult r = execute(cfg, prepared[i]);
      AblationRow& row = rows[i];
      row.label = i == 0 ? "base" : settings[i - 1].label;
      row.cost_ratio = pipeline_cost(cfg.plan).ratio;
      row.total_steps = r.trace.total_steps;
      row.m = moments(r.image);
      row.high_band = high_band_energy(radial_spectrum(r.image));
      row.image = std::move(r.image);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw NumericError(e);

  const fs::path out = resolve_out_dir(out_flag, base.out);
  ensure_dir(out / "ablation");
  std::ostringstream csv;
  csv << "kind,setting,total_steps,cost_ratio,psnr_vs_base,mean,std,min,max,high_band_energy,image\n";
  for (AblationRow& row : rows) {
    row.psnr = row.image.shape() == rows[0].image.shape() ? psnr(row.image, rows[0].image) : NAN;
    const std::string file = "ablation/" + write_image(row.image, out / "ablation" / (kind + "_" + row.label));
    csv << kind << ',' << row.label << ',' << row.total_steps << ',' << fmt(row.cost_ratio) << ','
        << (std::isnan(row.psnr) ? std::string("") : fmt(row.psnr)) << ',' << fmt(row.m.mean) << ','
        << fmt(row.m.std) << ',' << fmt(row.m.min) << ',' << fmt(row.m.max) << ',' << fmt(row.high_band)
        << ',' << file << '\n';
  }
  write_text(out / ("ablation_" + kind + ".csv"), csv.str());
  std::cout << "ablate: " << kind << ", " << settings.size() << " settings, wrote "
            << (out / ("ablation_" + kind + ".csv")).string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainConfig& cfg, const std::optional<fs::path>& out_flag) {
  std::optional<LatentCodec> codec;
  if (cfg.space == Space::latent) {
    try {
      codec = LatentCodec(cfg.codec_factor);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("CONFIG_INVALID", e.what());
    }
  }
  const std::size_t data_channels = codec ? cfg.channels * codec->patch_size() : cfg.channels;
  TinyDenoiserConfig mc;
  mc.data_channels = data_channels;
  mc.text_dim = cfg.class_conditional ? kSyntheticClasses : 0;
  mc.hidden = cfg.hidden;

  std::optional<TinyDenoiser> init;
  if (cfg.init) {
    if (!fs::exists(*cfg.init)) {
      throw ConfigError("CONFIG_WEIGHTS_NOT_FOUND", "weight file not found: " + cfg.init->string());
    }
    try {
      init = load_weights(*cfg.init);
    } catch (const IoError& e) {
      throw ConfigError("CONFIG_WEIGHTS_INVALID", e.what());
    }
    if (init->data_channels() != data_channels) throw ConfigError("CONFIG_INVALID", "init weights do not match data");
  } else {
    init = TinyDenoiser::initialized(mc, cfg.seed);
  }
  const NoiseSchedule schedule = build_schedule(cfg.schedule, cfg.schedule_steps);

  SampleSource pixels = synthetic_dataset(cfg.size, cfg.channels);
  const bool labelled = init->config().text_dim > 0;
  SampleSource data = [pixels, codec, labelled](Rng& rng) {
    TrainingSample s = pixels(rng);
    if (codec) s.image = codec->encode(s.image);
    if (!labelled) s.cond.clear();
    return s;
  };
  TrainOptions opt;
  opt.steps = cfg.steps;
  opt.learning_rate = cfg.learning_rate;
  opt.momentum = cfg.momentum;
  opt.batch = cfg.batch;
  opt.uncond_prob = cfg.uncond_prob;
  opt.seed = cfg.seed;
  TrainResult r = train_tiny(*init, data, schedule, opt);

  const fs::path out = resolve_out_dir(out_flag, cfg.out);
  ensure_dir(out);
  save_weights(r.model, out / "weights.mfw");
  write_text(out / "loss.csv", loss_trace_csv(r.losses));
  std::cout << "train: " << cfg.steps << " steps, " << r.model.num_params() << " params";
  if (!r.losses.empty()) std::cout << ", final mse " << fmt(r.losses.back());
  std::cout << ", wrote " << (out / "weights.mfw").string() << "\n";
  return kExitOk;
}

int cmd_schedule_dump(const ScheduleSpec& spec, int steps, double gamma, const std::optional<fs::path>& out_flag,
                      const std::optional<fs::path>& cfg_out) {
  NoiseSchedule s = build_schedule(spec, steps);
  if (gamma != 1.0) {
    if (!(gamma >= 1.0)) throw ConfigError("CONFIG_INVALID", "gamma must be >= 1");
    s = reschedule(s, RescheduleParams{gamma});
  }
  const std::string csv = schedule_to_csv(s);
  const char* env = std::getenv("MF_OUT_DIR");
  if (out_flag || cfg_out || (env && *env)) {
    const fs::path out = resolve_out_dir(out_flag, cfg_out);
    ensure_dir(out);
    write_text(out / "schedule.csv", csv);
    std::cout << "schedule-dump: " << steps << " steps, gamma " << fmt(gamma) << ", wrote "
              << (out / "schedule.csv").string() << "\n";
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

void report(const std::string& code, const std::string& msg) {
  std::cerr << "mf: error " << code << ": " << msg << "\n";
}

}  // namespace

std::vector<AblationSetting> ablation_settings(const std::string& kind, const RunConfig& base) {
  std::vector<AblationSetting> out;
  auto add = [&](std::string label, auto&& edit) {
    RunConfig c = base;
    edit(c);
    out.push_back({std::move(label), std::move(c)});
  };
  auto upper_stages = [](RunConfig& c, auto&& f) {
    for (std::size_t i = 1; i < c.plan.stages.size(); ++i) f(c.plan.stages[i]);
  };
  if (kind == "upsampler") {
    for (ResampleMethod m : {ResampleMethod::bilinear, ResampleMethod::bicubic, ResampleMethod::bicubic_gaussian,
                             ResampleMethod::bicubic_edge}) {
      add(std::string(1, config_letter(m)), [m](RunConfig& c) { c.plan.upsampler = m; });
    }
  } else if (kind == "gamma") {
    for (double g : {1.0, 2.0, 4.0, 8.0}) {
      add("gamma" + fmt(g), [&](RunConfig& c) { upper_stages(c, [g](Stage& s) { s.gamma = g; }); });
    }
  } else if (kind == "delta") {
    for (std::size_t d : {1, 2, 3}) {
      add("delta" + std::to_string(d), [&](RunConfig& c) { upper_stages(c, [d](Stage& s) { s.dilation = d; }); });
    }
  } else if (kind == "truncation") {
    // Every upper stage gets n steps and the base stage the rest; larger n
    // puts more steps at high resolution.
    const int k = static_cast<int>(base.plan.stages.size());
    const int T = base.plan.total_steps;
    for (int n : {10, 7, 5, 3, 1}) {
      if (k == 1 || T - (k - 1) * n < 1) continue;
      std::string label;
      for (int i = 0; i < k; ++i) label += (i ? "-" : "") + std::to_string(i == 0 ? T - (k - 1) * n : n);
      add(label, [&](RunConfig& c) {
        c.plan.stages[0].steps = T - (k - 1) * n;
        for (int i = 1; i < k; ++i) c.plan.stages[i].steps = n;
      });
    }
  } else if (kind == "guidance") {
    for (double w : {1.0, 3.0, 5.0, 7.0, 9.0}) {
      add("w" + fmt(w), [w](RunConfig& c) { c.guidance = w; });
    }
  } else {
    throw ConfigError("ABLATE_UNKNOWN_KIND",
                      "unknown ablation kind '" + kind + "' (upsampler, gamma, delta, truncation, guidance)");
  }
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-resolution truncate-and-relay diffusion sampler"};
  app.require_subcommand(1);
  std::optional<std::string> config_path, preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int jobs = 0;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--seed", seed, "override the config seed");
    c->add_option("--out", out_dir, "output directory");
  };
  CLI::App* gen = app.add_subcommand("generate", "run the staged sampler");
  common(gen);
  gen->add_option("--preset", preset, "preset name when no config is given");
  CLI::App* cost = app.add_subcommand("cost", "report the plan's cost ratio");
  common(cost);
  cost->add_option("--preset", preset, "preset name");
  CLI::App* abl = app.add_subcommand("ablate", "hyperparameter sweep");
  common(abl);
  abl->add_option("--preset", preset, "preset name when no config is given");
  std::string kind;
  abl->add_option("kind", kind, "upsampler | gamma | delta | truncation | guidance")->required();
  abl->add_option("--jobs", jobs, "parallel runs");
  CLI::App* train = app.add_subcommand("train", "train the tiny denoiser");
  common(train);
  CLI::App* dump = app.add_subcommand("schedule-dump", "print a noise schedule as CSV");
  common(dump);
  int dump_steps = 50;
  double dump_gamma = 1.0;
  dump->add_option("--steps", dump_steps, "number of timesteps");
  dump->add_option("--gamma", dump_gamma, "reschedule factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("CLI_USAGE", e.what());
    return kExitConfig;
  }

  const std::optional<fs::path> out_flag = out_dir ? std::optional<fs::path>(*out_dir) : std::nullopt;
  try {
    auto load_run = [&]() {
      RunConfig cfg;
      if (config_path) {
        cfg = load_run_config(*config_path);
        if (preset) throw ConfigError("CONFIG_INVALID", "give either --config or --preset");
      } else if (preset) {
        cfg = preset_run_config(*preset);
      } else {
        throw ConfigError("CONFIG_INVALID", "need --config or --preset");
      }
      if (seed) cfg.seed = *seed;
      return cfg;
    };
    if (*gen) return cmd_generate(load_run(), out_flag);
    if (*cost) return cmd_cost(load_run(), out_flag);
    if (*abl) {
      if (jobs < 0) throw ConfigError("CONFIG_INVALID", "--jobs must be >= 0");
      return cmd_ablate(kind, load_run(), out_flag, jobs);
    }
    if (*train) {
      TrainConfig cfg = config_path ? load_train_config(*config_path) : TrainConfig{};
      if (seed) cfg.seed = *seed;
      return cmd_train(cfg, out_flag);
    }
    if (*dump) {
      ScheduleSpec spec;
      std::optional<fs::path> cfg_out;
      if (config_path) {
        RunConfig cfg = load_run_config(*config_path);
        spec = cfg.schedule;
        dump_steps = cfg.plan.total_steps;
        cfg_out = cfg.out;
      }
      return cmd_schedule_dump(spec, dump_steps, dump_gamma, out_flag, cfg_out);
    }
  } catch (const ConfigError& e) {
    report(e.code(), e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    const bool coded = colon != std::string::npos && what.compare(0, colon, "TRAIN_NONFINITE") == 0;
    const bool run_coded = colon != std::string::npos && what.compare(0, colon, "RUN_NONFINITE") == 0;
    report(coded ? "TRAIN_NONFINITE" : run_coded ? "RUN_NONFINITE" : "NUMERIC", what);
    return kExitNumeric;
  } catch (const IoError& e) {
    report("IO_FAILURE", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    report("CONFIG_INVALID", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    report("NUMERIC", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace mf
