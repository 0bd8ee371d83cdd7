// Command-line front end wiring the library end to end: model construction
// and training, bound verification sweeps, synthetic benchmark generation,
// per-image detection, benchmark evaluation and robustness sweeps.

#include "regap/config.hpp"
#include "regap/dataio.hpp"
#include "regap/detector.hpp"
#include "regap/evalharness.hpp"
#include "regap/model_io.hpp"
#include "regap/spectral.hpp"
#include "regap/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace regap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitVerification = 4;

struct CommonArgs {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<double> tau;
  std::optional<std::string> output;
};

// Flags override file values.
config::ExperimentConfig load_config(const CommonArgs& args) {
  config::ExperimentConfig cfg = config::ExperimentConfig::load(args.config_path);
  if (args.seed) {
    cfg.seed = static_cast<std::uint64_t>(*args.seed);
    cfg.seed_set = true;
  }
  if (args.tau) cfg.fixed_tau = *args.tau;
  if (args.output) cfg.output_dir = *args.output;
  if (!cfg.seed_set)
    throw CLI::ValidationError("seed", "a seed is required (config key or --seed)");
  return cfg;
}

std::string model_output_path(const config::ExperimentConfig& cfg) {
  return cfg.model_path.empty() ? (fs::path(cfg.output_dir) / "model.rgae").string()
                                : cfg.model_path;
}

std::unique_ptr<model::AutoencoderPair> load_model_checked(
    const config::ExperimentConfig& cfg) {
  std::string path = model_output_path(cfg);
  if (!fs::exists(path))
    throw std::runtime_error("model file not found: " + path);
  return model::load_model(path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

int cmd_train(const CommonArgs& args) {
  auto cfg = load_config(args);
  fs::create_directories(cfg.output_dir);
  auto prior = cfg.make_prior();

  std::unique_ptr<model::AutoencoderPair> pair;
  if (cfg.model.kind == "linear") {
    pair = std::make_unique<model::LinearPair>(cfg.make_linear_pair());
  } else if (cfg.model.kind == "mlp") {
    if (cfg.train_data.empty())
      throw CLI::ValidationError("config", "paths.train_data is required for mlp training");
    if (!fs::is_directory(cfg.train_data))
      throw std::runtime_error("training dataset path not found: " + cfg.train_data);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(cfg.train_data)) {
      auto ext = entry.path().extension();
      if (ext == ".pgm" || ext == ".ppm" || ext == ".rgt")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw std::runtime_error("training dataset path is empty: " + cfg.train_data);
    std::vector<ImageTensor> dataset;
    for (const auto& f : files)
      dataset.push_back(fs::path(f).extension() == ".rgt" ? io::load_tensor(f)
                                                          : io::load_image(f));
    model::TrainConfig tc;
    for (double h : cfg.model.encoder_hidden) tc.encoder_hidden.push_back(static_cast<int>(h));
    for (double h : cfg.model.decoder_hidden) tc.decoder_hidden.push_back(static_cast<int>(h));
    if (cfg.model.activation == "tanh")
      tc.hidden_activation = model::Activation::Tanh;
    else if (cfg.model.activation == "softplus")
      tc.hidden_activation = model::Activation::Softplus;
    else if (cfg.model.activation == "identity")
      tc.hidden_activation = model::Activation::Identity;
    else
      throw std::runtime_error("unknown activation: " + cfg.model.activation);
    tc.epochs = cfg.model.epochs;
    tc.learning_rate = cfg.model.learning_rate;
    tc.lambda = cfg.model.lambda;
    tc.prior_samples = cfg.model.prior_samples;
    tc.seed = cfg.seed;
    model::TrainStats stats;
    pair = std::make_unique<model::MlpPair>(
        model::train_autoencoder(dataset, prior, tc, &stats));
    std::cout << "final reconstruction loss: " << stats.final_reconstruction_loss
              << "\nfinal latent loss: " << stats.final_latent_loss << "\n";
  } else {
    throw CLI::ValidationError("config", "model.kind must be linear or mlp");
  }

  std::string path = model_output_path(cfg);
  model::save_model(path, *pair);
  auto report = model::check_assumptions(*pair, prior, 256, derive_seed(cfg.seed, 0xA55));
  std::cout << report.summary() << "\nmodel written to " << path << "\n";
  return kExitOk;
}

int cmd_verify_bound(const CommonArgs& args) {
  auto cfg = load_config(args);
  fs::create_directories(cfg.output_dir);
  auto pair = load_model_checked(cfg);
  auto prior = cfg.make_prior();

  auto report = model::check_assumptions(*pair, prior, 64, derive_seed(cfg.seed, 0xA55));
  if (!report.a2_pass) {
    std::cerr << "A2 violation: decoder Jacobian is degenerate (min sigma_min = "
              << report.a2_sigma_min << ")\n";
    return kExitAssumption;
  }

  auto table = spectral::bound_sweep(*pair, prior, cfg.bound_magnitudes,
                                     cfg.bound_trials, cfg.seed);
  std::ostringstream csv;
  spectral::write_csv(table, csv);
  std::string out_path = (fs::path(cfg.output_dir) / "bound_sweep.csv").string();
  write_text_file(out_path, csv.str());
  std::cout << csv.str();

  if (pair->affine()) {
    for (const auto& row : table.rows) {
      if (row.frac_simple < 1.0) {
        std::cerr << "verification failed: simple bound violated at magnitude "
                  << row.magnitude << "\n";
        return kExitVerification;
      }
    }
  }
  return kExitOk;
}

int cmd_gen_data(const CommonArgs& args) {
  auto cfg = load_config(args);
  auto pair = load_model_checked(cfg);
  auto prior = cfg.make_prior();

  io::SyntheticSpec spec;
  spec.n_real = cfg.data.n_real;
  spec.n_generated = cfg.data.n_generated;
  spec.offset_kind = cfg.data.offset == "fixed" ? io::SyntheticSpec::OffsetKind::Fixed
                                                : io::SyntheticSpec::OffsetKind::Uniform;
  spec.m = cfg.data.m;
  spec.m_lo = cfg.data.m_lo;
  spec.m_hi = cfg.data.m_hi;
  spec.noise_floor = cfg.data.noise_floor;
  spec.split = cfg.data.split;
  spec.seed = cfg.seed;

  auto [calib, eval] = io::gen_benchmark(*pair, prior, spec);
  auto dump = [&](const io::Dataset& set, const std::string& name) {
    fs::path dir = fs::path(cfg.output_dir) / name;
    fs::create_directories(dir);
    std::vector<std::string> files;
    for (std::size_t i = 0; i < set.items.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "item_%05zu.rgt", i);
      io::save_tensor((dir / buf).string(), set.items[i].image);
      files.emplace_back(buf);
    }
    io::write_manifest((dir / "manifest.csv").string(), files, set);
  };
  dump(calib, "calibration");
  dump(eval, "evaluation");
  std::cout << "wrote " << calib.items.size() << " calibration and " << eval.items.size()
            << " evaluation samples under " << cfg.output_dir << "\n";
  return kExitOk;
}

int cmd_detect(const CommonArgs& args, const std::vector<std::string>& image_paths) {
  auto cfg = load_config(args);
  fs::create_directories(cfg.output_dir);
  auto pair = load_model_checked(cfg);
  auto prior = cfg.make_prior();

  std::vector<ImageTensor> images;
  std::vector<std::string> ids;
  std::vector<std::size_t> loaded_index(image_paths.size(), SIZE_MAX);
  std::vector<std::string> load_errors(image_paths.size());
  for (std::size_t i = 0; i < image_paths.size(); ++i) {
    try {
      ImageTensor img = fs::path(image_paths[i]).extension() == ".rgt"
                            ? io::load_tensor(image_paths[i])
                            : io::load_image(image_paths[i]);
      loaded_index[i] = images.size();
      images.push_back(std::move(img));
      ids.push_back(image_paths[i]);
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
    }
  }

  detector::BatchConfig bc;
  bc.metric = cfg.metric_kinds.front();
  bc.metric_cfg = cfg.metric_cfg;
  bc.edit_set = cfg.edit_set;
  bc.rule = cfg.aggregation;
  bc.tau = cfg.fixed_tau;
  bc.master_seed = cfg.seed;
  auto records = detector::detect_batch(*pair, prior, bc, images, &ids);

  bool partial_failure = false;
  for (std::size_t i = 0; i < image_paths.size(); ++i) {
    if (loaded_index[i] == SIZE_MAX) {
      std::cerr << "error: " << image_paths[i] << ": " << load_errors[i] << "\n";
      partial_failure = true;
      continue;
    }
    const auto& rec = records[loaded_index[i]];
    if (rec.failed) {
      std::cerr << "error: " << image_paths[i] << ": " << rec.error << "\n";
      partial_failure = true;
      continue;
    }
    std::cout << image_paths[i] << ": " << detector::to_string(rec.verdict)
              << " (delta_star = " << rec.delta_star << ")\n";
  }

  std::ostringstream csv;
  detector::write_records_csv(records, bc.tau, csv);
  write_text_file((fs::path(cfg.output_dir) / "detections.csv").string(), csv.str());
  return partial_failure ? kExitIo : kExitOk;
}

eval::BenchmarkSetup make_setup(const config::ExperimentConfig& cfg,
                                const model::AutoencoderPair& pair,
                                io::Dataset calib, io::Dataset evalset) {
  eval::BenchmarkSetup setup;
  setup.pair = &pair;
  setup.prior = cfg.make_prior();
  setup.calibration = std::move(calib);
  setup.evaluation = std::move(evalset);
  setup.edit_set = cfg.edit_set;
  setup.metric_kinds = cfg.metric_kinds;
  setup.metric_cfg = cfg.metric_cfg;
  setup.retention = cfg.retention;
  setup.fixed_tau = cfg.fixed_tau;
  setup.seed = cfg.seed;
  return setup;
}

std::pair<io::Dataset, io::Dataset> load_datasets(const config::ExperimentConfig& cfg) {
  if (cfg.data_dir.empty())
    throw std::runtime_error("paths.data_dir is required (run gen-data first)");
  auto calib_manifest = (fs::path(cfg.data_dir) / "calibration" / "manifest.csv").string();
  auto eval_manifest = (fs::path(cfg.data_dir) / "evaluation" / "manifest.csv").string();
  if (!fs::exists(calib_manifest))
    throw std::runtime_error("dataset manifest not found: " + calib_manifest);
  if (!fs::exists(eval_manifest))
    throw std::runtime_error("dataset manifest not found: " + eval_manifest);
  return {io::load_from_manifest(calib_manifest), io::load_from_manifest(eval_manifest)};
}

int cmd_evaluate(const CommonArgs& args) {
  auto cfg = load_config(args);
  fs::create_directories(cfg.output_dir);
  auto pair = load_model_checked(cfg);
  auto [calib, evalset] = load_datasets(cfg);
  auto setup = make_setup(cfg, *pair, std::move(calib), std::move(evalset));

  auto rows = eval::run_benchmark(setup);
  for (auto kind : setup.metric_kinds) {
    std::ostringstream csv;
    eval::write_benchmark_csv(rows, kind, csv);
    std::string name = std::string("benchmark_") + metrics::to_string(kind) + ".csv";
    write_text_file((fs::path(cfg.output_dir) / name).string(), csv.str());
  }
  std::cout << "row,metric,tau,acc,auroc,ap\n";
  for (const auto& r : rows)
    std::cout << r.row << ',' << metrics::to_string(r.metric) << ',' << r.tau << ','
              << r.acc << ',' << r.auroc << ',' << r.ap << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis_name) {
  auto cfg = load_config(args);
  fs::create_directories(cfg.output_dir);

  eval::SweepAxis axis;
  std::vector<double> grid;
  if (axis_name == "jpeg") {
    axis = eval::SweepAxis::JpegQuality;
    grid = cfg.jpeg_grid;
  } else if (axis_name == "crop") {
    axis = eval::SweepAxis::CropRatio;
    grid = cfg.crop_grid;
  } else {
    throw CLI::ValidationError("--axis", "axis must be 'jpeg' or 'crop'");
  }

  auto pair = load_model_checked(cfg);
  auto [calib, evalset] = load_datasets(cfg);
  auto setup = make_setup(cfg, *pair, std::move(calib), std::move(evalset));

  auto curve = eval::robustness_sweep(setup, cfg.aggregation, axis, grid);
  std::ostringstream csv;
  eval::write_sweep_csv(curve, csv);
  std::string name = std::string("sweep_") + axis_name + ".csv";
  write_text_file((fs::path(cfg.output_dir) / name).string(), csv.str());
  std::cout << csv.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reconstruction-manifold analysis and dynamic reconstruction-error detection"};
  app.require_subcommand(1);

  CommonArgs args;
  std::vector<std::string> image_paths;
  std::string axis;

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", args.config_path, "experiment config (TOML)");
    if (needs_config) opt->required();
    sub->add_option("--seed", args.seed, "master seed (overrides config)");
    sub->add_option("--tau", args.tau, "fixed decision threshold (overrides config)");
    sub->add_option("--output", args.output, "output directory (overrides config)");
  };

  add_common(app.add_subcommand("train", "construct or train a model, print assumption report"));
  add_common(app.add_subcommand("verify-bound", "run the reconstruction-error bound sweep"));
  add_common(app.add_subcommand("gen-data", "generate the synthetic benchmark datasets"));
  auto* detect = app.add_subcommand("detect", "classify images as real or generated");
  add_common(detect);
  detect->add_option("images", image_paths, "image files (.pgm/.ppm/.rgt)")->required();
  add_common(app.add_subcommand("evaluate", "run the benchmark grid and emit CSV tables"));
  auto* sweep = app.add_subcommand("sweep", "robustness sweep over a degradation axis");
  add_common(sweep);
  sweep->add_option("--axis", axis, "jpeg | crop")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand("train")) return cmd_train(args);
    if (app.got_subcommand("verify-bound")) return cmd_verify_bound(args);
    if (app.got_subcommand("gen-data")) return cmd_gen_data(args);
    if (app.got_subcommand("detect")) return cmd_detect(args, image_paths);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(args);
    if (app.got_subcommand("sweep")) return cmd_sweep(args, axis);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
