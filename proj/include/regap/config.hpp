#pragma once

#include "regap/detector.hpp"
#include "regap/edits.hpp"
#include "regap/metrics.hpp"
#include "regap/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace regap::config {

/// Value tree parsed from a TOML-style key-value file. Supported subset:
/// [table.subtable] headers, key = value lines, "#" comments, strings,
/// integers, floats, booleans and flat arrays of those.
class Tree {
 public:
  using Value = std::variant<std::string, std::int64_t, double, bool,
                             std::vector<std::string>, std::vector<double>>;

  static Tree parse_file(const std::string& path);
  static Tree parse_string(const std::string& text);

  bool has(const std::string& dotted_key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

 private:
  const Value* find(const std::string& key) const;
  std::map<std::string, Value> values_;
};

struct ModelSection {
  std::string kind = "linear";  // linear | mlp
  ImageShape shape{16, 16, 1};
  int latent_dim = 8;
  // linear construction
  std::string encoder = "pseudo-inverse";  // pseudo-inverse | normal-sensitive
  double scale = 1.0;
  double bias = 0.0;
  // prior
  std::string prior = "standard-normal";  // standard-normal | uniform
  double prior_lo = -1.0;
  double prior_hi = 1.0;
  // mlp training
  std::vector<double> encoder_hidden, decoder_hidden;
  std::string activation = "tanh";
  int epochs = 4000;
  double learning_rate = 1e-3;
  double lambda = 0.1;
  int prior_samples = 64;
};

struct DataSection {
  int n_real = 500;
  int n_generated = 500;
  std::string offset = "uniform";  // fixed | uniform
  double m = 0.2;
  double m_lo = 0.1;
  double m_hi = 0.3;
  double noise_floor = 0.0;
  double split = 0.3;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir = "out";
  std::string model_path;
  std::string data_dir;
  std::string train_data;

  ModelSection model;
  DataSection data;

  edits::EditSet edit_set;
  std::vector<metrics::MetricKind> metric_kinds;
  metrics::MetricConfig metric_cfg;
  detector::AggregationRule aggregation = detector::AggregationRule::Max;
  double retention = 0.95;
  std::optional<double> fixed_tau;

  std::vector<double> jpeg_grid{90, 70, 50, 30};
  std::vector<double> crop_grid{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
  std::vector<double> bound_magnitudes{0.01, 0.05, 0.1};
  int bound_trials = 100;

  static ExperimentConfig load(const std::string& path);

  model::LatentPrior make_prior() const;
  /// Builds the configured analytic linear pair (model.kind must be linear).
  model::LinearPair make_linear_pair() const;
};

}  // namespace regap::config
