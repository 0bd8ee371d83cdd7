#pragma once

#include "regap/edits.hpp"
#include "regap/metrics.hpp"
#include "regap/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace regap::detector {

enum class AggregationRule { Max, Mean, Min };
enum class Verdict { Real, Generated, Unclassified };

const char* to_string(AggregationRule r);
const char* to_string(Verdict v);
AggregationRule aggregation_from_string(const std::string& name);

struct PerEdit {
  edits::EditKind kind;
  double e_post = 0.0;
  double delta = 0.0;  // e_post - e_pre, signed
};

struct DetectionRecord {
  std::string id;
  double e_pre = 0.0;
  std::vector<PerEdit> per_edit;
  double delta_star = 0.0;
  Verdict verdict = Verdict::Unclassified;
  std::optional<Label> truth;
  bool failed = false;
  std::string error;
};

/// Retention-calibrated decision threshold. Nearest-rank percentile gives the
/// exact guarantee count(delta <= tau) >= ceil(retention * n) on the
/// calibration set itself.
struct Calibration {
  double tau = 0.0;
  double retention = 0.95;
  int n_calibration = 0;
};

/// One-pass reconstruction f(x) = D(E(x)).
ImageTensor reconstruct(const model::AutoencoderPair& pair, const ImageTensor& x);

/// e_pre = d(x, f(x)).
double static_error(const model::AutoencoderPair& pair, metrics::MetricKind kind,
                    const metrics::MetricConfig& cfg, const ImageTensor& x);

struct DynamicError {
  double e_pre = 0.0;
  double e_post = 0.0;
  double delta = 0.0;
};

/// e_post = d(T(x), f(T(x))); delta = e_post - e_pre.
DynamicError dynamic_error(const model::AutoencoderPair& pair,
                           const model::LatentPrior& prior, metrics::MetricKind kind,
                           const metrics::MetricConfig& mcfg, edits::EditKind edit,
                           const edits::EditConfig& ecfg, const ImageTensor& x, Rng& rng);

double aggregate(const std::vector<double>& deltas, AggregationRule rule);

Calibration calibrate_threshold(std::vector<double> real_deltas, double retention);

/// Generated iff delta_star > tau; ties classify Real.
Verdict classify(double delta_star, double tau);

struct BatchConfig {
  metrics::MetricKind metric = metrics::MetricKind::Mse;
  metrics::MetricConfig metric_cfg;
  edits::EditSet edit_set;
  AggregationRule rule = AggregationRule::Max;
  std::optional<double> tau;  // absent -> verdicts stay Unclassified
  std::uint64_t master_seed = 0;
};

/// Runs the full pipeline over a batch. Each edit is applied independently to
/// the original image; per-image randomness is derived from
/// (master_seed, index) so parallel execution and thread caps never change
/// results. Per-image failures are isolated into flagged records.
std::vector<DetectionRecord> detect_batch(const model::AutoencoderPair& pair,
                                          const model::LatentPrior& prior,
                                          const BatchConfig& cfg,
                                          const std::vector<ImageTensor>& images,
                                          const std::vector<std::string>* ids = nullptr,
                                          const std::vector<Label>* truth = nullptr);

/// CSV schema: id,label,e_pre,e_post_add,e_post_fix,e_post_sem,d_add,d_fix,
/// d_sem,delta_star,tau,verdict. Missing edits leave their columns empty.
void write_records_csv(const std::vector<DetectionRecord>& records,
                       std::optional<double> tau, std::ostream& out);

}  // namespace regap::detector
