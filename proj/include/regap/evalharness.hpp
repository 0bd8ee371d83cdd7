#pragma once

#include "regap/dataio.hpp"
#include "regap/detector.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace regap::eval {

/// Score/label pair; higher score means more likely Generated (positive).
struct ScoredSample {
  double score = 0.0;
  Label label = Label::Real;
};

/// Fraction of samples with (score > tau) agreeing with the label.
double accuracy(const std::vector<ScoredSample>& samples, double tau);

/// Rank-based AUROC (Mann-Whitney with midranks for ties). Requires at least
/// one sample of each class.
double auroc(const std::vector<ScoredSample>& samples);

/// Non-interpolated average precision. Tied scores are grouped and precision
/// is evaluated at group boundaries, so the value is independent of the input
/// order of tied samples.
double average_precision(const std::vector<ScoredSample>& samples);

struct EvalReport {
  double acc = 0.0;
  double auroc = 0.0;
  double ap = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

EvalReport evaluate(const std::vector<ScoredSample>& samples, double tau);

/// Inputs for the benchmark grid: rows are single edits plus multi-edit
/// aggregations, columns are detection-quality numbers per distance metric.
struct BenchmarkSetup {
  const model::AutoencoderPair* pair = nullptr;
  model::LatentPrior prior;
  io::Dataset calibration;
  io::Dataset evaluation;
  edits::EditSet edit_set;
  std::vector<metrics::MetricKind> metric_kinds;
  metrics::MetricConfig metric_cfg;
  double retention = 0.95;
  std::optional<double> fixed_tau;  // overrides calibration when present
  std::uint64_t seed = 0;
};

struct BenchmarkRow {
  std::string row;  // edit name or "me-max"/"me-mean"/"me-min"
  metrics::MetricKind metric;
  double tau = 0.0;
  double acc = 0.0;
  double auroc = 0.0;
  double ap = 0.0;
};

std::vector<BenchmarkRow> run_benchmark(const BenchmarkSetup& setup);

/// One CSV per metric: row,tau,acc,auroc,ap with 6-decimal fixed-point values.
void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         metrics::MetricKind metric, std::ostream& out);

enum class SweepAxis { JpegQuality, CropRatio };

const char* to_string(SweepAxis axis);

struct SweepCurve {
  SweepAxis axis = SweepAxis::JpegQuality;
  std::vector<std::pair<double, double>> points;  // (parameter, ap)
  std::vector<double> taus;  // per-point threshold (recalibrated or fixed)
  bool recalibrated = true;
};

/// Applies the perturbation to every calibration and evaluation image, then
/// re-runs detection (Max-style scoring from setup's first aggregation is not
/// used here; the sweep scores with the given rule). tau is recalibrated on
/// the perturbed calibration reals unless recalibrate is false.
SweepCurve robustness_sweep(const BenchmarkSetup& setup, detector::AggregationRule rule,
                            SweepAxis axis, const std::vector<double>& grid,
                            bool recalibrate = true);

/// Two-column plot data: parameter,ap.
void write_sweep_csv(const SweepCurve& curve, std::ostream& out);

}  // namespace regap::eval
