#include "regap/evalharness.hpp"

#include "regap/parallel.hpp"
#include "regap/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace regap::eval {

double accuracy(const std::vector<ScoredSample>& samples, double tau) {
  if (samples.empty()) throw std::invalid_argument("accuracy: empty sample list");
  int correct = 0;
  for (const auto& s : samples)
    correct += ((s.score > tau) == (s.label == Label::Generated)) ? 1 : 0;
  return static_cast<double>(correct) / samples.size();
}

double auroc(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : samples) (s.label == Label::Generated ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auroc: needs both classes present");

  // Midrank assignment, then the Mann-Whitney statistic.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
    for (std::size_t k = i; k < j; ++k)
      if (samples[order[k]].label == Label::Generated) rank_sum_pos += midrank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<ScoredSample>& samples) {
  std::size_t n_pos = 0;
  for (const auto& s : samples) n_pos += s.label == Label::Generated ? 1 : 0;
  if (n_pos == 0) throw std::invalid_argument("average_precision: no positives");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score > samples[b].score;
  });

  double ap = 0.0;
  double recall_prev = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    for (std::size_t k = i; k < j; ++k)
      (samples[order[k]].label == Label::Generated ? tp : fp)++;
    double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j;
  }
  return ap;
}

EvalReport evaluate(const std::vector<ScoredSample>& samples, double tau) {
  EvalReport r;
  for (const auto& s : samples) (s.label == Label::Generated ? r.n_pos : r.n_neg)++;
  r.acc = accuracy(samples, tau);
  r.auroc = auroc(samples);
  r.ap = average_precision(samples);
  return r;
}

// ---------------------------------------------------------------------------
// Benchmark grid

namespace {

struct ErrorTable {
  // e_pre[i] and e_post[i][k] for image i and edit k, one table per metric.
  std::vector<double> e_pre;
  std::vector<std::vector<double>> e_post;
};

// Edited images depend only on (seed, image index, edit set), never on the
// metric, so they are rendered once and scored under every metric.
std::vector<ErrorTable> score_dataset(const BenchmarkSetup& setup,
                                      const io::Dataset& data,
                                      std::uint64_t seed_base) {
  std::vector<ErrorTable> tables(setup.metric_kinds.size());
  for (auto& t : tables) {
    t.e_pre.resize(data.items.size());
    t.e_post.assign(data.items.size(),
                    std::vector<double>(setup.edit_set.size(), 0.0));
  }
  parallel_for(data.items.size(), [&](std::size_t i) {
    Rng rng(derive_seed(seed_base, i));
    const ImageTensor& x = data.items[i].image;
    ImageTensor recon = detector::reconstruct(*setup.pair, x);
    for (std::size_t mi = 0; mi < setup.metric_kinds.size(); ++mi)
      tables[mi].e_pre[i] =
          metrics::distance(setup.metric_kinds[mi], setup.metric_cfg, x, recon);
    for (std::size_t k = 0; k < setup.edit_set.size(); ++k) {
      ImageTensor edited = edits::apply_edit(setup.edit_set[k].kind, *setup.pair,
                                             setup.prior, x, setup.edit_set[k].cfg, rng);
      ImageTensor erecon = detector::reconstruct(*setup.pair, edited);
      for (std::size_t mi = 0; mi < setup.metric_kinds.size(); ++mi)
        tables[mi].e_post[i][k] =
            metrics::distance(setup.metric_kinds[mi], setup.metric_cfg, edited, erecon);
    }
  });
  return tables;
}

std::vector<double> row_scores(const ErrorTable& t, int row_edit,
                               detector::AggregationRule rule, bool aggregated) {
  std::vector<double> scores(t.e_pre.size());
  for (std::size_t i = 0; i < t.e_pre.size(); ++i) {
    if (aggregated) {
      std::vector<double> deltas(t.e_post[i].size());
      for (std::size_t k = 0; k < deltas.size(); ++k)
        deltas[k] = t.e_post[i][k] - t.e_pre[i];
      scores[i] = detector::aggregate(deltas, rule);
    } else {
      scores[i] = t.e_post[i][row_edit] - t.e_pre[i];
    }
  }
  return scores;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkSetup& setup) {
  if (!setup.pair) throw std::invalid_argument("run_benchmark: missing model");
  if (setup.edit_set.empty()) throw std::invalid_argument("run_benchmark: empty edit set");
  if (setup.metric_kinds.empty())
    throw std::invalid_argument("run_benchmark: no metrics configured");

  auto calib_tables = score_dataset(setup, setup.calibration, derive_seed(setup.seed, 0xca11b));
  auto eval_tables = score_dataset(setup, setup.evaluation, setup.seed);

  struct RowSpec {
    std::string name;
    int edit = -1;
    detector::AggregationRule rule = detector::AggregationRule::Max;
    bool aggregated = false;
  };
  std::vector<RowSpec> rows;
  for (std::size_t k = 0; k < setup.edit_set.size(); ++k)
    rows.push_back({edits::to_string(setup.edit_set[k].kind), static_cast<int>(k),
                    detector::AggregationRule::Max, false});
  for (auto rule : {detector::AggregationRule::Max, detector::AggregationRule::Mean,
                    detector::AggregationRule::Min})
    rows.push_back({std::string("me-") + detector::to_string(rule), -1, rule, true});

  std::vector<BenchmarkRow> out;
  for (std::size_t mi = 0; mi < setup.metric_kinds.size(); ++mi) {
    for (const auto& row : rows) {
      BenchmarkRow r;
      r.row = row.name;
      r.metric = setup.metric_kinds[mi];

      if (setup.fixed_tau) {
        r.tau = *setup.fixed_tau;
      } else {
        std::vector<double> calib_scores =
            row_scores(calib_tables[mi], row.edit, row.rule, row.aggregated);
        std::vector<double> real_scores;
        for (std::size_t i = 0; i < calib_scores.size(); ++i)
          if (setup.calibration.items[i].label == Label::Real)
            real_scores.push_back(calib_scores[i]);
        r.tau = detector::calibrate_threshold(real_scores, setup.retention).tau;
      }

      std::vector<double> scores =
          row_scores(eval_tables[mi], row.edit, row.rule, row.aggregated);
      std::vector<ScoredSample> samples(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i)
        samples[i] = {scores[i], setup.evaluation.items[i].label};
      EvalReport rep = evaluate(samples, r.tau);
      r.acc = rep.acc;
      r.auroc = rep.auroc;
      r.ap = rep.ap;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows,
                         metrics::MetricKind metric, std::ostream& out) {
  out << "row,tau,acc,auroc,ap\n";
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    std::ostringstream tau;
    tau.setf(std::ios::scientific);
    tau.precision(12);
    tau << r.tau;
    out << r.row << ',' << tau.str() << ',' << fixed6(r.acc) << ',' << fixed6(r.auroc)
        << ',' << fixed6(r.ap) << '\n';
  }
}

const char* to_string(SweepAxis axis) {
  return axis == SweepAxis::JpegQuality ? "jpeg-quality" : "crop-ratio";
}

SweepCurve robustness_sweep(const BenchmarkSetup& setup, detector::AggregationRule rule,
                            SweepAxis axis, const std::vector<double>& grid,
                            bool recalibrate) {
  if (grid.empty()) throw std::invalid_argument("robustness_sweep: empty grid");
  if (setup.metric_kinds.empty())
    throw std::invalid_argument("robustness_sweep: no metrics configured");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] == grid[i - 1])
      throw std::invalid_argument("robustness_sweep: grid values must be distinct");

  SweepCurve curve;
  curve.axis = axis;
  curve.recalibrated = recalibrate;

  BenchmarkSetup local = setup;
  local.metric_kinds = {setup.metric_kinds.front()};
  for (double param : grid) {
    auto perturb = [&](const io::Dataset& src) {
      io::Dataset dst = src;
      parallel_for(dst.items.size(), [&](std::size_t i) {
        if (axis == SweepAxis::JpegQuality)
          dst.items[i].image = robustness::jpeg_roundtrip(
              dst.items[i].image, static_cast<int>(std::lround(param)));
        else
          dst.items[i].image = robustness::center_crop_resize(dst.items[i].image, param);
      });
      return dst;
    };
    local.calibration = recalibrate ? perturb(setup.calibration) : setup.calibration;
    local.evaluation = perturb(setup.evaluation);

    double tau;
    if (setup.fixed_tau && !recalibrate) {
      tau = *setup.fixed_tau;
    } else {
      auto calib_tables =
          score_dataset(local, local.calibration, derive_seed(local.seed, 0xca11b));
      std::vector<double> calib_scores = row_scores(calib_tables[0], -1, rule, true);
      std::vector<double> real_scores;
      for (std::size_t i = 0; i < calib_scores.size(); ++i)
        if (local.calibration.items[i].label == Label::Real)
          real_scores.push_back(calib_scores[i]);
      tau = detector::calibrate_threshold(real_scores, setup.retention).tau;
    }
    curve.taus.push_back(tau);

    auto eval_tables = score_dataset(local, local.evaluation, local.seed);
    std::vector<double> scores = row_scores(eval_tables[0], -1, rule, true);
    std::vector<ScoredSample> samples(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      samples[i] = {scores[i], local.evaluation.items[i].label};
    curve.points.emplace_back(param, average_precision(samples));
  }
  return curve;
}

void write_sweep_csv(const SweepCurve& curve, std::ostream& out) {
  out << (curve.axis == SweepAxis::JpegQuality ? "quality" : "ratio") << ",ap\n";
  for (const auto& [param, ap] : curve.points)
    out << fixed6(param) << ',' << fixed6(ap) << '\n';
}

}  // namespace regap::eval
