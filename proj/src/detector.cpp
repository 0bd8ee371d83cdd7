#include "regap/detector.hpp"

#include "regap/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace regap::detector {

const char* to_string(AggregationRule r) {
  switch (r) {
    case AggregationRule::Max:
      return "max";
    case AggregationRule::Mean:
      return "mean";
    case AggregationRule::Min:
      return "min";
  }
  return "max";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Real:
      return "real";
    case Verdict::Generated:
      return "generated";
    case Verdict::Unclassified:
      return "unclassified";
  }
  return "unclassified";
}

AggregationRule aggregation_from_string(const std::string& name) {
  if (name == "max") return AggregationRule::Max;
  if (name == "mean") return AggregationRule::Mean;
  if (name == "min") return AggregationRule::Min;
  throw std::invalid_argument("unknown aggregation rule: " + name);
}

ImageTensor reconstruct(const model::AutoencoderPair& pair, const ImageTensor& x) {
  if (!(x.shape == pair.image_shape()))
    throw std::invalid_argument("reconstruct: image shape mismatch");
  return {x.shape, pair.decode(pair.encode(x.values))};
}

double static_error(const model::AutoencoderPair& pair, metrics::MetricKind kind,
                    const metrics::MetricConfig& cfg, const ImageTensor& x) {
  return metrics::distance(kind, cfg, x, reconstruct(pair, x));
}

DynamicError dynamic_error(const model::AutoencoderPair& pair,
                           const model::LatentPrior& prior, metrics::MetricKind kind,
                           const metrics::MetricConfig& mcfg, edits::EditKind edit,
                           const edits::EditConfig& ecfg, const ImageTensor& x, Rng& rng) {
  DynamicError out;
  out.e_pre = static_error(pair, kind, mcfg, x);
  ImageTensor edited = edits::apply_edit(edit, pair, prior, x, ecfg, rng);
  out.e_post = static_error(pair, kind, mcfg, edited);
  out.delta = out.e_post - out.e_pre;
  return out;
}

double aggregate(const std::vector<double>& deltas, AggregationRule rule) {
  if (deltas.empty()) throw std::invalid_argument("aggregate: empty delta list");
  switch (rule) {
    case AggregationRule::Max:
      return *std::max_element(deltas.begin(), deltas.end());
    case AggregationRule::Min:
      return *std::min_element(deltas.begin(), deltas.end());
    case AggregationRule::Mean:
      return std::accumulate(deltas.begin(), deltas.end(), 0.0) / deltas.size();
  }
  throw std::logic_error("aggregate: unreachable");
}

Calibration calibrate_threshold(std::vector<double> real_deltas, double retention) {
  if (real_deltas.empty())
    throw std::invalid_argument("calibrate_threshold: empty calibration set");
  if (!(retention > 0.0 && retention < 1.0))
    throw std::invalid_argument("calibrate_threshold: retention must be in (0,1)");
  std::sort(real_deltas.begin(), real_deltas.end());
  auto n = real_deltas.size();
  // Nearest-rank percentile: 1-based index ceil(retention * n).
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(retention * static_cast<double>(n)));
  rank = std::min(std::max<std::size_t>(rank, 1), n);
  Calibration cal;
  cal.tau = real_deltas[rank - 1];
  cal.retention = retention;
  cal.n_calibration = static_cast<int>(n);
  return cal;
}

Verdict classify(double delta_star, double tau) {
  if (!std::isfinite(delta_star) || !std::isfinite(tau))
    throw std::invalid_argument("classify: non-finite input");
  return delta_star > tau ? Verdict::Generated : Verdict::Real;
}

std::vector<DetectionRecord> detect_batch(const model::AutoencoderPair& pair,
                                          const model::LatentPrior& prior,
                                          const BatchConfig& cfg,
                                          const std::vector<ImageTensor>& images,
                                          const std::vector<std::string>* ids,
                                          const std::vector<Label>* truth) {
  if (cfg.edit_set.empty()) throw std::invalid_argument("detect_batch: empty edit set");
  if (ids && ids->size() != images.size())
    throw std::invalid_argument("detect_batch: id count mismatch");
  if (truth && truth->size() != images.size())
    throw std::invalid_argument("detect_batch: label count mismatch");

  std::vector<DetectionRecord> records(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    DetectionRecord& rec = records[i];
    rec.id = ids ? (*ids)[i] : std::to_string(i);
    if (truth) rec.truth = (*truth)[i];
    try {
      Rng rng(derive_seed(cfg.master_seed, i));
      const ImageTensor& x = images[i];
      rec.e_pre = static_error(pair, cfg.metric, cfg.metric_cfg, x);
      std::vector<double> deltas;
      deltas.reserve(cfg.edit_set.size());
      for (const auto& spec : cfg.edit_set) {
        ImageTensor edited = edits::apply_edit(spec.kind, pair, prior, x, spec.cfg, rng);
        double e_post = static_error(pair, cfg.metric, cfg.metric_cfg, edited);
        rec.per_edit.push_back({spec.kind, e_post, e_post - rec.e_pre});
        deltas.push_back(e_post - rec.e_pre);
      }
      rec.delta_star = aggregate(deltas, cfg.rule);
      rec.verdict = cfg.tau ? classify(rec.delta_star, *cfg.tau) : Verdict::Unclassified;
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.verdict = Verdict::Unclassified;
    }
  });
  return records;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void write_records_csv(const std::vector<DetectionRecord>& records,
                       std::optional<double> tau, std::ostream& out) {
  out << "id,label,e_pre,e_post_add,e_post_fix,e_post_sem,d_add,d_fix,d_sem,"
         "delta_star,tau,verdict\n";
  for (const auto& rec : records) {
    std::string post[3], delta[3];
    for (const auto& pe : rec.per_edit) {
      int k = static_cast<int>(pe.kind);
      if (post[k].empty()) {
        post[k] = fmt(pe.e_post);
        delta[k] = fmt(pe.delta);
      }
    }
    out << rec.id << ',' << (rec.truth ? regap::to_string(*rec.truth) : "") << ','
        << (rec.failed ? "" : fmt(rec.e_pre)) << ',' << post[0] << ',' << post[1] << ','
        << post[2] << ',' << delta[0] << ',' << delta[1] << ',' << delta[2] << ','
        << (rec.failed ? "" : fmt(rec.delta_star)) << ',' << (tau ? fmt(*tau) : "")
        << ',' << (rec.failed ? std::string("error:") + rec.error : to_string(rec.verdict))
        << '\n';
  }
}

}  // namespace regap::detector
