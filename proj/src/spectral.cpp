#include "regap/spectral.hpp"

#include "regap/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace regap::spectral {

namespace {

// Apply one-sided Jacobi sweeps to W (columns become orthogonal); V tracks the
// accumulated right rotations.
bool jacobi_sweep(Mat& W, Mat& V) {
  const int n = static_cast<int>(W.cols());
  bool rotated = false;
  for (int p = 0; p < n - 1; ++p) {
    for (int q = p + 1; q < n; ++q) {
      double app = W.col(p).squaredNorm();
      double aqq = W.col(q).squaredNorm();
      double apq = W.col(p).dot(W.col(q));
      if (std::abs(apq) <= 1e-16 * std::sqrt(app * aqq) || apq == 0.0) continue;
      rotated = true;
      double zeta = (aqq - app) / (2.0 * apq);
      double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
      double c = 1.0 / std::hypot(1.0, t);
      double s = c * t;
      Vec wp = W.col(p);
      W.col(p) = c * wp - s * W.col(q);
      W.col(q) = s * wp + c * W.col(q);
      Vec vp = V.col(p);
      V.col(p) = c * vp - s * V.col(q);
      V.col(q) = s * vp + c * V.col(q);
    }
  }
  return rotated;
}

// Extend the nonzero columns of U to a full orthonormal set (rank-deficient
// inputs leave zero columns behind).
void complete_basis(Mat& U, int from) {
  const int m = static_cast<int>(U.rows());
  const int k = static_cast<int>(U.cols());
  int axis = 0;
  for (int j = from; j < k; ++j) {
    for (; axis <= m; ++axis) {
      if (axis == m)
        throw std::runtime_error("svd: failed to complete orthonormal basis");
      Vec cand = Vec::Zero(m);
      cand[axis] = 1.0;
      for (int i = 0; i < j; ++i) cand -= U.col(i).dot(cand) * U.col(i);
      double nrm = cand.norm();
      if (nrm > 1e-8) {
        U.col(j) = cand / nrm;
        ++axis;
        break;
      }
    }
  }
}

}  // namespace

SvdResult svd(const Mat& m) {
  if (!m.allFinite()) throw std::invalid_argument("svd: non-finite entries");
  const bool transposed = m.rows() < m.cols();
  Mat W = transposed ? Mat(m.transpose()) : m;
  const int k = static_cast<int>(W.cols());
  Mat V = Mat::Identity(k, k);

  for (int sweep = 0; sweep < 60; ++sweep) {
    if (!jacobi_sweep(W, V)) break;
  }

  Vec S(k);
  Mat U(W.rows(), k);
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  Vec norms(k);
  for (int j = 0; j < k; ++j) norms[j] = W.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return norms[a] > norms[b]; });

  double tiny = 1e-300;
  int rank = k;
  for (int j = 0; j < k; ++j) {
    int src = order[j];
    S[j] = norms[src];
    if (S[j] > tiny) {
      U.col(j) = W.col(src) / S[j];
    } else {
      S[j] = 0.0;
      U.col(j).setZero();
      rank = std::min(rank, j);
    }
  }
  if (rank < k) complete_basis(U, rank);

  Mat Vs(k, k);
  for (int j = 0; j < k; ++j) Vs.col(j) = V.col(order[j]);

  if (transposed) return {Vs, S, U};
  return {U, S, Vs};
}

SpectralReport condition_number(const model::AutoencoderPair& pair, const Vec& z) {
  SpectralReport rep;
  rep.at_latent = z;
  Vec S = svd(pair.decoder_jacobian(z)).S;
  rep.sigma_max = S[0];
  rep.sigma_min = S[S.size() - 1];
  rep.kappa = rep.sigma_min <= 1e-14 ? std::numeric_limits<double>::infinity()
                                     : rep.sigma_max / rep.sigma_min;
  return rep;
}

double theorem_bound(double kappa, double eps_norm) {
  if (eps_norm < 0.0) throw std::invalid_argument("theorem_bound: negative eps norm");
  if (kappa < 1.0) throw std::invalid_argument("theorem_bound: kappa must be >= 1");
  if (std::isinf(kappa)) return eps_norm;  // degenerates to the simple bound
  return std::sqrt(1.0 + 1.0 / (kappa * kappa)) * eps_norm;
}

Vec first_order_reconstruction(const model::AutoencoderPair& pair, const Vec& x_tilde,
                               const Vec& eps_perp) {
  Vec z_star = pair.encode(x_tilde);
  Mat Jd = pair.decoder_jacobian(z_star);
  Mat Je = pair.encoder_jacobian(x_tilde);
  return pair.decode(z_star) + Jd * (Je * eps_perp);
}

BoundCheck verify_bound(const model::AutoencoderPair& pair, const Vec& x,
                        const manifold::ProjectionConfig& cfg, double allowance_coeff) {
  BoundCheck check;
  check.recon_error = (x - pair.decode(pair.encode(x))).norm();

  auto proj = manifold::project(pair, x, cfg);
  check.converged = proj.converged;
  check.eps_norm = proj.residual_norm;
  check.simple_bound = check.eps_norm;

  auto spec = condition_number(pair, proj.z_star);
  check.kappa = spec.kappa;
  check.stated_bound = theorem_bound(std::max(1.0, spec.kappa), check.eps_norm);
  check.second_order_allowance = allowance_coeff * check.eps_norm * check.eps_norm;
  check.ratio = check.eps_norm > 0.0 ? check.recon_error / check.eps_norm : 1.0;

  Vec fo = first_order_reconstruction(pair, proj.x_tilde, proj.epsilon_perp);
  check.first_order_error = (x - fo).norm();
  Vec z_star = pair.encode(proj.x_tilde);
  check.tangent_response_norm =
      (pair.decoder_jacobian(z_star) *
       (pair.encoder_jacobian(proj.x_tilde) * proj.epsilon_perp))
          .norm();

  // Relative slack absorbs rounding when the bound is met with equality.
  auto meets = [&](double value, double bound) {
    return value >= bound - check.second_order_allowance - 1e-9 * (1.0 + bound);
  };
  check.holds_simple = check.converged && meets(check.recon_error, check.simple_bound);
  check.holds_stated = check.converged && meets(check.recon_error, check.stated_bound);
  check.holds_stated_first_order =
      check.converged && meets(check.first_order_error, check.stated_bound);
  return check;
}

BoundSweepTable bound_sweep(const model::AutoencoderPair& pair,
                            const model::LatentPrior& prior,
                            const std::vector<double>& magnitudes,
                            int trials_per_magnitude, std::uint64_t seed,
                            const manifold::ProjectionConfig& cfg,
                            double allowance_coeff) {
  if (!std::is_sorted(magnitudes.begin(), magnitudes.end()))
    throw std::invalid_argument("bound_sweep: magnitudes must be ascending");
  BoundSweepTable table;
  std::vector<double> log_m, log_e;
  for (std::size_t mi = 0; mi < magnitudes.size(); ++mi) {
    double m = magnitudes[mi];
    BoundSweepRow row;
    row.magnitude = m;
    row.min_ratio = std::numeric_limits<double>::infinity();
    int n_simple = 0, n_stated = 0;
    Rng rng(derive_seed(seed, mi));
    for (int t = 0; t < trials_per_magnitude; ++t) {
      auto sample = manifold::sample_tubular(pair, prior, m, rng);
      auto check = verify_bound(pair, sample.x_off, cfg, allowance_coeff);
      row.mean_error += check.recon_error;
      row.min_ratio = std::min(row.min_ratio, check.ratio);
      n_simple += check.holds_simple ? 1 : 0;
      n_stated += check.holds_stated ? 1 : 0;
    }
    row.mean_error /= trials_per_magnitude;
    row.frac_simple = static_cast<double>(n_simple) / trials_per_magnitude;
    row.frac_stated = static_cast<double>(n_stated) / trials_per_magnitude;
    table.rows.push_back(row);
    if (m > 0.0 && row.mean_error > 0.0) {
      log_m.push_back(std::log(m));
      log_e.push_back(std::log(row.mean_error));
    }
  }
  // Least-squares slope of log(error) against log(magnitude).
  if (log_m.size() >= 2) {
    double mx = std::accumulate(log_m.begin(), log_m.end(), 0.0) / log_m.size();
    double my = std::accumulate(log_e.begin(), log_e.end(), 0.0) / log_e.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_m.size(); ++i) {
      num += (log_m[i] - mx) * (log_e[i] - my);
      den += (log_m[i] - mx) * (log_m[i] - mx);
    }
    table.slope = den > 0.0 ? num / den : 0.0;
  }
  return table;
}

void write_csv(const BoundSweepTable& table, std::ostream& out) {
  out << "magnitude,mean_error,min_ratio,frac_simple,frac_stated,slope\n";
  for (const auto& row : table.rows) {
    std::ostringstream line;
    line.setf(std::ios::scientific);
    line.precision(12);
    line << row.magnitude << ',' << row.mean_error << ',' << row.min_ratio << ','
         << row.frac_simple << ',' << row.frac_stated << ',' << table.slope;
    out << line.str() << '\n';
  }
}

}  // namespace regap::spectral
