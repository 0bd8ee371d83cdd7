#pragma once

#include "regap/manifold.hpp"
#include "regap/model.hpp"
#include "regap/types.hpp"

#include <iosfwd>
#include <vector>

namespace regap::spectral {

/// Thin SVD m = U diag(S) V^T with S non-negative descending.
struct SvdResult {
  Mat U;  // rows(m) x k
  Vec S;  // k = min(rows, cols)
  Mat V;  // cols(m) x k
};

/// One-sided Jacobi SVD. Accurate for the tall-thin Jacobians used here;
/// handles rank deficiency (zero singular values keep orthonormal U columns).
SvdResult svd(const Mat& m);

struct SpectralReport {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double kappa = 0.0;  // sigma_max / sigma_min; +inf sentinel when degenerate
  Vec at_latent;
};

/// Decoder-Jacobian spectrum at z. kappa becomes +inf when sigma_min <= 1e-14.
SpectralReport condition_number(const model::AutoencoderPair& pair, const Vec& z);

/// First-order lower-bound factor: sqrt(1 + kappa^-2) * eps_norm.
double theorem_bound(double kappa, double eps_norm);

/// Per-sample comparison of the actual reconstruction error against the
/// spectral lower bound and the unconditional simple bound ||eps_perp||.
/// Flags allow a second-order slack C*||eps||^2 plus a 1e-9 relative margin
/// covering floating-point rounding at the equality boundary.
struct BoundCheck {
  double recon_error = 0.0;           // ||x - D(E(x))||
  double eps_norm = 0.0;              // ||eps_perp|| from projection
  double stated_bound = 0.0;          // sqrt(1 + kappa^-2) * eps_norm
  double simple_bound = 0.0;          // eps_norm
  double second_order_allowance = 0.0;
  double ratio = 1.0;                 // recon_error / eps_norm (1 when eps = 0)
  double kappa = 1.0;
  double first_order_error = 0.0;     // ||x - (D(z*) + J_D J_E eps)||
  double tangent_response_norm = 0.0; // ||J_D(z*) J_E(x~) eps||
  bool holds_stated = false;
  bool holds_simple = false;
  bool holds_stated_first_order = false;
  bool converged = false;             // projection converged; flags valid
};

BoundCheck verify_bound(const model::AutoencoderPair& pair, const Vec& x,
                        const manifold::ProjectionConfig& cfg = {},
                        double allowance_coeff = 0.0);

/// Linearized prediction of D(E(x_tilde + eps_perp)):
/// D(z*) + J_D(z*) J_E(x_tilde) eps_perp with z* = E(x_tilde).
Vec first_order_reconstruction(const model::AutoencoderPair& pair, const Vec& x_tilde,
                               const Vec& eps_perp);

struct BoundSweepRow {
  double magnitude = 0.0;
  double mean_error = 0.0;
  double min_ratio = 0.0;
  double frac_simple = 0.0;
  double frac_stated = 0.0;
};

struct BoundSweepTable {
  std::vector<BoundSweepRow> rows;
  double slope = 0.0;  // log-log slope of mean_error vs magnitude (m > 0 rows)
};

/// Tubular sampling sweep over offset magnitudes (ascending). Per magnitude:
/// mean reconstruction error, min error/eps ratio, fraction of samples where
/// each bound holds.
BoundSweepTable bound_sweep(const model::AutoencoderPair& pair,
                            const model::LatentPrior& prior,
                            const std::vector<double>& magnitudes,
                            int trials_per_magnitude, std::uint64_t seed,
                            const manifold::ProjectionConfig& cfg = {},
                            double allowance_coeff = 0.0);

void write_csv(const BoundSweepTable& table, std::ostream& out);

}  // namespace regap::spectral
