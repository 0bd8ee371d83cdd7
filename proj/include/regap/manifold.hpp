#pragma once

#include "regap/model.hpp"
#include "regap/types.hpp"

#include <vector>

namespace regap::manifold {

struct ProjectionConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;  // on ||J_D^T r||
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double damping_max = 1e12;
};

/// Nearest-point projection outcome. x_tilde = decode(z_star) and
/// eps_perp = x - x_tilde hold exactly by construction.
struct ProjectionResult {
  Vec z_star;
  Vec x_tilde;
  Vec epsilon_perp;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective ||x - D(z)||^2 after each accepted step; non-increasing up to
  /// one ulp (accepts tolerate rounding-level ties near the optimum).
  std::vector<double> objective_history;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) minimization of ||x - D(z)||^2,
/// initialized at z0 = E(x). Accepted steps never increase the objective.
/// Non-convergence is reported, not thrown; only damping overflow past
/// cfg.damping_max raises.
ProjectionResult project(const model::AutoencoderPair& pair, const Vec& x,
                         const ProjectionConfig& cfg = {});

/// Orthonormal basis of the tangent space Im J_D(z_star) (column-pivoted QR).
/// Throws on rank deficiency.
Mat tangent_basis(const model::AutoencoderPair& pair, const Vec& z_star);

/// ||B^T eps|| / ||eps||, in [0,1]; defined as 0 for eps = 0.
double orthogonality_defect(const Vec& eps_perp, const Mat& basis);

struct TubularSample {
  Vec z;      // latent of the on-manifold point
  Vec x_on;   // D(z)
  Vec x_off;  // x_on + eps
  Vec eps;    // magnitude * unit vector normal to the tangent space at x_on
};

/// Draws z from the prior and a uniformly random normal direction
/// (Gaussian-project-renormalize). Requires ambient dim > latent dim.
TubularSample sample_tubular(const model::AutoencoderPair& pair,
                             const model::LatentPrior& prior, double magnitude,
                             Rng& rng);

/// Conservative radius within which projection uniqueness is exercised:
/// 0.1 * sigma_min(J_D(z)); +inf for affine decoders (globally unique there).
double tube_radius(const model::AutoencoderPair& pair, const Vec& z);

}  // namespace regap::manifold
