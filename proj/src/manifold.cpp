#include "regap/manifold.hpp"

#include "regap/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace regap::manifold {

ProjectionResult project(const model::AutoencoderPair& pair, const Vec& x,
                         const ProjectionConfig& cfg) {
  if (x.size() != pair.image_shape().pixel_count())
    throw std::invalid_argument("project: image dim mismatch");
  if (cfg.max_iterations < 1 || cfg.gradient_tolerance <= 0.0)
    throw std::invalid_argument("project: invalid configuration");

  const int d = pair.latent_dim();
  Vec z = pair.encode(x);
  Vec r = x - pair.decode(z);
  double objective = r.squaredNorm();
  double damping = cfg.initial_damping;

  ProjectionResult result;
  result.converged = false;
  result.iterations = 0;
  result.objective_history.push_back(objective);

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    result.iterations = it;
    Mat J = pair.decoder_jacobian(z);
    Vec gradient = J.transpose() * r;
    if (gradient.norm() <= cfg.gradient_tolerance) {
      result.converged = true;
      break;
    }

    Mat gram = J.transpose() * J;
    bool accepted = false;
    while (!accepted) {
      Mat damped = gram + damping * Mat::Identity(d, d);
      Vec step = Eigen::LDLT<Mat>(damped).solve(gradient);
      Vec z_next = z + step;
      Vec decoded = pair.decode(z_next);
      Vec r_next = x - decoded;
      double objective_next = r_next.squaredNorm();
      // Rounding in the objective evaluation reaches
      // ~eps * sum |r_i| (|x_i| + |D_i|); ties within that band must be
      // accepted or the terminal phase stalls with the gradient still above
      // tolerance. True decreases below this resolution remain decreases.
      double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                     r_next.cwiseAbs().dot(x.cwiseAbs() + decoded.cwiseAbs());
      if (step.allFinite() && objective_next <= objective + noise) {
        z = z_next;
        r = r_next;
        objective = objective_next;
        result.objective_history.push_back(objective);
        damping = std::max(damping * cfg.damping_down, 1e-15);
        accepted = true;
      } else {
        damping *= cfg.damping_up;
        if (damping > cfg.damping_max)
          throw std::runtime_error("project: damping exceeded limit (singular normal equations)");
      }
    }
  }

  if (!result.converged) {
    // Re-check at the final iterate; max_iterations may land exactly on it.
    Vec gradient = pair.decoder_jacobian(z).transpose() * r;
    result.converged = gradient.norm() <= cfg.gradient_tolerance;
  }

  result.z_star = z;
  result.x_tilde = pair.decode(z);
  result.epsilon_perp = x - result.x_tilde;
  result.residual_norm = result.epsilon_perp.norm();
  return result;
}

Mat tangent_basis(const model::AutoencoderPair& pair, const Vec& z_star) {
  Mat J = pair.decoder_jacobian(z_star);
  Eigen::ColPivHouseholderQR<Mat> qr(J);
  qr.setThreshold(1e-12);
  if (qr.rank() < J.cols())
    throw std::runtime_error("tangent_basis: decoder Jacobian is rank deficient");
  return qr.householderQ() * Mat::Identity(J.rows(), J.cols());
}

double orthogonality_defect(const Vec& eps_perp, const Mat& basis) {
  double nrm = eps_perp.norm();
  if (nrm == 0.0) return 0.0;
  return (basis.transpose() * eps_perp).norm() / nrm;
}

TubularSample sample_tubular(const model::AutoencoderPair& pair,
                             const model::LatentPrior& prior, double magnitude,
                             Rng& rng) {
  if (magnitude < 0.0) throw std::invalid_argument("sample_tubular: negative magnitude");
  const int n = pair.image_shape().pixel_count();
  if (n <= pair.latent_dim())
    throw std::invalid_argument("sample_tubular: ambient dim must exceed latent dim");

  TubularSample s;
  s.z = prior.sample(rng);
  s.x_on = pair.decode(s.z);
  if (magnitude == 0.0) {
    s.eps = Vec::Zero(n);
    s.x_off = s.x_on;
    return s;
  }
  Mat basis = tangent_basis(pair, s.z);
  Vec g;
  double nrm = 0.0;
  do {
    g = rng.normal_vec(n);
    g -= basis * (basis.transpose() * g);
    nrm = g.norm();
  } while (nrm < 1e-12);
  s.eps = (magnitude / nrm) * g;
  s.x_off = s.x_on + s.eps;
  return s;
}

double tube_radius(const model::AutoencoderPair& pair, const Vec& z) {
  if (pair.affine()) return std::numeric_limits<double>::infinity();
  Vec S = spectral::svd(pair.decoder_jacobian(z)).S;
  return 0.1 * S[S.size() - 1];
}

}  // namespace regap::manifold
