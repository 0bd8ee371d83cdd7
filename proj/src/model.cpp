#include "regap/model.hpp"

#include "regap/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace regap::model {

LatentPrior LatentPrior::standard_normal(int d) {
  if (d <= 0) throw std::invalid_argument("LatentPrior: dim must be positive");
  LatentPrior p;
  p.kind = Kind::StandardNormal;
  p.dim = d;
  return p;
}

LatentPrior LatentPrior::uniform_box(int d, double lo, double hi) {
  if (d <= 0) throw std::invalid_argument("LatentPrior: dim must be positive");
  if (!(lo < hi)) throw std::invalid_argument("LatentPrior: uniform box needs lo < hi");
  LatentPrior p;
  p.kind = Kind::UniformBox;
  p.dim = d;
  p.lo = Vec::Constant(d, lo);
  p.hi = Vec::Constant(d, hi);
  return p;
}

Vec LatentPrior::sample(Rng& rng) const {
  Vec z(dim);
  if (kind == Kind::StandardNormal) {
    for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  } else {
    for (int i = 0; i < dim; ++i) z[i] = rng.uniform(lo[i], hi[i]);
  }
  return z;
}

// ---------------------------------------------------------------------------
// LinearPair

LinearPair::LinearPair(ImageShape shape, Mat A, Vec b, Mat M, Vec c)
    : shape_(shape), A_(std::move(A)), M_(std::move(M)), b_(std::move(b)), c_(std::move(c)) {
  const int n = shape_.pixel_count();
  const int d = static_cast<int>(A_.cols());
  if (A_.rows() != n || b_.size() != n || M_.rows() != d || M_.cols() != n ||
      c_.size() != d)
    throw std::invalid_argument("LinearPair: inconsistent matrix shapes");

  // Exact-inverse identity (A1 on the manifold, up to the encoder bias).
  double residual = (M_ * A_ - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw std::invalid_argument("LinearPair: M*A deviates from identity beyond 1e-10");

  // Full column rank (A2).
  Vec sv = spectral::svd(A_).S;
  if (sv[sv.size() - 1] <= 1e-12 * std::max(1.0, sv[0]))
    throw std::invalid_argument("LinearPair: decoder matrix is rank deficient");
}

namespace {

Mat random_orthonormal_columns(int rows, int cols, Rng& rng) {
  Mat G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(rows, cols);
  return Q;
}

}  // namespace

LinearPair LinearPair::orthonormal(ImageShape shape, int latent_dim, std::uint64_t seed,
                                   double scale, double bias) {
  const int n = shape.pixel_count();
  if (latent_dim <= 0 || latent_dim > n)
    throw std::invalid_argument("LinearPair: latent dim out of range");
  Rng rng(seed);
  Mat Q = random_orthonormal_columns(n, latent_dim, rng);
  Mat A = scale * Q;
  Mat M = Q.transpose() / scale;
  return LinearPair(shape, A, Vec::Constant(n, bias), M, Vec::Zero(latent_dim));
}

LinearPair LinearPair::normal_sensitive(ImageShape shape, int latent_dim,
                                        std::uint64_t seed, double bias) {
  const int n = shape.pixel_count();
  const int k = n - latent_dim;
  if (latent_dim <= 0 || k <= 0)
    throw std::invalid_argument("LinearPair: ambient dim must exceed latent dim");
  if (k > latent_dim)
    throw std::invalid_argument(
        "LinearPair: normal-sensitive pair needs ambient - latent <= latent");
  Rng rng(seed);
  // Full orthonormal frame: first d columns span the manifold, the rest the
  // normal space.
  Mat F = random_orthonormal_columns(n, n, rng);
  Mat A = F.leftCols(latent_dim);
  Mat N = F.rightCols(k);
  // Row-orthonormal C keeps ||C^T u|| = ||u||, so the encoder transports every
  // normal offset into the latent at unit gain.
  Mat C = random_orthonormal_columns(latent_dim, k, rng).transpose();
  Mat M = (A + N * C).transpose();
  return LinearPair(shape, A, Vec::Constant(n, bias), M, Vec::Zero(latent_dim));
}

Vec LinearPair::decode(const Vec& z) const {
  if (z.size() != A_.cols()) throw std::invalid_argument("decode: latent dim mismatch");
  return A_ * z + b_;
}

Vec LinearPair::encode(const Vec& x) const {
  if (x.size() != A_.rows()) throw std::invalid_argument("encode: image dim mismatch");
  return M_ * (x - b_) + c_;
}

Mat LinearPair::decoder_jacobian(const Vec& z) const {
  if (z.size() != A_.cols())
    throw std::invalid_argument("decoder_jacobian: latent dim mismatch");
  return A_;
}

Mat LinearPair::encoder_jacobian(const Vec& x) const {
  if (x.size() != A_.rows())
    throw std::invalid_argument("encoder_jacobian: image dim mismatch");
  return M_;
}

// ---------------------------------------------------------------------------
// MlpPair

double activate(Activation a, double v) {
  switch (a) {
    case Activation::Tanh:
      return std::tanh(v);
    case Activation::Softplus:
      // log(1 + e^v), overflow-safe
      return v > 30.0 ? v : std::log1p(std::exp(v));
    case Activation::Identity:
      return v;
  }
  return v;
}

double activate_grad(Activation a, double v) {
  switch (a) {
    case Activation::Tanh: {
      double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case Activation::Softplus:
      return 1.0 / (1.0 + std::exp(-v));
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Softplus:
      return "softplus";
    case Activation::Identity:
      return "identity";
  }
  return "identity";
}

Vec forward_stack(const std::vector<MlpLayer>& layers, const Vec& in) {
  Vec a = in;
  for (const auto& layer : layers) {
    Vec pre = layer.W * a + layer.b;
    a.resize(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) a[i] = activate(layer.act, pre[i]);
  }
  return a;
}

// Forward accumulation: J <- diag(act'(pre)) * W * J per layer.
Mat jacobian_stack(const std::vector<MlpLayer>& layers, const Vec& in) {
  Vec a = in;
  Mat J = Mat::Identity(in.size(), in.size());
  for (const auto& layer : layers) {
    Vec pre = layer.W * a + layer.b;
    J = layer.W * J;
    for (Eigen::Index i = 0; i < pre.size(); ++i) J.row(i) *= activate_grad(layer.act, pre[i]);
    a.resize(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) a[i] = activate(layer.act, pre[i]);
  }
  return J;
}

namespace {

void validate_stack(const std::vector<MlpLayer>& layers, int in_dim, int out_dim,
                    const char* what) {
  if (layers.empty()) throw std::invalid_argument(std::string(what) + ": empty layer stack");
  int cur = in_dim;
  for (const auto& layer : layers) {
    if (layer.W.cols() != cur || layer.b.size() != layer.W.rows())
      throw std::invalid_argument(std::string(what) + ": layer shapes do not compose");
    cur = static_cast<int>(layer.W.rows());
  }
  if (cur != out_dim)
    throw std::invalid_argument(std::string(what) + ": output dim mismatch");
}

}  // namespace

MlpPair::MlpPair(ImageShape shape, std::vector<MlpLayer> encoder,
                 std::vector<MlpLayer> decoder)
    : shape_(shape), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  const int n = shape_.pixel_count();
  latent_dim_ = static_cast<int>(encoder_.back().W.rows());
  validate_stack(encoder_, n, latent_dim_, "MlpPair encoder");
  validate_stack(decoder_, latent_dim_, n, "MlpPair decoder");
}

MlpPair MlpPair::random(ImageShape shape, int latent_dim,
                        const std::vector<int>& encoder_hidden,
                        const std::vector<int>& decoder_hidden, Activation hidden_act,
                        std::uint64_t seed, double weight_scale) {
  Rng rng(seed);
  auto build = [&](int in, int out, const std::vector<int>& hidden) {
    std::vector<MlpLayer> layers;
    std::vector<int> dims;
    dims.push_back(in);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      MlpLayer layer;
      layer.W.resize(dims[i + 1], dims[i]);
      double limit = weight_scale * std::sqrt(6.0 / (dims[i] + dims[i + 1]));
      for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
          layer.W(r, c) = rng.uniform(-limit, limit);
      layer.b = Vec::Zero(dims[i + 1]);
      layer.act =
          (i + 2 < dims.size()) ? hidden_act : Activation::Identity;  // linear output
      layers.push_back(std::move(layer));
    }
    return layers;
  };
  const int n = shape.pixel_count();
  return MlpPair(shape, build(n, latent_dim, encoder_hidden),
                 build(latent_dim, n, decoder_hidden));
}

Vec MlpPair::decode(const Vec& z) const {
  if (z.size() != latent_dim_) throw std::invalid_argument("decode: latent dim mismatch");
  return forward_stack(decoder_, z);
}

Vec MlpPair::encode(const Vec& x) const {
  if (x.size() != shape_.pixel_count())
    throw std::invalid_argument("encode: image dim mismatch");
  return forward_stack(encoder_, x);
}

Mat MlpPair::decoder_jacobian(const Vec& z) const {
  if (z.size() != latent_dim_)
    throw std::invalid_argument("decoder_jacobian: latent dim mismatch");
  return jacobian_stack(decoder_, z);
}

Mat MlpPair::encoder_jacobian(const Vec& x) const {
  if (x.size() != shape_.pixel_count())
    throw std::invalid_argument("encoder_jacobian: image dim mismatch");
  return jacobian_stack(encoder_, x);
}

// ---------------------------------------------------------------------------
// Assumption checks

AssumptionReport check_assumptions(const AutoencoderPair& pair, const LatentPrior& prior,
                                   int n_samples, std::uint64_t seed,
                                   const AssumptionTolerances& tol) {
  if (n_samples < 2) throw std::invalid_argument("check_assumptions: need n_samples >= 2");
  Rng rng(seed);
  AssumptionReport report;
  report.tolerances = tol;
  report.a2_sigma_min = std::numeric_limits<double>::infinity();
  report.a3_collision_gap = std::numeric_limits<double>::infinity();

  std::vector<Vec> zs(n_samples);
  std::vector<Vec> xs(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    zs[i] = prior.sample(rng);
    xs[i] = pair.decode(zs[i]);
    double r = (pair.encode(xs[i]) - zs[i]).norm();
    report.a1_residual = std::max(report.a1_residual, r);
    double smin = spectral::svd(pair.decoder_jacobian(zs[i])).S.minCoeff();
    report.a2_sigma_min = std::min(report.a2_sigma_min, smin);
  }
  for (int i = 0; i < n_samples; ++i) {
    for (int j = i + 1; j < n_samples; ++j) {
      double dz = (zs[i] - zs[j]).norm();
      if (dz < 1e-12) continue;
      report.a3_collision_gap =
          std::min(report.a3_collision_gap, (xs[i] - xs[j]).norm() / dz);
    }
  }
  report.a1_pass = report.a1_residual <= tol.a1;
  report.a2_pass = report.a2_sigma_min > tol.a2;
  report.a3_pass = report.a3_collision_gap > tol.a3;
  return report;
}

std::string AssumptionReport::summary() const {
  std::ostringstream os;
  os << "A1 exact-latent residual: " << a1_residual << " ("
     << (a1_pass ? "pass" : "FAIL") << ", tol " << tolerances.a1 << ")\n"
     << "A2 min sigma_min(J_D):    " << a2_sigma_min << " ("
     << (a2_pass ? "pass" : "FAIL") << ", tol " << tolerances.a2 << ")\n"
     << "A3 collision gap:         " << a3_collision_gap << " ("
     << (a3_pass ? "pass" : "FAIL") << ", heuristic)";
  return os.str();
}

}  // namespace regap::model
