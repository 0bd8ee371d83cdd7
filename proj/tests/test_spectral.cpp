#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "regap/manifold.hpp"
#include "regap/rng.hpp"
#include "regap/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace regap;

namespace {

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

// Independent oracle: singular values from the eigenvalues of the Gram matrix.
Vec gram_singular_values(const Mat& m) {
  Mat gram = m.cols() <= m.rows() ? Mat(m.transpose() * m) : Mat(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  Vec ev = es.eigenvalues();  // ascending
  Vec sv(ev.size());
  for (int i = 0; i < ev.size(); ++i)
    sv[i] = std::sqrt(std::max(0.0, ev[ev.size() - 1 - i]));
  return sv;
}

void check_factorization(const Mat& m, double rel_tol = 1e-8) {
  auto r = spectral::svd(m);
  const int k = static_cast<int>(r.S.size());
  REQUIRE(k == std::min(m.rows(), m.cols()));
  CHECK((r.U.transpose() * r.U - Mat::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((r.V.transpose() * r.V - Mat::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 1; i < k; ++i) CHECK(r.S[i] <= r.S[i - 1]);
  CHECK(r.S.minCoeff() >= 0.0);
  double denom = std::max(1e-30, m.norm());
  CHECK((r.U * r.S.asDiagonal() * r.V.transpose() - m).norm() / denom <= rel_tol);
}

}  // namespace

TEST_CASE("svd: diagonal and antidiagonal fixtures") {
  Mat d(2, 2);
  d << 3, 0, 0, 2;
  auto r = spectral::svd(d);
  CHECK(r.S[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.S[1] == doctest::Approx(2.0).epsilon(1e-12));

  Mat a(2, 2);
  a << 0, 1, 1, 0;
  auto r2 = spectral::svd(a);
  CHECK(r2.S[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.S[1] == doctest::Approx(1.0).epsilon(1e-12));
  check_factorization(a);
}

TEST_CASE("svd: random shapes, Gram oracle, orthonormal factors") {
  Rng rng(42);
  for (auto [rows, cols] : {std::pair{24, 4}, {4, 24}, {16, 16}, {1024, 16}, {7, 3}}) {
    Mat m = random_matrix(rows, cols, rng);
    check_factorization(m);
    Vec oracle = gram_singular_values(m);
    Vec s = spectral::svd(m).S;
    for (int i = 0; i < s.size(); ++i)
      CHECK(s[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
  }
}

TEST_CASE("svd: rank deficiency keeps factors orthonormal") {
  Rng rng(7);
  Mat m = random_matrix(12, 2, rng);
  Mat wide(12, 5);
  wide.col(0) = m.col(0);
  wide.col(1) = m.col(1);
  wide.col(2) = m.col(0) + m.col(1);
  wide.col(3) = 2.0 * m.col(0);
  wide.col(4) = m.col(1) - m.col(0);
  auto r = spectral::svd(wide);
  CHECK(r.S[2] < 1e-12 * r.S[0]);
  CHECK(r.S[4] < 1e-12 * r.S[0]);
  check_factorization(wide);

  // An exactly-zero column exercises basis completion.
  Mat with_zero = random_matrix(6, 3, rng);
  with_zero.col(1).setZero();
  with_zero.col(2) = with_zero.col(0);
  auto rz = spectral::svd(with_zero);
  CHECK(rz.S[2] == 0.0);
  check_factorization(with_zero);

  CHECK_THROWS(spectral::svd(Mat::Constant(2, 2, std::nan(""))));
}

TEST_CASE("condition_number fixtures") {
  ImageShape shape{1, 3, 1};
  Mat A(3, 2);
  A << 2, 0, 0, 1, 0, 0;
  Mat M(2, 3);
  M << 0.5, 0, 0, 0, 1, 0;
  model::LinearPair pair(shape, A, Vec::Zero(3), M, Vec::Zero(2));
  auto rep = spectral::condition_number(pair, Vec::Zero(2));
  CHECK(rep.sigma_max == doctest::Approx(2.0));
  CHECK(rep.sigma_min == doctest::Approx(1.0));
  CHECK(rep.kappa == doctest::Approx(2.0));

  auto ortho = model::LinearPair::orthonormal(ImageShape{2, 2, 1}, 2, 5);
  auto rep2 = spectral::condition_number(ortho, Vec::Zero(2));
  CHECK(rep2.kappa == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("condition_number: rank-deficient decoder reports infinity") {
  // Bypass LinearPair validation with a bespoke degenerate model.
  struct Degenerate : model::AutoencoderPair {
    ImageShape image_shape() const override { return {1, 3, 1}; }
    int latent_dim() const override { return 2; }
    Vec decode(const Vec& z) const override { return decoder_jacobian(z) * z; }
    Vec encode(const Vec&) const override { return Vec::Zero(2); }
    Mat decoder_jacobian(const Vec&) const override {
      Mat A(3, 2);
      A << 1, 0, 2, 0, 0, 0;
      return A;
    }
    Mat encoder_jacobian(const Vec&) const override { return Mat::Zero(2, 3); }
  } degenerate;
  auto rep = spectral::condition_number(degenerate, Vec::Zero(2));
  CHECK(std::isinf(rep.kappa));
}

TEST_CASE("theorem_bound closed forms and monotonicity") {
  CHECK(spectral::theorem_bound(1.0, 0.1) == doctest::Approx(0.1414214).epsilon(1e-6));
  CHECK(spectral::theorem_bound(2.0, 0.1) == doctest::Approx(0.1118034).epsilon(1e-6));
  CHECK(spectral::theorem_bound(std::numeric_limits<double>::infinity(), 0.1) ==
        doctest::Approx(0.1));

  // Non-increasing in kappa, linear in eps.
  double prev = spectral::theorem_bound(1.0, 0.5);
  for (double kappa : {1.5, 2.0, 10.0, 1e6}) {
    double b = spectral::theorem_bound(kappa, 0.5);
    CHECK(b <= prev + 1e-15);
    prev = b;
  }
  CHECK(spectral::theorem_bound(3.0, 0.4) ==
        doctest::Approx(2.0 * spectral::theorem_bound(3.0, 0.2)).epsilon(1e-12));
}

TEST_CASE("verify_bound: exact left-inverse encoder attains the simple bound only") {
  auto pair = testing::tiny_axis_pair();
  Vec x(3);
  x << 2, 3, 0.05;
  auto check = spectral::verify_bound(pair, x);
  CHECK(check.converged);
  CHECK(check.recon_error == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(check.eps_norm == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(check.holds_simple);
  // The stated factor sqrt(2) * 0.05 = 0.0707 exceeds the actual error here.
  CHECK(check.stated_bound == doctest::Approx(0.0707107).epsilon(1e-5));
  CHECK_FALSE(check.holds_stated);
}

TEST_CASE("verify_bound: normal-sensitive encoder attains the stated bound") {
  auto pair = model::LinearPair::normal_sensitive(ImageShape{4, 4, 1}, 8, 11);
  auto prior = model::LatentPrior::standard_normal(8);
  Rng rng(3);
  for (int t = 0; t < 25; ++t) {
    auto s = manifold::sample_tubular(pair, prior, 0.05, rng);
    // encode(D(z)) = z exactly for this construction.
    CHECK((pair.encode(s.x_on) - s.z).norm() < 1e-10);
    auto check = spectral::verify_bound(pair, s.x_off);
    REQUIRE(check.converged);
    CHECK(check.recon_error ==
          doctest::Approx(std::sqrt(2.0) * 0.05).epsilon(1e-8));
    CHECK(check.holds_stated);
    CHECK(check.holds_simple);
  }
}

TEST_CASE("verify_bound: on-manifold input has near-zero error") {
  auto pair = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 6, 2);
  auto prior = model::LatentPrior::standard_normal(6);
  Rng rng(9);
  Vec x = pair.decode(prior.sample(rng));
  auto check = spectral::verify_bound(pair, x);
  CHECK(check.recon_error <= 1e-10);
  CHECK(check.eps_norm <= 1e-10);
}

TEST_CASE("first_order_reconstruction: exact for linear pairs, zero eps") {
  auto pair = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 5, 21, 1.3, 0.2);
  auto prior = model::LatentPrior::standard_normal(5);
  Rng rng(4);
  auto s = manifold::sample_tubular(pair, prior, 0.2, rng);
  Vec predicted = spectral::first_order_reconstruction(pair, s.x_on, s.eps);
  Vec exact = pair.decode(pair.encode(s.x_off));
  CHECK((predicted - exact).norm() < 1e-10);  // Taylor is exact for affine maps

  Vec same = spectral::first_order_reconstruction(pair, s.x_on, Vec::Zero(16));
  CHECK((same - pair.decode(pair.encode(s.x_on))).norm() < 1e-12);
}

TEST_CASE("first_order_reconstruction: quadratic remainder on a trained pair") {
  const auto& pair = testing::trained_mlp_pair();
  const auto& prior = testing::trained_mlp_prior();
  Rng rng(17);
  std::vector<double> mags{1e-1, 1e-2, 1e-3};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int rep = 0; rep < 5; ++rep) {
    Vec z = prior.sample(rng);
    Vec x_on = pair.decode(z);
    Mat basis = manifold::tangent_basis(pair, z);
    Vec g = rng.normal_vec(16);
    g -= basis * (basis.transpose() * g);
    g.normalize();
    for (double m : mags) {
      Vec eps = m * g;
      Vec predicted = spectral::first_order_reconstruction(pair, x_on, eps);
      Vec exact = pair.decode(pair.encode(x_on + eps));
      double r = (exact - predicted).norm();
      REQUIRE(r > 0.0);
      double lx = std::log(m), ly = std::log(r);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.2);
}

TEST_CASE("pythagorean identity of the first-order residual") {
  // ||eps - J_D J_E eps||^2 = ||eps||^2 + ||J_D J_E eps||^2 on converged
  // projections, since the response lies in the tangent space.
  auto pair = model::LinearPair::normal_sensitive(ImageShape{4, 4, 1}, 8, 23);
  auto prior = model::LatentPrior::standard_normal(8);
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    auto s = manifold::sample_tubular(pair, prior, 0.03, rng);
    auto proj = manifold::project(pair, s.x_off);
    REQUIRE(proj.converged);
    Vec z_star = pair.encode(proj.x_tilde);
    Vec response = pair.decoder_jacobian(z_star) *
                   (pair.encoder_jacobian(proj.x_tilde) * proj.epsilon_perp);
    double lhs = (proj.epsilon_perp - response).squaredNorm();
    double rhs = proj.epsilon_perp.squaredNorm() + response.squaredNorm();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

namespace {

// Encoder that transports normal offsets into the latent at the given gain:
// M = (A + g * N * C)^T with orthonormal A, N and row-orthonormal C. The
// first-order tangent response is then exactly g * ||eps||.
model::LinearPair gain_pair(double gain, std::uint64_t seed) {
  const int n = 16, d = 8, k = 8;
  Rng rng(seed);
  Mat G(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) G(r, c) = rng.normal();
  Mat F = Eigen::HouseholderQR<Mat>(G).householderQ() * Mat::Identity(n, n);
  Mat A = F.leftCols(d);
  Mat N = F.rightCols(k);
  Mat Gc(d, k);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < k; ++c) Gc(r, c) = rng.normal();
  Mat C = (Eigen::HouseholderQR<Mat>(Gc).householderQ() * Mat::Identity(d, k)).transpose();
  Mat M = (A + gain * N * C).transpose();
  return model::LinearPair(ImageShape{4, 4, 1}, A, Vec::Zero(n), M, Vec::Zero(d));
}

}  // namespace

TEST_CASE("stated-bound equivalence holds on every BoundCheck") {
  // holds_stated(first-order) <=> ||J_D J_E eps|| >= kappa^-1 ||eps||; checked
  // away from the exact-equality boundary (gain 1 sits on it).
  Rng rng(5);
  auto prior = model::LatentPrior::standard_normal(8);
  int true_sides = 0, false_sides = 0;
  for (double gain : {0.2, 0.5, 0.9, 1.1, 2.0, 4.0}) {
    auto pair = gain_pair(gain, 100 + static_cast<std::uint64_t>(gain * 10));
    for (int t = 0; t < 10; ++t) {
      auto s = manifold::sample_tubular(pair, prior, 0.05, rng);
      auto check = spectral::verify_bound(pair, s.x_off);
      REQUIRE(check.converged);
      CHECK(check.tangent_response_norm ==
            doctest::Approx(gain * check.eps_norm).epsilon(1e-8));
      bool rhs = check.tangent_response_norm >= check.eps_norm / check.kappa;
      CHECK(check.holds_stated_first_order == rhs);
      (rhs ? true_sides : false_sides)++;
    }
  }
  CHECK(true_sides > 0);
  CHECK(false_sides > 0);
}

TEST_CASE("bound_sweep: exact linear pair satisfies the simple bound everywhere") {
  auto pair = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 6, 13, 1.0, 0.0);
  auto prior = model::LatentPrior::standard_normal(6);
  auto table = spectral::bound_sweep(pair, prior, {0.0, 0.01, 0.05, 0.1}, 40, 99);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.rows[0].mean_error <= 1e-10);  // on-manifold row
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].frac_simple == 1.0);
  }
  // Reconstruction error scales linearly with the offset magnitude.
  CHECK(table.slope >= 0.95);
  CHECK(table.slope <= 1.05);

  CHECK_THROWS(spectral::bound_sweep(pair, prior, {0.1, 0.05}, 5, 1));
}

TEST_CASE("bound_sweep csv has one row per magnitude") {
  auto pair = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 6, 13);
  auto prior = model::LatentPrior::standard_normal(6);
  auto table = spectral::bound_sweep(pair, prior, {0.01, 0.1}, 5, 3);
  std::ostringstream os;
  spectral::write_csv(table, os);
  std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
  CHECK(text.rfind("magnitude,mean_error,min_ratio,frac_simple,frac_stated,slope", 0) == 0);
}
