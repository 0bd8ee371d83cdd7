#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "regap/model.hpp"
#include "regap/model_io.hpp"
#include "regap/train.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace regap;

namespace {

// Central finite differences, step 1e-5.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, int out_dim) {
  const double h = 1e-5;
  Mat J(out_dim, at.size());
  for (int j = 0; j < at.size(); ++j) {
    Vec lo = at, hi = at;
    lo[j] -= h;
    hi[j] += h;
    J.col(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return J;
}

double rel_frobenius(const Mat& a, const Mat& b) {
  return (a - b).norm() / std::max(1e-30, b.norm());
}

}  // namespace

TEST_CASE("linear pair: identity embedding decode/encode") {
  auto pair = testing::tiny_axis_pair();
  Vec z(2);
  z << 2, 3;
  Vec x = pair.decode(z);
  CHECK(x[0] == 2.0);
  CHECK(x[1] == 3.0);
  CHECK(x[2] == 0.0);

  // Determinism: bitwise-identical repeated calls.
  CHECK(pair.decode(z) == pair.decode(z));

  Vec off(3);
  off << 2, 3, 5;
  Vec back = pair.encode(off);
  CHECK(back[0] == 2.0);
  CHECK(back[1] == 3.0);  // normal component annihilated by the left inverse

  CHECK_THROWS(pair.decode(Vec::Zero(3)));
  CHECK_THROWS(pair.encode(Vec::Zero(4)));
}

TEST_CASE("linear pair: constructor enforces exact inverse and rank") {
  Mat A(3, 2);
  A << 1, 0, 0, 1, 0, 0;
  Mat badM(2, 3);
  badM << 1, 0.5, 0, 0, 1, 0;
  CHECK_THROWS(model::LinearPair(ImageShape{1, 3, 1}, A, Vec::Zero(3), badM, Vec::Zero(2)));

  Mat rank1(3, 2);
  rank1 << 1, 0, 2, 0, 0, 0;
  Mat M = Mat::Zero(2, 3);
  CHECK_THROWS(model::LinearPair(ImageShape{1, 3, 1}, rank1, Vec::Zero(3), M, Vec::Zero(2)));
}

TEST_CASE("linear pair: random orthonormal frames satisfy M*A = I") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    auto pair = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 7, seed, 0.8, 0.4);
    Mat prod = pair.encoder_matrix() * pair.decoder_matrix();
    CHECK((prod - Mat::Identity(7, 7)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("normal-sensitive encoder recovers latents exactly") {
  auto pair = model::LinearPair::normal_sensitive(ImageShape{2, 6, 1}, 8, 42);
  auto prior = model::LatentPrior::standard_normal(8);
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    Vec z = prior.sample(rng);
    CHECK((pair.encode(pair.decode(z)) - z).norm() < 1e-12);
  }
  // Needs ambient - latent <= latent.
  CHECK_THROWS(model::LinearPair::normal_sensitive(ImageShape{4, 4, 1}, 4, 1));
}

TEST_CASE("jacobians: linear pair returns its matrices") {
  auto pair = model::LinearPair::orthonormal(ImageShape{3, 3, 1}, 4, 9, 1.5, 0.1);
  Rng rng(2);
  Vec z = rng.normal_vec(4);
  CHECK(pair.decoder_jacobian(z) == pair.decoder_matrix());
  CHECK(pair.encoder_jacobian(rng.normal_vec(9)) == pair.encoder_matrix());
}

TEST_CASE("jacobians: single tanh layer at zero equals its weight matrix") {
  Mat W(3, 2);
  W << 0.3, -0.2, 0.5, 0.7, -0.4, 0.1;
  std::vector<model::MlpLayer> dec{{W, Vec::Zero(3), model::Activation::Tanh}};
  Mat We(2, 3);
  We << 1, 0, 0, 0, 1, 0;
  std::vector<model::MlpLayer> enc{{We, Vec::Zero(2), model::Activation::Identity}};
  model::MlpPair pair(ImageShape{1, 3, 1}, enc, dec);
  CHECK((pair.decoder_jacobian(Vec::Zero(2)) - W).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("jacobians: finite-difference oracle on random MLPs, both maps") {
  auto pair = model::MlpPair::random(ImageShape{4, 4, 1}, 3, {10, 8}, {8, 10},
                                     model::Activation::Tanh, 77);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Vec z = rng.normal_vec(3);
    Mat analytic = pair.decoder_jacobian(z);
    Mat numeric = fd_jacobian([&](const Vec& v) { return pair.decode(v); }, z, 16);
    CHECK(rel_frobenius(analytic, numeric) <= 1e-4);

    Vec x = rng.normal_vec(16);
    Mat analytic_e = pair.encoder_jacobian(x);
    Mat numeric_e = fd_jacobian([&](const Vec& v) { return pair.encode(v); }, x, 3);
    CHECK(rel_frobenius(analytic_e, numeric_e) <= 1e-4);
  }
}

TEST_CASE("jacobians: softplus stack matches finite differences") {
  auto pair = model::MlpPair::random(ImageShape{2, 3, 1}, 2, {5}, {5},
                                     model::Activation::Softplus, 15);
  Rng rng(8);
  Vec z = rng.normal_vec(2);
  Mat numeric = fd_jacobian([&](const Vec& v) { return pair.decode(v); }, z, 6);
  CHECK(rel_frobenius(pair.decoder_jacobian(z), numeric) <= 1e-4);
}

TEST_CASE("training: realizable linear plane reaches tiny loss") {
  // Data on a linear 2-plane in R^9; linear-activation layers can fit exactly.
  Rng rng(12);
  Mat basis(9, 2);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 2; ++c) basis(r, c) = rng.normal();
  std::vector<ImageTensor> dataset;
  for (int i = 0; i < 48; ++i) {
    Vec u = rng.normal_vec(2);
    dataset.push_back({ImageShape{3, 3, 1}, basis * u});
  }
  model::TrainConfig cfg;
  cfg.hidden_activation = model::Activation::Identity;
  cfg.epochs = 60000;
  cfg.learning_rate = 5e-3;
  cfg.lambda = 0.1;
  cfg.prior_samples = 32;
  cfg.seed = 5;
  model::TrainStats stats;
  auto prior = model::LatentPrior::standard_normal(2);
  auto pair = model::train_autoencoder(dataset, prior, cfg, &stats);
  CHECK(stats.final_reconstruction_loss <= 1e-6);

  // decode(encode(x)) reproduces training points to the same tolerance.
  double worst = 0.0;
  for (const auto& img : dataset) {
    Vec r = pair.decode(pair.encode(img.values)) - img.values;
    worst = std::max(worst, r.squaredNorm() / img.values.size());
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("training: latent-consistency term does not hurt the A1 residual") {
  Rng rng(21);
  std::vector<ImageTensor> dataset;
  for (int i = 0; i < 40; ++i)
    dataset.push_back(testing::smooth_image(ImageShape{3, 3, 1}, 1000 + i, 0.3, 0.7));
  auto prior = model::LatentPrior::uniform_box(2, -1.0, 1.0);

  model::TrainConfig cfg;
  cfg.encoder_hidden = {12};
  cfg.decoder_hidden = {12};
  cfg.epochs = 1500;
  cfg.learning_rate = 3e-3;
  cfg.prior_samples = 48;
  cfg.seed = 33;

  cfg.lambda = 0.0;
  auto pair_off = model::train_autoencoder(dataset, prior, cfg);
  cfg.lambda = 0.1;
  auto pair_on = model::train_autoencoder(dataset, prior, cfg);

  auto rep_off = model::check_assumptions(pair_off, prior, 200, 9);
  auto rep_on = model::check_assumptions(pair_on, prior, 200, 9);
  CHECK(rep_on.a1_residual <= rep_off.a1_residual);
}

TEST_CASE("training: empty dataset and divergence raise") {
  model::TrainConfig cfg;
  auto prior = model::LatentPrior::standard_normal(2);
  CHECK_THROWS(model::train_autoencoder({}, prior, cfg));

  std::vector<ImageTensor> dataset{testing::smooth_image(ImageShape{2, 2, 1}, 3)};
  cfg.learning_rate = 1e60;  // guaranteed overflow through the linear stack
  cfg.hidden_activation = model::Activation::Identity;
  cfg.epochs = 60;
  cfg.encoder_hidden = {4};
  cfg.decoder_hidden = {4};
  CHECK_THROWS(model::train_autoencoder(dataset, prior, cfg));
}

TEST_CASE("training: deterministic given seed") {
  std::vector<ImageTensor> dataset;
  for (int i = 0; i < 12; ++i)
    dataset.push_back(testing::smooth_image(ImageShape{2, 2, 1}, 50 + i));
  auto prior = model::LatentPrior::standard_normal(2);
  model::TrainConfig cfg;
  cfg.encoder_hidden = {6};
  cfg.decoder_hidden = {6};
  cfg.epochs = 200;
  cfg.seed = 77;
  auto a = model::train_autoencoder(dataset, prior, cfg);
  auto b = model::train_autoencoder(dataset, prior, cfg);
  for (std::size_t l = 0; l < a.encoder_layers().size(); ++l)
    CHECK(a.encoder_layers()[l].W == b.encoder_layers()[l].W);
  for (std::size_t l = 0; l < a.decoder_layers().size(); ++l)
    CHECK(a.decoder_layers()[l].W == b.decoder_layers()[l].W);
}

TEST_CASE("trained pair: on-manifold identity at the fixture tolerance") {
  const auto& pair = testing::trained_mlp_pair();
  const auto& prior = testing::trained_mlp_prior();
  // Fixed-step Adam at this scale leaves a worst-case latent residual around
  // a few 1e-2 over 1000 fresh samples; the tolerance is config surface.
  model::AssumptionTolerances tol;
  tol.a1 = 0.05;
  auto report = model::check_assumptions(pair, prior, 1000, 4, tol);
  CHECK(report.a1_residual <= 0.05);
  CHECK(report.a1_pass);
  CHECK(report.a2_pass);
}

TEST_CASE("composition identity: J_E(D(z)) J_D(z) = I when exact-latent holds") {
  // Exactly-converged pair: single identity-activation layers with the
  // encoder bias cancelling the decoder bias, so E(D(z)) = z identically and
  // the composition identity follows by differentiation.
  Rng rng(91);
  Mat A(9, 2);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 2; ++c) A(r, c) = rng.normal();
  Vec b = rng.normal_vec(9);
  Mat M = (A.transpose() * A).ldlt().solve(A.transpose());
  std::vector<model::MlpLayer> dec{{A, b, model::Activation::Identity}};
  std::vector<model::MlpLayer> enc{{M, Vec(-M * b), model::Activation::Identity}};
  model::MlpPair pair(ImageShape{3, 3, 1}, enc, dec);

  auto prior = model::LatentPrior::standard_normal(2);
  for (int t = 0; t < 20; ++t) {
    Vec z = prior.sample(rng);
    CHECK((pair.encode(pair.decode(z)) - z).norm() <= 1e-12);
    Mat comp = pair.encoder_jacobian(pair.decode(z)) * pair.decoder_jacobian(z);
    CHECK((comp - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-6);
  }

  // The trained fixture approximates the identity at its residual scale.
  const auto& trained = testing::trained_mlp_pair();
  const auto& tprior = testing::trained_mlp_prior();
  Rng rng2(5);
  Vec z = tprior.sample(rng2);
  Mat comp = trained.encoder_jacobian(trained.decode(z)) * trained.decoder_jacobian(z);
  CHECK((comp - Mat::Identity(2, 2)).norm() <= 0.1);
}

TEST_CASE("check_assumptions: fixtures") {
  auto ortho = model::LinearPair::orthonormal(ImageShape{3, 3, 1}, 4, 31);
  auto prior = model::LatentPrior::standard_normal(4);
  auto rep = model::check_assumptions(ortho, prior, 64, 2);
  CHECK(rep.a1_residual <= 1e-12);
  CHECK(rep.a2_sigma_min == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.a1_pass);
  CHECK(rep.a2_pass);
  CHECK(rep.a3_pass);

  struct Degenerate : model::AutoencoderPair {
    ImageShape image_shape() const override { return {1, 3, 1}; }
    int latent_dim() const override { return 2; }
    Vec decode(const Vec& z) const override { return decoder_jacobian(z) * z; }
    Vec encode(const Vec& x) const override {
      return decoder_jacobian(Vec()).transpose() * x / 5.0;
    }
    Mat decoder_jacobian(const Vec&) const override {
      Mat A(3, 2);
      A << 1, 0, 2, 0, 0, 0;  // rank 1
      return A;
    }
    Mat encoder_jacobian(const Vec&) const override { return Mat::Zero(2, 3); }
  } degenerate;
  auto rep2 = model::check_assumptions(degenerate, model::LatentPrior::standard_normal(2),
                                       32, 3);
  CHECK_FALSE(rep2.a2_pass);

  CHECK_THROWS(model::check_assumptions(ortho, prior, 1, 2));
}

TEST_CASE("model serialization: bit-exact round trips") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "regap_model_io_test";
  fs::create_directories(dir);

  auto lin = model::LinearPair::orthonormal(ImageShape{4, 4, 1}, 5, 3, 0.7, 0.25);
  std::string lin_path = (dir / "lin.rgae").string();
  model::save_model(lin_path, lin);
  auto lin2 = model::load_model(lin_path);
  auto* lin2p = dynamic_cast<model::LinearPair*>(lin2.get());
  REQUIRE(lin2p != nullptr);
  CHECK(lin2p->decoder_matrix() == lin.decoder_matrix());
  CHECK(lin2p->encoder_matrix() == lin.encoder_matrix());
  CHECK(lin2p->decoder_bias() == lin.decoder_bias());

  auto mlp = model::MlpPair::random(ImageShape{2, 3, 1}, 2, {5}, {4},
                                    model::Activation::Softplus, 8);
  std::string mlp_path = (dir / "mlp.rgae").string();
  model::save_model(mlp_path, mlp);
  auto mlp2 = model::load_model(mlp_path);
  auto* mlp2p = dynamic_cast<model::MlpPair*>(mlp2.get());
  REQUIRE(mlp2p != nullptr);
  Rng rng(5);
  Vec z = rng.normal_vec(2);
  CHECK(mlp.decode(z) == mlp2p->decode(z));
  CHECK(mlp2p->decoder_layers()[0].act == model::Activation::Softplus);

  // Save twice -> identical bytes.
  std::string mlp_path2 = (dir / "mlp2.rgae").string();
  model::save_model(mlp_path2, mlp);
  std::ifstream f1(mlp_path, std::ios::binary), f2(mlp_path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // Corrupt magic.
  std::string bad_path = (dir / "bad.rgae").string();
  std::ofstream bad(bad_path, std::ios::binary);
  bad << "NOPE1234";
  bad.close();
  CHECK_THROWS(model::load_model(bad_path));
}

TEST_CASE("latent prior validation") {
  CHECK_THROWS(model::LatentPrior::standard_normal(0));
  CHECK_THROWS(model::LatentPrior::uniform_box(2, 1.0, -1.0));
  auto box = model::LatentPrior::uniform_box(3, -2.0, 0.5);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    Vec z = box.sample(rng);
    CHECK(z.minCoeff() >= -2.0);
    CHECK(z.maxCoeff() <= 0.5);
  }
}
