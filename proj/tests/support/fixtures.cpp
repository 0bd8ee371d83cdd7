#include "fixtures.hpp"

#include "regap/rng.hpp"

#include <cmath>

namespace regap::testing {

model::LinearPair tiny_axis_pair() {
  Mat A(3, 2);
  A << 1, 0, 0, 1, 0, 0;
  Mat M = A.transpose();
  return model::LinearPair(ImageShape{1, 3, 1}, A, Vec::Zero(3), M, Vec::Zero(2));
}

ImageTensor smooth_image(ImageShape shape, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  ImageTensor img = ImageTensor::zeros(shape);
  const int waves = 4;
  std::vector<double> fy(waves), fx(waves), ph(waves), amp(waves);
  for (int w = 0; w < waves; ++w) {
    fy[w] = rng.uniform(0.5, 3.0);
    fx[w] = rng.uniform(0.5, 3.0);
    ph[w] = rng.uniform(0.0, 2.0 * M_PI);
    amp[w] = rng.uniform(0.3, 1.0);
  }
  double vmin = 1e300, vmax = -1e300;
  for (int y = 0; y < shape.height; ++y)
    for (int x = 0; x < shape.width; ++x)
      for (int c = 0; c < shape.channels; ++c) {
        double v = 0.0;
        for (int w = 0; w < waves; ++w)
          v += amp[w] * std::sin(fy[w] * y * 2.0 * M_PI / shape.height +
                                 fx[w] * x * 2.0 * M_PI / shape.width + ph[w] + c);
        img.at(y, x, c) = v;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
  double span = vmax > vmin ? vmax - vmin : 1.0;
  for (Eigen::Index i = 0; i < img.values.size(); ++i)
    img.values[i] = lo + (hi - lo) * (img.values[i] - vmin) / span;
  return img;
}

namespace {

// Curved 2-parameter sinusoidal surface embedded in R^16.
ImageTensor surface_point(const Vec& u) {
  ImageShape shape{4, 4, 1};
  ImageTensor img = ImageTensor::zeros(shape);
  for (int i = 0; i < 16; ++i) {
    double a = 0.4 + 0.07 * i;
    double b = 1.1 - 0.05 * i;
    img.values[i] = 0.5 + 0.3 * std::sin(a * u[0] + b * u[1] + 0.35 * i);
  }
  return img;
}

struct TrainedFixture {
  model::MlpPair pair;
  model::LatentPrior prior;
};

TrainedFixture make_trained() {
  auto prior = model::LatentPrior::uniform_box(2, -1.0, 1.0);
  Rng rng(20240517);
  std::vector<ImageTensor> dataset;
  for (int i = 0; i < 160; ++i) dataset.push_back(surface_point(prior.sample(rng)));

  model::TrainConfig cfg;
  cfg.encoder_hidden = {24};
  cfg.decoder_hidden = {24};
  cfg.hidden_activation = model::Activation::Tanh;
  cfg.epochs = 6000;
  cfg.learning_rate = 3e-3;
  cfg.lambda = 1.0;
  cfg.prior_samples = 128;
  cfg.seed = 7;
  return {model::train_autoencoder(dataset, prior, cfg), prior};
}

}  // namespace

namespace {

const TrainedFixture& trained_fixture() {
  static const TrainedFixture fixture = make_trained();
  return fixture;
}

}  // namespace

const model::MlpPair& trained_mlp_pair() { return trained_fixture().pair; }

const model::LatentPrior& trained_mlp_prior() { return trained_fixture().prior; }

}  // namespace regap::testing
