#pragma once

#include "regap/model.hpp"
#include "regap/types.hpp"

#include <cstdint>
#include <vector>

namespace regap::model {

struct TrainConfig {
  std::vector<int> encoder_hidden;
  std::vector<int> decoder_hidden;
  Activation hidden_activation = Activation::Tanh;
  int epochs = 4000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Weight of the latent-consistency term ||E(D(z)) - z||^2; the plain
  /// reconstruction loss only pins D(E(x)) on data, while the exact-latent
  /// property must hold on the manifold itself.
  double lambda = 0.1;
  int prior_samples = 64;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
};

struct TrainStats {
  double final_reconstruction_loss = 0.0;
  double final_latent_loss = 0.0;
  int epochs_run = 0;
};

/// Full-batch Adam on mean ||x - D(E(x))||^2 + lambda * mean ||E(D(z)) - z||^2
/// over a fixed pool of prior samples. Deterministic given config.seed.
/// Throws on an empty dataset or a non-finite loss.
MlpPair train_autoencoder(const std::vector<ImageTensor>& dataset,
                          const LatentPrior& prior, const TrainConfig& cfg,
                          TrainStats* stats = nullptr);

}  // namespace regap::model
