#include "regap/train.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace regap::model {

namespace {

struct LayerCache {
  Vec input;
  Vec pre;
};

Vec forward_cached(const std::vector<MlpLayer>& layers, const Vec& in,
                   std::vector<LayerCache>& caches) {
  caches.resize(layers.size());
  Vec a = in;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    caches[l].input = a;
    caches[l].pre = layers[l].W * a + layers[l].b;
    a.resize(caches[l].pre.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a[i] = activate(layers[l].act, caches[l].pre[i]);
  }
  return a;
}

struct LayerGrad {
  Mat dW;
  Vec db;
};

// Accumulates parameter gradients for dL/d(output); returns dL/d(input).
Vec backward(const std::vector<MlpLayer>& layers, const std::vector<LayerCache>& caches,
             Vec grad_out, std::vector<LayerGrad>& grads) {
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    Vec dpre(grad_out.size());
    for (Eigen::Index i = 0; i < dpre.size(); ++i)
      dpre[i] = grad_out[i] * activate_grad(layers[l].act, caches[l].pre[i]);
    grads[l].dW.noalias() += dpre * caches[l].input.transpose();
    grads[l].db += dpre;
    grad_out = layers[l].W.transpose() * dpre;
  }
  return grad_out;
}

struct AdamState {
  Mat mW, vW;
  Vec mb, vb;
};

void adam_step(MlpLayer& layer, const LayerGrad& grad, AdamState& state,
               const TrainConfig& cfg, double bias1, double bias2) {
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    param.array() -= cfg.learning_rate * (m.array() / bias1) /
                     ((v.array() / bias2).sqrt() + cfg.adam_eps);
  };
  update(layer.W, grad.dW, state.mW, state.vW);
  update(layer.b, grad.db, state.mb, state.vb);
}

}  // namespace

MlpPair train_autoencoder(const std::vector<ImageTensor>& dataset,
                          const LatentPrior& prior, const TrainConfig& cfg,
                          TrainStats* stats) {
  if (dataset.empty()) throw std::invalid_argument("train_autoencoder: empty dataset");
  const ImageShape shape = dataset.front().shape;
  for (const auto& img : dataset)
    if (!(img.shape == shape))
      throw std::invalid_argument("train_autoencoder: inconsistent image shapes");

  MlpPair pair = MlpPair::random(shape, prior.dim, cfg.encoder_hidden, cfg.decoder_hidden,
                                 cfg.hidden_activation, cfg.seed, cfg.init_scale);
  std::vector<MlpLayer> enc = pair.encoder_layers();
  std::vector<MlpLayer> dec = pair.decoder_layers();

  // Fixed latent pool keeps the objective (and thus the run) deterministic.
  Rng rng(derive_seed(cfg.seed, 0x5eed));
  std::vector<Vec> zpool(static_cast<std::size_t>(std::max(1, cfg.prior_samples)));
  for (auto& z : zpool) z = prior.sample(rng);

  std::vector<AdamState> enc_state(enc.size()), dec_state(dec.size());
  auto init_state = [](std::vector<AdamState>& st, const std::vector<MlpLayer>& layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      st[l].mW = Mat::Zero(layers[l].W.rows(), layers[l].W.cols());
      st[l].vW = st[l].mW;
      st[l].mb = Vec::Zero(layers[l].b.size());
      st[l].vb = st[l].mb;
    }
  };
  init_state(enc_state, enc);
  init_state(dec_state, dec);

  double recon_loss = 0.0, latent_loss = 0.0;
  std::vector<LayerCache> ecache, dcache;
  std::vector<LayerGrad> egrad(enc.size()), dgrad(dec.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t l = 0; l < enc.size(); ++l) {
      egrad[l].dW = Mat::Zero(enc[l].W.rows(), enc[l].W.cols());
      egrad[l].db = Vec::Zero(enc[l].b.size());
    }
    for (std::size_t l = 0; l < dec.size(); ++l) {
      dgrad[l].dW = Mat::Zero(dec[l].W.rows(), dec[l].W.cols());
      dgrad[l].db = Vec::Zero(dec[l].b.size());
    }

    recon_loss = 0.0;
    for (const auto& img : dataset) {
      Vec z = forward_cached(enc, img.values, ecache);
      Vec xr = forward_cached(dec, z, dcache);
      Vec r = xr - img.values;
      recon_loss += r.squaredNorm();
      Vec g = (2.0 / dataset.size()) * r;
      Vec gz = backward(dec, dcache, g, dgrad);
      backward(enc, ecache, gz, egrad);
    }
    recon_loss /= dataset.size();

    latent_loss = 0.0;
    if (cfg.lambda > 0.0) {
      for (const auto& z : zpool) {
        Vec x = forward_cached(dec, z, dcache);
        Vec ze = forward_cached(enc, x, ecache);
        Vec r = ze - z;
        latent_loss += r.squaredNorm();
        Vec g = (2.0 * cfg.lambda / zpool.size()) * r;
        Vec gx = backward(enc, ecache, g, egrad);
        backward(dec, dcache, gx, dgrad);
      }
      latent_loss /= zpool.size();
    }

    double loss = recon_loss + cfg.lambda * latent_loss;
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "train_autoencoder: non-finite loss at epoch " << epoch
         << " (reconstruction " << recon_loss << ", latent " << latent_loss << ")";
      throw std::runtime_error(os.str());
    }

    double bias1 = 1.0 - std::pow(cfg.beta1, epoch);
    double bias2 = 1.0 - std::pow(cfg.beta2, epoch);
    for (std::size_t l = 0; l < enc.size(); ++l)
      adam_step(enc[l], egrad[l], enc_state[l], cfg, bias1, bias2);
    for (std::size_t l = 0; l < dec.size(); ++l)
      adam_step(dec[l], dgrad[l], dec_state[l], cfg, bias1, bias2);
  }

  if (stats) {
    stats->final_reconstruction_loss = recon_loss;
    stats->final_latent_loss = latent_loss;
    stats->epochs_run = cfg.epochs;
  }
  return MlpPair(shape, std::move(enc), std::move(dec));
}

}  // namespace regap::model
