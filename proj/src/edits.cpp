#include "regap/edits.hpp"

#include "regap/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace regap::edits {

const char* to_string(EditKind k) {
  switch (k) {
    case EditKind::Add:
      return "add";
    case EditKind::Fix:
      return "fix";
    case EditKind::Sem:
      return "sem";
  }
  return "fix";
}

EditKind edit_from_string(const std::string& name) {
  if (name == "add") return EditKind::Add;
  if (name == "fix") return EditKind::Fix;
  if (name == "sem") return EditKind::Sem;
  throw std::invalid_argument("unknown edit kind: " + name);
}

int effective_patch_size(const EditConfig& cfg, ImageShape shape) {
  int p = cfg.patch_size > 0 ? cfg.patch_size : std::max(1, shape.height / 4);
  if (p > std::min(shape.height, shape.width))
    throw std::invalid_argument("edit: patch does not fit inside image");
  return p;
}

std::pair<int, int> patch_anchor(const model::AutoencoderPair& pair, const ImageTensor& x,
                                 int patch, Placement placement, Rng& rng) {
  const int hmax = x.shape.height - patch;
  const int wmax = x.shape.width - patch;
  switch (placement) {
    case Placement::Center:
      return {hmax / 2, wmax / 2};
    case Placement::Random:
      return {rng.uniform_int(0, hmax), rng.uniform_int(0, wmax)};
    case Placement::MaxErrorRegion: {
      Vec recon = pair.decode(pair.encode(x.values));
      // Per-pixel squared error summed over channels, then the densest
      // patch-sized window by brute-force scan (ties: first in row-major order).
      Mat err = Mat::Zero(x.shape.height, x.shape.width);
      for (int y = 0; y < x.shape.height; ++y)
        for (int xx = 0; xx < x.shape.width; ++xx)
          for (int c = 0; c < x.shape.channels; ++c) {
            int idx = (y * x.shape.width + xx) * x.shape.channels + c;
            double dv = x.values[idx] - recon[idx];
            err(y, xx) += dv * dv;
          }
      int by = 0, bx = 0;
      double best = -1.0;
      for (int y = 0; y <= hmax; ++y) {
        for (int xx = 0; xx <= wmax; ++xx) {
          double s = err.block(y, xx, patch, patch).sum();
          if (s > best) {
            best = s;
            by = y;
            bx = xx;
          }
        }
      }
      return {by, bx};
    }
  }
  return {0, 0};
}

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

ImageTensor edit_add(const model::AutoencoderPair& pair, const model::LatentPrior& prior,
                     const ImageTensor& x, const EditConfig& cfg, Rng& rng) {
  if (!(x.shape == pair.image_shape()))
    throw std::invalid_argument("edit_add: image shape mismatch");
  const int p = effective_patch_size(cfg, x.shape);
  auto [py, px] = patch_anchor(pair, x, p, cfg.placement, rng);
  ImageTensor render = pair.decode_image(prior.sample(rng));
  ImageTensor out = x;
  for (int y = py; y < py + p; ++y)
    for (int xx = px; xx < px + p; ++xx)
      for (int c = 0; c < x.shape.channels; ++c)
        out.at(y, xx, c) = clamp01((1.0 - cfg.blend_alpha) * x.at(y, xx, c) +
                                   cfg.blend_alpha * render.at(y, xx, c));
  return out;
}

ImageTensor edit_fix(const model::AutoencoderPair& pair, const ImageTensor& x,
                     const EditConfig& cfg, Rng& rng) {
  if (!(x.shape == pair.image_shape()))
    throw std::invalid_argument("edit_fix: image shape mismatch");
  const int p = effective_patch_size(cfg, x.shape);
  auto [py, px] = patch_anchor(pair, x, p, cfg.placement, rng);
  ImageTensor recon{x.shape, pair.decode(pair.encode(x.values))};
  ImageTensor out = x;
  for (int y = py; y < py + p; ++y)
    for (int xx = px; xx < px + p; ++xx)
      for (int c = 0; c < x.shape.channels; ++c)
        out.at(y, xx, c) = clamp01(recon.at(y, xx, c));
  return out;
}

ImageTensor edit_sem(const model::AutoencoderPair& pair, const ImageTensor& x,
                     const EditConfig& cfg, Rng& rng, Vec* pre_clamp_delta) {
  if (!(x.shape == pair.image_shape()))
    throw std::invalid_argument("edit_sem: image shape mismatch");
  if (cfg.sem_step < 0.0) throw std::invalid_argument("edit_sem: negative step");
  Vec z = pair.encode(x.values);
  Vec v;
  if (cfg.sem_direction == SemDirection::TopSingular) {
    v = spectral::svd(pair.decoder_jacobian(z)).V.col(0);
  } else {
    v = rng.normal_vec(pair.latent_dim());
    double nrm = v.norm();
    v = nrm > 0.0 ? Vec(v / nrm) : Vec::Unit(pair.latent_dim(), 0);
  }
  Vec delta = pair.decode(z + cfg.sem_step * v) - pair.decode(z);
  if (pre_clamp_delta) *pre_clamp_delta = delta;
  ImageTensor out = x;
  out.values += delta;
  clamp01_inplace(out);
  return out;
}

ImageTensor apply_edit(EditKind kind, const model::AutoencoderPair& pair,
                       const model::LatentPrior& prior, const ImageTensor& x,
                       const EditConfig& cfg, Rng& rng) {
  switch (kind) {
    case EditKind::Add:
      return edit_add(pair, prior, x, cfg, rng);
    case EditKind::Fix:
      return edit_fix(pair, x, cfg, rng);
    case EditKind::Sem:
      return edit_sem(pair, x, cfg, rng);
  }
  throw std::logic_error("apply_edit: unreachable");
}

}  // namespace regap::edits
