#pragma once

#include "regap/model.hpp"
#include "regap/train.hpp"
#include "regap/types.hpp"

namespace regap::testing {

/// 3-pixel toy frame: decoder columns e1, e2, so the manifold is the
/// z-plane {(z1, z2, 0)}.
model::LinearPair tiny_axis_pair();

/// Random smooth image with values inside [lo, hi] (sum of a few sinusoids).
ImageTensor smooth_image(ImageShape shape, std::uint64_t seed, double lo = 0.1,
                         double hi = 0.9);

/// Small trained tanh pair over a curved 2-parameter surface in R^16
/// (4x4 images). Deterministic; trains once per process and is cached.
const model::MlpPair& trained_mlp_pair();
const model::LatentPrior& trained_mlp_prior();

}  // namespace regap::testing
