#pragma once

#include "regap/model.hpp"
#include "regap/rng.hpp"
#include "regap/types.hpp"

#include <vector>

namespace regap::edits {

enum class EditKind { Add, Fix, Sem };
enum class Placement { Center, Random, MaxErrorRegion };
enum class SemDirection { TopSingular, RandomUnit };

const char* to_string(EditKind k);
EditKind edit_from_string(const std::string& name);

struct EditConfig {
  int patch_size = 0;  // <=0 selects height/4 (at least 1)
  Placement placement = Placement::MaxErrorRegion;
  double sem_step = 0.5;
  SemDirection sem_direction = SemDirection::TopSingular;
  double blend_alpha = 1.0;  // (0,1]; 0 tolerated for degenerate test cases
};

/// Renders a fresh prior sample through the decoder and alpha-composites a
/// patch-sized crop of it onto x. Pixels outside the patch are bit-identical
/// to x; the result is clamped to [0,1].
ImageTensor edit_add(const model::AutoencoderPair& pair, const model::LatentPrior& prior,
                     const ImageTensor& x, const EditConfig& cfg, Rng& rng);

/// Replaces the masked region of x with the same region of D(E(x)); outside
/// the mask x is returned exactly.
ImageTensor edit_fix(const model::AutoencoderPair& pair, const ImageTensor& x,
                     const EditConfig& cfg, Rng& rng);

/// Latent-direction step: x + D(z + delta v) - D(z) with z = E(x) and v the
/// top right-singular vector of J_D(z) (or a random unit latent direction).
/// pre_clamp_delta, when given, receives the un-clamped pixel displacement so
/// that tangency checks are not distorted by the [0,1] clamp.
ImageTensor edit_sem(const model::AutoencoderPair& pair, const ImageTensor& x,
                     const EditConfig& cfg, Rng& rng, Vec* pre_clamp_delta = nullptr);

ImageTensor apply_edit(EditKind kind, const model::AutoencoderPair& pair,
                       const model::LatentPrior& prior, const ImageTensor& x,
                       const EditConfig& cfg, Rng& rng);

struct EditSpec {
  EditKind kind = EditKind::Fix;
  EditConfig cfg;
};

using EditSet = std::vector<EditSpec>;

/// Patch anchor (top-left corner) for the configured placement. Exposed for
/// tests; MaxErrorRegion scans the integral of the per-pixel squared
/// reconstruction error.
std::pair<int, int> patch_anchor(const model::AutoencoderPair& pair, const ImageTensor& x,
                                 int patch, Placement placement, Rng& rng);

int effective_patch_size(const EditConfig& cfg, ImageShape shape);

}  // namespace regap::edits
