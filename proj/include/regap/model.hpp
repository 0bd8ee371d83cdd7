#pragma once

#include "regap/rng.hpp"
#include "regap/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace regap::model {

/// Latent sampling distribution p_z.
struct LatentPrior {
  enum class Kind { StandardNormal, UniformBox };

  Kind kind = Kind::StandardNormal;
  int dim = 0;
  Vec lo, hi;  // UniformBox bounds, componentwise lo < hi

  static LatentPrior standard_normal(int d);
  static LatentPrior uniform_box(int d, double lo, double hi);

  Vec sample(Rng& rng) const;
};

/// Encoder/decoder pair with differentiable forward maps and Jacobian access.
/// Immutable after construction; safe to share across worker threads.
class AutoencoderPair {
 public:
  virtual ~AutoencoderPair() = default;

  virtual ImageShape image_shape() const = 0;
  virtual int latent_dim() const = 0;

  /// D: R^d -> R^{H*W*C}
  virtual Vec decode(const Vec& z) const = 0;
  /// E: R^{H*W*C} -> R^d
  virtual Vec encode(const Vec& x) const = 0;

  /// [J_D(z)]_ij = dD_i/dz_j, an (H*W*C) x d matrix.
  virtual Mat decoder_jacobian(const Vec& z) const = 0;
  /// J_E(x), a d x (H*W*C) matrix.
  virtual Mat encoder_jacobian(const Vec& x) const = 0;

  /// True when the decoder image is an affine subspace (projection onto it is
  /// globally unique, so tubular-radius checks do not apply).
  virtual bool affine() const { return false; }

  ImageTensor decode_image(const Vec& z) const { return {image_shape(), decode(z)}; }
  Vec encode_image(const ImageTensor& x) const {
    if (!(x.shape == image_shape()))
      throw std::invalid_argument("encode: image shape does not match model");
    return encode(x.values);
  }
};

/// Affine pair x = A z + b, z = M (x - b) + c. The constructor enforces the
/// exact-inverse identity M A = I and full column rank of A.
class LinearPair : public AutoencoderPair {
 public:
  LinearPair(ImageShape shape, Mat A, Vec b, Mat M, Vec c);

  /// Random orthonormal-frame pair: A = scale * Q with Q^T Q = I,
  /// M = Q^T / scale (the pseudo-inverse); encoder annihilates normal content.
  static LinearPair orthonormal(ImageShape shape, int latent_dim, std::uint64_t seed,
                                double scale = 1.0, double bias = 0.0);

  /// Pair whose encoder reacts to normal offsets: M = (A + N C)^T with A an
  /// orthonormal frame, N an orthonormal basis of the normal space and C
  /// row-orthonormal, so that ||M eps|| = ||eps|| for every normal eps.
  /// Requires ambient - latent <= latent.
  static LinearPair normal_sensitive(ImageShape shape, int latent_dim,
                                     std::uint64_t seed, double bias = 0.0);

  ImageShape image_shape() const override { return shape_; }
  int latent_dim() const override { return static_cast<int>(A_.cols()); }
  Vec decode(const Vec& z) const override;
  Vec encode(const Vec& x) const override;
  Mat decoder_jacobian(const Vec& z) const override;
  Mat encoder_jacobian(const Vec& x) const override;
  bool affine() const override { return true; }

  const Mat& decoder_matrix() const { return A_; }
  const Vec& decoder_bias() const { return b_; }
  const Mat& encoder_matrix() const { return M_; }
  const Vec& encoder_bias() const { return c_; }

 private:
  ImageShape shape_;
  Mat A_, M_;
  Vec b_, c_;
};

enum class Activation { Tanh, Softplus, Identity };

double activate(Activation a, double v);
double activate_grad(Activation a, double v);  // derivative at pre-activation v
const char* to_string(Activation a);

struct MlpLayer {
  Mat W;
  Vec b;
  Activation act = Activation::Identity;
};

/// Smooth multilayer pair. Activations are restricted to C^1 functions, so a
/// rectifier is rejected at construction by the closed Activation set.
class MlpPair : public AutoencoderPair {
 public:
  MlpPair(ImageShape shape, std::vector<MlpLayer> encoder, std::vector<MlpLayer> decoder);

  /// Random pair with the given hidden widths (Glorot-uniform init).
  static MlpPair random(ImageShape shape, int latent_dim,
                        const std::vector<int>& encoder_hidden,
                        const std::vector<int>& decoder_hidden, Activation hidden_act,
                        std::uint64_t seed, double weight_scale = 1.0);

  ImageShape image_shape() const override { return shape_; }
  int latent_dim() const override { return latent_dim_; }
  Vec decode(const Vec& z) const override;
  Vec encode(const Vec& x) const override;
  Mat decoder_jacobian(const Vec& z) const override;
  Mat encoder_jacobian(const Vec& x) const override;

  const std::vector<MlpLayer>& encoder_layers() const { return encoder_; }
  const std::vector<MlpLayer>& decoder_layers() const { return decoder_; }

 private:
  ImageShape shape_;
  int latent_dim_ = 0;
  std::vector<MlpLayer> encoder_, decoder_;
};

Vec forward_stack(const std::vector<MlpLayer>& layers, const Vec& in);
Mat jacobian_stack(const std::vector<MlpLayer>& layers, const Vec& in);

struct AssumptionTolerances {
  double a1 = 1e-3;   // max ||E(D(z)) - z||
  double a2 = 1e-6;   // min sigma_min(J_D)
  double a3 = 1e-6;   // min collision gap (heuristic)
};

/// Sampled check of the working assumptions: exact reconstruction of latents
/// (A1), non-degenerate decoder Jacobian (A2) and a heuristic collision-gap
/// scan standing in for the local-embedding property (A3), which is not
/// decidable from samples.
struct AssumptionReport {
  double a1_residual = 0.0;
  double a2_sigma_min = 0.0;
  double a3_collision_gap = 0.0;
  bool a1_pass = false;
  bool a2_pass = false;
  bool a3_pass = false;  // heuristic
  AssumptionTolerances tolerances;

  std::string summary() const;
};

AssumptionReport check_assumptions(const AutoencoderPair& pair, const LatentPrior& prior,
                                   int n_samples, std::uint64_t seed,
                                   const AssumptionTolerances& tol = {});

}  // namespace regap::model
