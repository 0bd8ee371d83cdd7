#pragma once

#include "regap/manifold.hpp"
#include "regap/model.hpp"
#include "regap/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace regap::io {

struct DatasetItem {
  ImageTensor image;
  Label label = Label::Generated;
  double eps_norm = 0.0;     // ground-truth normal offset (synthetic reals)
  double clamp_shift = 0.0;  // displacement introduced by the [0,1] clamp
};

struct Dataset {
  std::vector<DatasetItem> items;
};

struct SyntheticSpec {
  int n_real = 500;
  int n_generated = 500;
  enum class OffsetKind { Fixed, Uniform } offset_kind = OffsetKind::Uniform;
  double m = 0.2;           // Fixed magnitude
  double m_lo = 0.1;        // Uniform bounds
  double m_hi = 0.3;
  double noise_floor = 0.0; // additive pixel noise applied to both classes
  double split = 0.3;       // calibration fraction
  std::uint64_t seed = 0;
};

/// Synthetic benchmark: "generated" samples are decoder outputs, "real"
/// samples carry a recorded normal offset. Offsets beyond the model's tubular
/// radius are rejected. Returns (calibration, evaluation) with an exact
/// per-class round(split*n) partition.
std::pair<Dataset, Dataset> gen_benchmark(const model::AutoencoderPair& pair,
                                          const model::LatentPrior& prior,
                                          const SyntheticSpec& spec);

/// Binary PGM (P5) / PPM (P6) with maxval 255. Parse errors carry the byte
/// offset for truncated payloads.
ImageTensor load_image(const std::string& path);
void save_image(const std::string& path, const ImageTensor& img);

/// Raw tensor format: magic "RGT1", u32 kind/dims header, little-endian f64
/// payload. Round trips are bit-exact.
void save_tensor(const std::string& path, const ImageTensor& img);
ImageTensor load_tensor(const std::string& path);
void save_matrix(const std::string& path, const Mat& m);
Mat load_matrix(const std::string& path);

/// Manifest rows: path,label,eps_norm.
void write_manifest(const std::string& path, const std::vector<std::string>& files,
                    const Dataset& set);
Dataset load_from_manifest(const std::string& manifest_path);

}  // namespace regap::io
