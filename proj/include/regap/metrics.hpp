#pragma once

#include "regap/types.hpp"

namespace regap::metrics {

enum class MetricKind { Mse, Psnr, Ssim, Sc, MsSsim };

const char* to_string(MetricKind k);
MetricKind metric_from_string(const std::string& name);

struct MetricConfig {
  double dynamic_range = 1.0;  // L
  int window = 7;              // odd Gaussian window
  double sigma = 1.5;
  double k1 = 0.01;            // C1 = (k1*L)^2
  double k2 = 0.03;            // C2 = (k2*L)^2
  double mse_floor = 1e-12;    // keeps PSNR finite
};

double mse(const ImageTensor& a, const ImageTensor& b);
double psnr(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b);

/// Mean structural similarity over Gaussian-weighted local windows
/// (valid-region semantics, multi-channel averaged).
double ssim(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b);

/// Per-pixel local SSIM; output is (H-w+1) x (W-w+1) x C and its mean equals
/// the ssim scalar.
ImageTensor ssim_map(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b);

/// Luminance and contrast-structure factor maps with ssim_map = l .* cs.
struct SsimComponents {
  ImageTensor luminance;
  ImageTensor contrast_structure;
};
SsimComponents ssim_components(const MetricConfig& cfg, const ImageTensor& a,
                               const ImageTensor& b);

/// Contrast-structure similarity: SSIM with the luminance factor dropped.
double sc(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b);

/// Multiscale SSIM; level count adapts as min(5, floor(log2(min(H,W)/w)) + 1)
/// with the standard per-level exponents renormalized to the used levels and
/// 2x2 mean-pool downsampling.
double ms_ssim(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b);

int ms_ssim_levels(const MetricConfig& cfg, ImageShape shape);

/// Uniform "larger = more different" orientation: mse, -psnr, 1-ssim, 1-sc,
/// 1-msssim.
double distance(MetricKind kind, const MetricConfig& cfg, const ImageTensor& a,
                const ImageTensor& b);

}  // namespace regap::metrics
