#pragma once

#include "regap/types.hpp"

#include <array>

namespace regap::robustness {

/// Standard luminance quantization table (row-major 8x8).
const std::array<int, 64>& base_luminance_table();

struct ScaledTable {
  int scale = 100;
  std::array<int, 64> table{};
};

/// libjpeg-convention quality scaling: scale = 5000/q below 50, otherwise
/// 200 - 2q; entries floor((entry*scale + 50)/100) clamped to [1,255].
ScaledTable quality_to_scale(int quality);

/// Lossy round trip through blockwise DCT quantization: scale to [0,255],
/// level-shift, pad to 8-multiples by edge replication, per-block orthonormal
/// type-II DCT, quantize by the scaled table, invert, crop, clamp to [0,1].
/// No entropy coding; quantization is the only distortion source.
ImageTensor jpeg_roundtrip(const ImageTensor& x, int quality);

/// 8x8 orthonormal DCT-II of a block (exposed for round-trip checks).
Mat dct8(const Mat& block);
Mat idct8(const Mat& coeffs);

/// Central crop to round(f*H) x round(f*W), then bilinear resize back to the
/// original size (half-pixel centers, border clamp). f = 1 returns the input
/// unchanged.
ImageTensor center_crop_resize(const ImageTensor& x, double ratio);

}  // namespace regap::robustness
