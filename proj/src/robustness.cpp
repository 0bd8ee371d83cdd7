#include "regap/robustness.hpp"

#include <cmath>
#include <stdexcept>

namespace regap::robustness {

const std::array<int, 64>& base_luminance_table() {
  static const std::array<int, 64> table = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  return table;
}

ScaledTable quality_to_scale(int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("quality_to_scale: q must be in [1,100]");
  ScaledTable out;
  out.scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = base_luminance_table();
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * out.scale + 50) / 100;
    out.table[i] = std::min(255, std::max(1, v));
  }
  return out;
}

namespace {

const Mat& dct_matrix() {
  static const Mat C = [] {
    Mat m(8, 8);
    for (int i = 0; i < 8; ++i) {
      double alpha = i == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int j = 0; j < 8; ++j)
        m(i, j) = alpha * std::cos((2 * j + 1) * i * M_PI / 16.0);
    }
    return m;
  }();
  return C;
}

}  // namespace

Mat dct8(const Mat& block) { return dct_matrix() * block * dct_matrix().transpose(); }

Mat idct8(const Mat& coeffs) { return dct_matrix().transpose() * coeffs * dct_matrix(); }

ImageTensor jpeg_roundtrip(const ImageTensor& x, int quality) {
  const auto scaled = quality_to_scale(quality);
  const int H = x.shape.height, W = x.shape.width, C = x.shape.channels;
  const int ph = (H + 7) / 8 * 8;
  const int pw = (W + 7) / 8 * 8;

  ImageTensor out = x;
  Mat plane(ph, pw);
  for (int c = 0; c < C; ++c) {
    // Level-shifted 0..255 plane with edge-replication padding.
    for (int y = 0; y < ph; ++y) {
      int sy = std::min(y, H - 1);
      for (int xx = 0; xx < pw; ++xx) {
        int sx = std::min(xx, W - 1);
        plane(y, xx) = x.at(sy, sx, c) * 255.0 - 128.0;
      }
    }
    for (int by = 0; by < ph; by += 8) {
      for (int bx = 0; bx < pw; bx += 8) {
        Mat coeffs = dct8(plane.block(by, bx, 8, 8));
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            double q = scaled.table[i * 8 + j];
            coeffs(i, j) = std::round(coeffs(i, j) / q) * q;
          }
        plane.block(by, bx, 8, 8) = idct8(coeffs);
      }
    }
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        double v = (plane(y, xx) + 128.0) / 255.0;
        out.at(y, xx, c) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
  }
  return out;
}

ImageTensor center_crop_resize(const ImageTensor& x, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("center_crop_resize: ratio must be in (0,1]");
  if (ratio == 1.0) return x;  // identity passthrough, bit-exact

  const int H = x.shape.height, W = x.shape.width, C = x.shape.channels;
  const int ch = std::max(1, static_cast<int>(std::lround(ratio * H)));
  const int cw = std::max(1, static_cast<int>(std::lround(ratio * W)));
  if (ch == H && cw == W) return x;
  const int y0 = (H - ch) / 2;
  const int x0 = (W - cw) / 2;

  ImageTensor out = ImageTensor::zeros(x.shape);
  for (int y = 0; y < H; ++y) {
    // Half-pixel-center source coordinate, clamped at the crop border.
    double sy = (y + 0.5) * ch / H - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(ch - 1));
    int iy = std::min(static_cast<int>(sy), ch - 2 >= 0 ? ch - 2 : 0);
    double fy = ch > 1 ? sy - iy : 0.0;
    for (int xx = 0; xx < W; ++xx) {
      double sx = (xx + 0.5) * cw / W - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(cw - 1));
      int ix = std::min(static_cast<int>(sx), cw - 2 >= 0 ? cw - 2 : 0);
      double fx = cw > 1 ? sx - ix : 0.0;
      for (int c = 0; c < C; ++c) {
        double v00 = x.at(y0 + iy, x0 + ix, c);
        double v01 = x.at(y0 + iy, x0 + std::min(ix + 1, cw - 1), c);
        double v10 = x.at(y0 + std::min(iy + 1, ch - 1), x0 + ix, c);
        double v11 = x.at(y0 + std::min(iy + 1, ch - 1), x0 + std::min(ix + 1, cw - 1), c);
        double top = v00 + fx * (v01 - v00);
        double bot = v10 + fx * (v11 - v10);
        double v = top + fy * (bot - top);
        out.at(y, xx, c) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
    }
  }
  return out;
}

}  // namespace regap::robustness
