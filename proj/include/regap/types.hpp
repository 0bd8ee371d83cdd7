#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace regap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Height/width/channel geometry of an image. Values are stored flat with
/// layout index = (y * width + x) * channels + c.
struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  int pixel_count() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

/// Dense real-valued image with nominal dynamic range [0,1].
struct ImageTensor {
  ImageShape shape;
  Vec values;

  ImageTensor() = default;
  ImageTensor(ImageShape s, Vec v) : shape(s), values(std::move(v)) {
    if (values.size() != shape.pixel_count())
      throw std::invalid_argument("ImageTensor: value count does not match shape");
  }

  static ImageTensor zeros(ImageShape s) { return {s, Vec::Zero(s.pixel_count())}; }
  static ImageTensor constant(ImageShape s, double v) {
    return {s, Vec::Constant(s.pixel_count(), v)};
  }

  double& at(int y, int x, int c = 0) {
    return values[(y * shape.width + x) * shape.channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return values[(y * shape.width + x) * shape.channels + c];
  }

  bool finite() const { return values.allFinite(); }
};

enum class Label { Real, Generated };

inline const char* to_string(Label l) { return l == Label::Real ? "real" : "generated"; }

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const char* what) {
  if (!(a.shape == b.shape))
    throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

/// Clamp all values into [0,1]; returns the l2 norm of the displacement.
inline double clamp01_inplace(ImageTensor& img) {
  double shift2 = 0.0;
  for (Eigen::Index i = 0; i < img.values.size(); ++i) {
    double v = img.values[i];
    double w = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    shift2 += (w - v) * (w - v);
    img.values[i] = w;
  }
  return std::sqrt(shift2);
}

}  // namespace regap
