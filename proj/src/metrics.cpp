#include "regap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace regap::metrics {

const char* to_string(MetricKind k) {
  switch (k) {
    case MetricKind::Mse:
      return "mse";
    case MetricKind::Psnr:
      return "psnr";
    case MetricKind::Ssim:
      return "ssim";
    case MetricKind::Sc:
      return "sc";
    case MetricKind::MsSsim:
      return "ms-ssim";
  }
  return "mse";
}

MetricKind metric_from_string(const std::string& name) {
  if (name == "mse") return MetricKind::Mse;
  if (name == "psnr") return MetricKind::Psnr;
  if (name == "ssim") return MetricKind::Ssim;
  if (name == "sc") return MetricKind::Sc;
  if (name == "ms-ssim" || name == "msssim") return MetricKind::MsSsim;
  throw std::invalid_argument("unknown metric: " + name);
}

double mse(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "mse");
  return (a.values - b.values).squaredNorm() / a.values.size();
}

double psnr(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b) {
  double m = std::max(mse(a, b), cfg.mse_floor);
  return 10.0 * std::log10(cfg.dynamic_range * cfg.dynamic_range / m);
}

namespace {

std::vector<double> gaussian_kernel(int w, double sigma) {
  std::vector<double> k(w);
  double sum = 0.0;
  double mid = (w - 1) / 2.0;
  for (int i = 0; i < w; ++i) {
    k[i] = std::exp(-(i - mid) * (i - mid) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

struct WindowMoments {
  double mu_a, mu_b, var_a, var_b, cov;
};

// Gaussian-weighted first and second moments of the window anchored at (y0, x0).
WindowMoments window_moments(const ImageTensor& a, const ImageTensor& b, int c, int y0,
                             int x0, const std::vector<double>& kernel) {
  const int w = static_cast<int>(kernel.size());
  WindowMoments m{0, 0, 0, 0, 0};
  for (int dy = 0; dy < w; ++dy) {
    for (int dx = 0; dx < w; ++dx) {
      double wgt = kernel[dy] * kernel[dx];
      double va = a.at(y0 + dy, x0 + dx, c);
      double vb = b.at(y0 + dy, x0 + dx, c);
      m.mu_a += wgt * va;
      m.mu_b += wgt * vb;
      m.var_a += wgt * va * va;
      m.var_b += wgt * vb * vb;
      m.cov += wgt * va * vb;
    }
  }
  m.var_a -= m.mu_a * m.mu_a;
  m.var_b -= m.mu_b * m.mu_b;
  m.cov -= m.mu_a * m.mu_b;
  return m;
}

void check_window(const MetricConfig& cfg, const ImageTensor& a) {
  if (cfg.window > std::min(a.shape.height, a.shape.width))
    throw std::invalid_argument("metrics: window larger than image");
  if (cfg.window < 1 || cfg.window % 2 == 0)
    throw std::invalid_argument("metrics: window must be a positive odd integer");
}

}  // namespace

SsimComponents ssim_components(const MetricConfig& cfg, const ImageTensor& a,
                               const ImageTensor& b) {
  require_same_shape(a, b, "ssim");
  check_window(cfg, a);
  const double c1 = cfg.k1 * cfg.dynamic_range * cfg.k1 * cfg.dynamic_range;
  const double c2 = cfg.k2 * cfg.dynamic_range * cfg.k2 * cfg.dynamic_range;
  const auto kernel = gaussian_kernel(cfg.window, cfg.sigma);
  const int oh = a.shape.height - cfg.window + 1;
  const int ow = a.shape.width - cfg.window + 1;
  ImageShape oshape{oh, ow, a.shape.channels};
  SsimComponents out{ImageTensor::zeros(oshape), ImageTensor::zeros(oshape)};
  for (int c = 0; c < a.shape.channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        auto m = window_moments(a, b, c, y, x, kernel);
        double lum = (2.0 * m.mu_a * m.mu_b + c1) / (m.mu_a * m.mu_a + m.mu_b * m.mu_b + c1);
        double cs = (2.0 * m.cov + c2) / (m.var_a + m.var_b + c2);
        out.luminance.at(y, x, c) = lum;
        out.contrast_structure.at(y, x, c) = cs;
      }
    }
  }
  return out;
}

ImageTensor ssim_map(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b) {
  auto comp = ssim_components(cfg, a, b);
  ImageTensor map = comp.luminance;
  map.values = comp.luminance.values.cwiseProduct(comp.contrast_structure.values);
  return map;
}

double ssim(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b) {
  return ssim_map(cfg, a, b).values.mean();
}

double sc(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b) {
  return ssim_components(cfg, a, b).contrast_structure.values.mean();
}

int ms_ssim_levels(const MetricConfig& cfg, ImageShape shape) {
  int side = std::min(shape.height, shape.width);
  if (side < cfg.window) throw std::invalid_argument("ms_ssim: window larger than image");
  int levels = static_cast<int>(std::floor(
                   std::log2(static_cast<double>(side) / cfg.window))) +
               1;
  return std::max(1, std::min(5, levels));
}

namespace {

ImageTensor mean_pool2(const ImageTensor& img) {
  ImageShape s{img.shape.height / 2, img.shape.width / 2, img.shape.channels};
  ImageTensor out = ImageTensor::zeros(s);
  for (int c = 0; c < s.channels; ++c)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x)
        out.at(y, x, c) = 0.25 * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                                  img.at(2 * y + 1, 2 * x, c) +
                                  img.at(2 * y + 1, 2 * x + 1, c));
  return out;
}

// Standard five-level exponents; renormalized over the levels in use.
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace

double ms_ssim(const MetricConfig& cfg, const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "ms_ssim");
  const int levels = ms_ssim_levels(cfg, a.shape);
  double wsum = 0.0;
  for (int l = 0; l < levels; ++l) wsum += kMsWeights[l];

  ImageTensor ca = a, cb = b;
  double value = 1.0;
  for (int l = 0; l < levels; ++l) {
    auto comp = ssim_components(cfg, ca, cb);
    double cs_mean = comp.contrast_structure.values.mean();
    double w = kMsWeights[l] / wsum;
    // Negative factors are floored at zero before the fractional power.
    value *= std::pow(std::max(0.0, cs_mean), w);
    if (l == levels - 1) {
      double lum_mean = comp.luminance.values.mean();
      value *= std::pow(std::max(0.0, lum_mean), w);
    } else {
      ca = mean_pool2(ca);
      cb = mean_pool2(cb);
    }
  }
  return value;
}

double distance(MetricKind kind, const MetricConfig& cfg, const ImageTensor& a,
                const ImageTensor& b) {
  require_same_shape(a, b, "distance");
  switch (kind) {
    case MetricKind::Mse:
      return mse(a, b);
    case MetricKind::Psnr:
      return -psnr(cfg, a, b);
    case MetricKind::Ssim:
      return 1.0 - ssim(cfg, a, b);
    case MetricKind::Sc:
      return 1.0 - sc(cfg, a, b);
    case MetricKind::MsSsim:
      return 1.0 - ms_ssim(cfg, a, b);
  }
  throw std::logic_error("distance: unreachable");
}

}  // namespace regap::metrics
