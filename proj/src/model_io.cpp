#include "regap/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace regap::model {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'A', 'E'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kKindLinear = 0;
constexpr std::uint8_t kKindMlp = 1;

// The build targets little-endian hosts; raw f64 writes keep round trips
// bit-exact.
static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("model file truncated");
  return v;
}

void write_matrix(std::ostream& out, const Mat& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
}

Mat read_matrix(std::istream& in) {
  auto rows = read_pod<std::uint32_t>(in);
  auto cols = read_pod<std::uint32_t>(in);
  Mat m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_pod<double>(in);
  return m;
}

void write_vector(std::ostream& out, const Vec& v) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) write_pod<double>(out, v[i]);
}

Vec read_vector(std::istream& in) {
  auto n = read_pod<std::uint32_t>(in);
  Vec v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = read_pod<double>(in);
  return v;
}

void write_layers(std::ostream& out, const std::vector<MlpLayer>& layers) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(layer.act));
    write_matrix(out, layer.W);
    write_vector(out, layer.b);
  }
}

std::vector<MlpLayer> read_layers(std::istream& in) {
  auto n = read_pod<std::uint32_t>(in);
  std::vector<MlpLayer> layers(n);
  for (auto& layer : layers) {
    auto act = read_pod<std::uint8_t>(in);
    if (act > 2) throw std::runtime_error("model file: unknown activation id");
    layer.act = static_cast<Activation>(act);
    layer.W = read_matrix(in);
    layer.b = read_vector(in);
  }
  return layers;
}

ImageShape read_shape(std::istream& in) {
  ImageShape s;
  s.height = static_cast<int>(read_pod<std::uint32_t>(in));
  s.width = static_cast<int>(read_pod<std::uint32_t>(in));
  s.channels = static_cast<int>(read_pod<std::uint32_t>(in));
  return s;
}

void write_shape(std::ostream& out, ImageShape s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.height));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.width));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels));
}

}  // namespace

void save_model(const std::string& path, const AutoencoderPair& pair) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kMagic, 4);
  write_pod<std::uint16_t>(out, kVersion);
  if (const auto* lin = dynamic_cast<const LinearPair*>(&pair)) {
    write_pod<std::uint8_t>(out, kKindLinear);
    write_shape(out, lin->image_shape());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(lin->latent_dim()));
    write_matrix(out, lin->decoder_matrix());
    write_vector(out, lin->decoder_bias());
    write_matrix(out, lin->encoder_matrix());
    write_vector(out, lin->encoder_bias());
  } else if (const auto* mlp = dynamic_cast<const MlpPair*>(&pair)) {
    write_pod<std::uint8_t>(out, kKindMlp);
    write_shape(out, mlp->image_shape());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(mlp->latent_dim()));
    write_layers(out, mlp->encoder_layers());
    write_layers(out, mlp->decoder_layers());
  } else {
    throw std::runtime_error("save_model: unsupported pair kind");
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

std::unique_ptr<AutoencoderPair> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_model: bad magic in " + path);
  auto version = read_pod<std::uint16_t>(in);
  if (version != kVersion) throw std::runtime_error("load_model: unsupported version");
  auto kind = read_pod<std::uint8_t>(in);
  ImageShape shape = read_shape(in);
  auto latent = read_pod<std::uint32_t>(in);
  if (kind == kKindLinear) {
    Mat A = read_matrix(in);
    Vec b = read_vector(in);
    Mat M = read_matrix(in);
    Vec c = read_vector(in);
    if (A.cols() != static_cast<int>(latent))
      throw std::runtime_error("load_model: latent dim mismatch");
    return std::make_unique<LinearPair>(shape, std::move(A), std::move(b), std::move(M),
                                        std::move(c));
  }
  if (kind == kKindMlp) {
    auto enc = read_layers(in);
    auto dec = read_layers(in);
    return std::make_unique<MlpPair>(shape, std::move(enc), std::move(dec));
  }
  throw std::runtime_error("load_model: unknown model kind");
}

}  // namespace regap::model
