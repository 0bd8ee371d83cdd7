#include "regap/dataio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regap::io {

std::pair<Dataset, Dataset> gen_benchmark(const model::AutoencoderPair& pair,
                                          const model::LatentPrior& prior,
                                          const SyntheticSpec& spec) {
  if (spec.n_real < 1 || spec.n_generated < 1)
    throw std::invalid_argument("gen_benchmark: class counts must be >= 1");
  if (spec.offset_kind == SyntheticSpec::OffsetKind::Uniform && spec.m_lo > spec.m_hi)
    throw std::invalid_argument("gen_benchmark: m_lo must not exceed m_hi");
  if (!(spec.split > 0.0 && spec.split < 1.0))
    throw std::invalid_argument("gen_benchmark: split must be in (0,1)");

  Rng rng(spec.seed);
  auto add_noise = [&](ImageTensor& img) {
    if (spec.noise_floor > 0.0)
      for (Eigen::Index i = 0; i < img.values.size(); ++i)
        img.values[i] += spec.noise_floor * rng.normal();
  };

  std::vector<DatasetItem> reals(spec.n_real), gens(spec.n_generated);
  for (auto& item : reals) {
    double m = spec.offset_kind == SyntheticSpec::OffsetKind::Fixed
                   ? spec.m
                   : rng.uniform(spec.m_lo, spec.m_hi);
    auto sample = manifold::sample_tubular(pair, prior, m, rng);
    if (m > manifold::tube_radius(pair, sample.z))
      throw std::invalid_argument("gen_benchmark: offset exceeds the tubular radius");
    item.image = ImageTensor{pair.image_shape(), sample.x_off};
    item.label = Label::Real;
    item.eps_norm = m;
    add_noise(item.image);
    item.clamp_shift = clamp01_inplace(item.image);
  }
  for (auto& item : gens) {
    item.image = pair.decode_image(prior.sample(rng));
    item.label = Label::Generated;
    item.eps_norm = 0.0;
    add_noise(item.image);
    item.clamp_shift = clamp01_inplace(item.image);
  }

  auto split_count = [&](int n) {
    return static_cast<int>(std::llround(spec.split * n));
  };
  Dataset calib, eval;
  const int cr = split_count(spec.n_real);
  const int cg = split_count(spec.n_generated);
  for (int i = 0; i < spec.n_real; ++i)
    (i < cr ? calib : eval).items.push_back(std::move(reals[i]));
  for (int i = 0; i < spec.n_generated; ++i)
    (i < cg ? calib : eval).items.push_back(std::move(gens[i]));
  return {std::move(calib), std::move(eval)};
}

// ---------------------------------------------------------------------------
// PGM/PPM

namespace {

int next_token(std::istream& in, std::string& token) {
  token.clear();
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {  // comment to end of line
      while (ch != EOF && ch != '\n') ch = in.get();
      ch = in.get();
      continue;
    }
    if (!std::isspace(ch)) break;
    ch = in.get();
  }
  while (ch != EOF && !std::isspace(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return ch;
}

int parse_int_token(std::istream& in, const char* what) {
  std::string token;
  next_token(in, token);
  if (token.empty()) throw std::runtime_error(std::string("image header: missing ") + what);
  try {
    return std::stoi(token);
  } catch (...) {
    throw std::runtime_error(std::string("image header: bad ") + what + " '" + token + "'");
  }
}

}  // namespace

ImageTensor load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_image: cannot open " + path);
  std::string magic;
  next_token(in, magic);
  int channels = 0;
  if (magic == "P5")
    channels = 1;
  else if (magic == "P6")
    channels = 3;
  else
    throw std::runtime_error("load_image: unsupported magic '" + magic + "' in " + path);
  int width = parse_int_token(in, "width");
  int height = parse_int_token(in, "height");
  int maxval = parse_int_token(in, "maxval");
  if (width <= 0 || height <= 0)
    throw std::runtime_error("load_image: bad dimensions in " + path);
  if (maxval != 255)
    throw std::runtime_error("load_image: unsupported maxval (expected 255) in " + path);
  // Binary payload begins after the single whitespace consumed by next_token.
  ImageShape shape{height, width, channels};
  const std::size_t count = static_cast<std::size_t>(shape.pixel_count());
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    std::ostringstream os;
    os << "load_image: truncated payload in " << path << " (got " << in.gcount()
       << " of " << count << " bytes, stopped at byte offset "
       << static_cast<std::size_t>(in.gcount()) << ")";
    throw std::runtime_error(os.str());
  }
  ImageTensor img = ImageTensor::zeros(shape);
  for (std::size_t i = 0; i < count; ++i) img.values[i] = bytes[i] / 255.0;
  return img;
}

void save_image(const std::string& path, const ImageTensor& img) {
  if (img.shape.channels != 1 && img.shape.channels != 3)
    throw std::invalid_argument("save_image: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_image: cannot open " + path);
  out << (img.shape.channels == 1 ? "P5" : "P6") << '\n'
      << img.shape.width << ' ' << img.shape.height << '\n'
      << 255 << '\n';
  for (Eigen::Index i = 0; i < img.values.size(); ++i) {
    double v = std::round(img.values[i] * 255.0);
    v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
    out.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
  if (!out) throw std::runtime_error("save_image: write failed for " + path);
}

// ---------------------------------------------------------------------------
// RGT1 raw tensors

namespace {

constexpr char kTensorMagic[4] = {'R', 'G', 'T', '1'};
constexpr std::uint32_t kKindImage = 0;
constexpr std::uint32_t kKindMatrix = 1;

static_assert(std::endian::native == std::endian::little,
              "tensor serialization assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("tensor file truncated: " + path);
  return v;
}

void check_payload_size(const std::string& path, std::istream& in,
                        std::size_t header_bytes, std::size_t count) {
  in.seekg(0, std::ios::end);
  auto file_size = static_cast<std::size_t>(in.tellg());
  if (file_size != header_bytes + count * sizeof(double))
    throw std::runtime_error("tensor file: shape header disagrees with payload length: " +
                             path);
  in.seekg(static_cast<std::streamoff>(header_bytes), std::ios::beg);
}

}  // namespace

void save_tensor(const std::string& path, const ImageTensor& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_tensor: cannot open " + path);
  out.write(kTensorMagic, 4);
  write_pod<std::uint32_t>(out, kKindImage);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(img.shape.height));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(img.shape.width));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(img.shape.channels));
  out.write(reinterpret_cast<const char*>(img.values.data()),
            static_cast<std::streamsize>(sizeof(double) * img.values.size()));
  if (!out) throw std::runtime_error("save_tensor: write failed for " + path);
}

ImageTensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_tensor: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTensorMagic, 4) != 0)
    throw std::runtime_error("load_tensor: bad magic in " + path);
  auto kind = read_pod<std::uint32_t>(in, path);
  if (kind != kKindImage)
    throw std::runtime_error("load_tensor: not an image tensor: " + path);
  ImageShape shape;
  shape.height = static_cast<int>(read_pod<std::uint32_t>(in, path));
  shape.width = static_cast<int>(read_pod<std::uint32_t>(in, path));
  shape.channels = static_cast<int>(read_pod<std::uint32_t>(in, path));
  const auto count = static_cast<std::size_t>(shape.pixel_count());
  check_payload_size(path, in, 4 + 4 * sizeof(std::uint32_t), count);
  ImageTensor img = ImageTensor::zeros(shape);
  in.read(reinterpret_cast<char*>(img.values.data()),
          static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw std::runtime_error("load_tensor: truncated payload in " + path);
  return img;
}

void save_matrix(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_matrix: cannot open " + path);
  out.write(kTensorMagic, 4);
  write_pod<std::uint32_t>(out, kKindMatrix);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
  if (!out) throw std::runtime_error("save_matrix: write failed for " + path);
}

Mat load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_matrix: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTensorMagic, 4) != 0)
    throw std::runtime_error("load_matrix: bad magic in " + path);
  auto kind = read_pod<std::uint32_t>(in, path);
  if (kind != kKindMatrix)
    throw std::runtime_error("load_matrix: not a matrix tensor: " + path);
  auto rows = read_pod<std::uint32_t>(in, path);
  auto cols = read_pod<std::uint32_t>(in, path);
  check_payload_size(path, in, 4 + 3 * sizeof(std::uint32_t),
                     static_cast<std::size_t>(rows) * cols);
  Mat m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_pod<double>(in, path);
  return m;
}

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const std::string& path, const std::vector<std::string>& files,
                    const Dataset& set) {
  if (files.size() != set.items.size())
    throw std::invalid_argument("write_manifest: file count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << "path,label,eps_norm\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ostringstream eps;
    eps.setf(std::ios::scientific);
    eps.precision(17);
    eps << set.items[i].eps_norm;
    out << files[i] << ',' << to_string(set.items[i].label) << ',' << eps.str() << '\n';
  }
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

Dataset load_from_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("load_from_manifest: cannot open " + manifest_path);
  std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  Dataset set;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string file, label, eps;
    std::getline(ls, file, ',');
    std::getline(ls, label, ',');
    std::getline(ls, eps, ',');
    DatasetItem item;
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    if (p.extension() == ".rgt")
      item.image = load_tensor(p.string());
    else
      item.image = load_image(p.string());
    if (label == "real")
      item.label = Label::Real;
    else if (label == "generated")
      item.label = Label::Generated;
    else
      throw std::runtime_error("load_from_manifest: unknown label '" + label + "'");
    item.eps_norm = eps.empty() ? 0.0 : std::stod(eps);
    set.items.push_back(std::move(item));
  }
  return set;
}

}  // namespace regap::io
