#include "regap/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regap::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool looks_like_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

std::string parse_quoted(const std::string& raw, const std::string& context) {
  if (raw.size() < 2 || raw.back() != '"')
    throw std::runtime_error("config: unterminated string for " + context);
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) {
      char n = raw[i + 1];
      if (n == '"' || n == '\\') {
        out.push_back(n);
        ++i;
        continue;
      }
    }
    out.push_back(raw[i]);
  }
  return out;
}

Tree::Value parse_scalar(const std::string& raw, const std::string& context) {
  if (!raw.empty() && raw.front() == '"') return parse_quoted(raw, context);
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (looks_like_int(raw)) return static_cast<std::int64_t>(std::stoll(raw));
  try {
    std::size_t used = 0;
    double d = std::stod(raw, &used);
    if (used == raw.size()) return d;
  } catch (...) {
  }
  throw std::runtime_error("config: cannot parse value '" + raw + "' for " + context);
}

Tree::Value parse_array(const std::string& raw, const std::string& context) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_string = false;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char ch = raw[i];
    if (ch == '"' && raw[i - 1] != '\\') in_string = !in_string;
    if (ch == ',' && !in_string) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty()) parts.push_back(trim(cur));

  if (parts.empty()) return std::vector<double>{};
  if (parts.front().front() == '"') {
    std::vector<std::string> out;
    for (const auto& p : parts) out.push_back(parse_quoted(p, context));
    return out;
  }
  std::vector<double> out;
  for (const auto& p : parts) {
    auto v = parse_scalar(p, context);
    if (std::holds_alternative<double>(v))
      out.push_back(std::get<double>(v));
    else if (std::holds_alternative<std::int64_t>(v))
      out.push_back(static_cast<double>(std::get<std::int64_t>(v)));
    else
      throw std::runtime_error("config: mixed array types for " + context);
  }
  return out;
}

}  // namespace

Tree Tree::parse_string(const std::string& text) {
  Tree tree;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: malformed table header at line " +
                                 std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at line " +
                               std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string raw = trim(line.substr(eq + 1));
    if (key.empty() || raw.empty())
      throw std::runtime_error("config: empty key or value at line " +
                               std::to_string(lineno));
    std::string full = section.empty() ? key : section + "." + key;
    if (raw.front() == '[') {
      if (raw.back() != ']')
        throw std::runtime_error("config: unterminated array at line " +
                                 std::to_string(lineno));
      tree.values_[full] = parse_array(raw, full);
    } else {
      tree.values_[full] = parse_scalar(raw, full);
    }
  }
  return tree;
}

Tree Tree::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

const Tree::Value* Tree::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

bool Tree::has(const std::string& key) const { return find(key) != nullptr; }

std::string Tree::get_string(const std::string& key) const {
  const Value* v = find(key);
  if (!v || !std::holds_alternative<std::string>(*v))
    throw std::runtime_error("config: missing string key '" + key + "'");
  return std::get<std::string>(*v);
}

std::string Tree::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::int64_t Tree::get_int(const std::string& key) const {
  const Value* v = find(key);
  if (!v || !std::holds_alternative<std::int64_t>(*v))
    throw std::runtime_error("config: missing integer key '" + key + "'");
  return std::get<std::int64_t>(*v);
}

std::int64_t Tree::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Tree::get_double(const std::string& key) const {
  const Value* v = find(key);
  if (!v) throw std::runtime_error("config: missing numeric key '" + key + "'");
  if (std::holds_alternative<double>(*v)) return std::get<double>(*v);
  if (std::holds_alternative<std::int64_t>(*v))
    return static_cast<double>(std::get<std::int64_t>(*v));
  throw std::runtime_error("config: key '" + key + "' is not numeric");
}

double Tree::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool Tree::get_bool(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  if (!v) return fallback;
  if (!std::holds_alternative<bool>(*v))
    throw std::runtime_error("config: key '" + key + "' is not a boolean");
  return std::get<bool>(*v);
}

std::vector<std::string> Tree::get_strings(const std::string& key) const {
  const Value* v = find(key);
  if (!v || !std::holds_alternative<std::vector<std::string>>(*v))
    throw std::runtime_error("config: missing string array '" + key + "'");
  return std::get<std::vector<std::string>>(*v);
}

std::vector<double> Tree::get_doubles(const std::string& key) const {
  const Value* v = find(key);
  if (!v || !std::holds_alternative<std::vector<double>>(*v))
    throw std::runtime_error("config: missing numeric array '" + key + "'");
  return std::get<std::vector<double>>(*v);
}

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  Tree t = Tree::parse_file(path);
  ExperimentConfig cfg;

  if (t.has("seed")) {
    cfg.seed = static_cast<std::uint64_t>(t.get_int("seed"));
    cfg.seed_set = true;
  }
  cfg.output_dir = t.get_string("output", cfg.output_dir);
  cfg.model_path = t.get_string("paths.model", "");
  cfg.data_dir = t.get_string("paths.data_dir", "");
  cfg.train_data = t.get_string("paths.train_data", "");

  auto& m = cfg.model;
  m.kind = t.get_string("model.kind", m.kind);
  m.shape.height = static_cast<int>(t.get_int("model.height", m.shape.height));
  m.shape.width = static_cast<int>(t.get_int("model.width", m.shape.width));
  m.shape.channels = static_cast<int>(t.get_int("model.channels", m.shape.channels));
  if (m.shape.channels != 1 && m.shape.channels != 3)
    throw std::runtime_error("config: model.channels must be 1 or 3");
  m.latent_dim = static_cast<int>(t.get_int("model.latent_dim", m.latent_dim));
  m.encoder = t.get_string("model.encoder", m.encoder);
  m.scale = t.get_double("model.scale", m.scale);
  m.bias = t.get_double("model.bias", m.bias);
  m.prior = t.get_string("model.prior", m.prior);
  m.prior_lo = t.get_double("model.prior_lo", m.prior_lo);
  m.prior_hi = t.get_double("model.prior_hi", m.prior_hi);
  if (t.has("model.encoder_hidden")) m.encoder_hidden = t.get_doubles("model.encoder_hidden");
  if (t.has("model.decoder_hidden")) m.decoder_hidden = t.get_doubles("model.decoder_hidden");
  m.activation = t.get_string("model.activation", m.activation);
  m.epochs = static_cast<int>(t.get_int("model.epochs", m.epochs));
  m.learning_rate = t.get_double("model.learning_rate", m.learning_rate);
  m.lambda = t.get_double("model.lambda", m.lambda);
  m.prior_samples = static_cast<int>(t.get_int("model.prior_samples", m.prior_samples));

  auto& d = cfg.data;
  d.n_real = static_cast<int>(t.get_int("data.n_real", d.n_real));
  d.n_generated = static_cast<int>(t.get_int("data.n_generated", d.n_generated));
  d.offset = t.get_string("data.offset", d.offset);
  d.m = t.get_double("data.m", d.m);
  d.m_lo = t.get_double("data.m_lo", d.m_lo);
  d.m_hi = t.get_double("data.m_hi", d.m_hi);
  d.noise_floor = t.get_double("data.noise_floor", d.noise_floor);
  d.split = t.get_double("data.split", d.split);

  std::vector<std::string> edit_names{"add", "fix", "sem"};
  if (t.has("edits.set")) edit_names = t.get_strings("edits.set");
  edits::EditConfig base;
  base.patch_size = static_cast<int>(t.get_int("edits.patch_size", 0));
  std::string placement = t.get_string("edits.placement", "max-error-region");
  if (placement == "center")
    base.placement = edits::Placement::Center;
  else if (placement == "random")
    base.placement = edits::Placement::Random;
  else if (placement == "max-error-region")
    base.placement = edits::Placement::MaxErrorRegion;
  else
    throw std::runtime_error("config: unknown edits.placement '" + placement + "'");
  base.sem_step = t.get_double("edits.sem_step", base.sem_step);
  std::string dir = t.get_string("edits.sem_direction", "top-singular");
  if (dir == "top-singular")
    base.sem_direction = edits::SemDirection::TopSingular;
  else if (dir == "random-unit")
    base.sem_direction = edits::SemDirection::RandomUnit;
  else
    throw std::runtime_error("config: unknown edits.sem_direction '" + dir + "'");
  base.blend_alpha = t.get_double("edits.blend_alpha", base.blend_alpha);
  if (!(base.blend_alpha > 0.0 && base.blend_alpha <= 1.0))
    throw std::runtime_error("config: edits.blend_alpha must be in (0,1]");
  for (const auto& name : edit_names)
    cfg.edit_set.push_back({edits::edit_from_string(name), base});

  std::vector<std::string> metric_names{"mse"};
  if (t.has("metrics.kinds")) metric_names = t.get_strings("metrics.kinds");
  for (const auto& name : metric_names)
    cfg.metric_kinds.push_back(metrics::metric_from_string(name));
  cfg.metric_cfg.dynamic_range = t.get_double("metrics.dynamic_range", 1.0);
  cfg.metric_cfg.window = static_cast<int>(t.get_int("metrics.window", 7));

  cfg.aggregation =
      detector::aggregation_from_string(t.get_string("detector.aggregation", "max"));
  cfg.retention = t.get_double("detector.retention", cfg.retention);
  if (t.has("detector.tau")) cfg.fixed_tau = t.get_double("detector.tau");

  if (t.has("sweep.jpeg_grid")) cfg.jpeg_grid = t.get_doubles("sweep.jpeg_grid");
  if (t.has("sweep.crop_grid")) cfg.crop_grid = t.get_doubles("sweep.crop_grid");
  if (t.has("bound.magnitudes")) cfg.bound_magnitudes = t.get_doubles("bound.magnitudes");
  cfg.bound_trials = static_cast<int>(t.get_int("bound.trials", cfg.bound_trials));

  return cfg;
}

model::LatentPrior ExperimentConfig::make_prior() const {
  if (model.prior == "standard-normal")
    return model::LatentPrior::standard_normal(model.latent_dim);
  if (model.prior == "uniform")
    return model::LatentPrior::uniform_box(model.latent_dim, model.prior_lo,
                                           model.prior_hi);
  throw std::runtime_error("config: unknown prior '" + model.prior + "'");
}

model::LinearPair ExperimentConfig::make_linear_pair() const {
  if (model.kind != "linear")
    throw std::runtime_error("config: make_linear_pair called for non-linear model");
  if (model.encoder == "pseudo-inverse")
    return model::LinearPair::orthonormal(model.shape, model.latent_dim, seed,
                                          model.scale, model.bias);
  if (model.encoder == "normal-sensitive")
    return model::LinearPair::normal_sensitive(model.shape, model.latent_dim, seed,
                                               model.bias);
  throw std::runtime_error("config: unknown encoder '" + model.encoder + "'");
}

}  // namespace regap::config
