#include "echoalign/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace echoalign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  // Keeps empty items ("1,,2" and "1,2,") so they fail to parse.
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (*first == '+') ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (c.values_.count(key)) throw ParseError(source, line_no, "duplicate key '" + key + "'");
    c.values_.emplace(key, Value{trim(line.substr(eq + 1)), line_no});
  }
  return c;
}

Config Config::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

const Config::Value* Config::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

ParseError Config::bad_value(const std::string& key, const Value& v, const char* expected) const {
  return ParseError(source_, v.line, "key '" + key + "': expected " + expected + ", got '" + v.text + "'");
}

std::string Config::get_string(const std::string& key, const std::optional<std::string>& fallback) const {
  if (const Value* v = lookup(key)) return v->text;
  if (fallback) return *fallback;
  throw Error(source_ + ": missing required key '" + key + "'");
}

double Config::get_double(const std::string& key, std::optional<double> fallback) const {
  if (const Value* v = lookup(key)) {
    double out = 0.0;
    if (!parse_number(v->text, out)) throw bad_value(key, *v, "a number");
    return out;
  }
  if (fallback) return *fallback;
  throw Error(source_ + ": missing required key '" + key + "'");
}

std::uint64_t Config::get_uint(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (const Value* v = lookup(key)) {
    std::uint64_t out = 0;
    if (!parse_number(v->text, out)) throw bad_value(key, *v, "a non-negative integer");
    return out;
  }
  if (fallback) return *fallback;
  throw Error(source_ + ": missing required key '" + key + "'");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::optional<std::vector<double>>& fallback) const {
  if (const Value* v = lookup(key)) {
    std::vector<double> out;
    if (v->text.empty()) return out;
    for (const auto& item : split_commas(v->text)) {
      double d = 0.0;
      if (!parse_number(item, d)) throw bad_value(key, *v, "a comma-separated list of numbers");
      out.push_back(d);
    }
    return out;
  }
  if (fallback) return *fallback;
  throw Error(source_ + ": missing required key '" + key + "'");
}

std::vector<std::uint64_t> Config::get_uints(const std::string& key,
                                             const std::optional<std::vector<std::uint64_t>>& fallback) const {
  if (const Value* v = lookup(key)) {
    std::vector<std::uint64_t> out;
    if (v->text.empty()) return out;
    for (const auto& item : split_commas(v->text)) {
      std::uint64_t u = 0;
      if (!parse_number(item, u)) throw bad_value(key, *v, "a comma-separated list of integers");
      out.push_back(u);
    }
    return out;
  }
  if (fallback) return *fallback;
  throw Error(source_ + ": missing required key '" + key + "'");
}

void Config::reject_unused() const {
  // Report the earliest offending line, not the alphabetically first key.
  const std::pair<const std::string, Value>* first = nullptr;
  for (const auto& kv : values_) {
    if (used_.count(kv.first)) continue;
    if (!first || kv.second.line < first->second.line) first = &kv;
  }
  if (first) throw ParseError(source_, first->second.line, "unknown key '" + first->first + "'");
}

SynthWorldSpec load_world(const Config& c) {
  SynthWorldSpec s;
  s.num_classes = c.get_uint("world.classes", s.num_classes);
  s.dim = c.get_uint("world.dim", s.dim);
  s.prototype_separation = c.get_double("world.separation", s.prototype_separation);
  s.intra_class_std = c.get_double("world.std", s.intra_class_std);
  s.samples_per_class = c.get_uint("world.per_class", s.samples_per_class);
  s.seed = c.get_uint("world.seed", s.seed);
  s.validate();
  return s;
}

NoiseSpec load_noise(const Config& c) {
  NoiseSpec s;
  s.family = parse_noise_family(c.get_string("noise.family", std::string(to_string(s.family))));
  s.rate = c.get_double("noise.rate", s.rate);
  s.seed = c.get_uint("noise.seed", s.seed);
  s.idn_std = c.get_double("noise.idn_std", s.idn_std);
  s.validate();
  return s;
}

ModifierConfig load_modifier(const Config& c) {
  ModifierConfig m;
  m.pull_strength = c.get_double("modifier.lambda", m.pull_strength);
  m.residual_std = c.get_double("modifier.residual_std", m.residual_std);
  m.seed = c.get_uint("modifier.seed", m.seed);
  m.validate();
  return m;
}

LinearWorldSpec load_linear(const Config& c) {
  LinearWorldSpec s;
  s.coefficients = c.get_doubles("linear.coefficients");
  s.dim = c.get_uint("linear.dim", s.coefficients.size());
  s.num_samples = c.get_uint("linear.samples", s.num_samples);
  s.noise_std = c.get_double("linear.noise_std", s.noise_std);
  s.alignment_gain = c.get_double("linear.gain", s.alignment_gain);
  s.seed = c.get_uint("linear.seed", s.seed);
  s.validate();
  return s;
}

TrainConfig load_train(const Config& c) {
  TrainConfig t;
  t.learning_rate = c.get_double("train.lr", t.learning_rate);
  t.momentum = c.get_double("train.momentum", t.momentum);
  t.weight_decay = c.get_double("train.weight_decay", t.weight_decay);
  t.batch_size = c.get_uint("train.batch", t.batch_size);
  t.epochs = c.get_uint("train.epochs", t.epochs);
  const auto decay = c.get_uints("train.decay_epochs", std::vector<std::uint64_t>(t.lr_decay_epochs.begin(),
                                                                                  t.lr_decay_epochs.end()));
  t.lr_decay_epochs.assign(decay.begin(), decay.end());
  t.lr_decay_factor = c.get_double("train.decay_factor", t.lr_decay_factor);
  t.seed = c.get_uint("train.seed", t.seed);
  t.validate();
  return t;
}

TheorySpec load_theory(const Config& c) {
  TheorySpec s;
  s.world = load_world(c);
  s.noise = load_noise(c);
  s.modifier = load_modifier(c);
  s.linear = load_linear(c);
  s.rademacher_bound = c.get_double("theory.rademacher_bound", s.rademacher_bound);
  s.rademacher_draws = c.get_uint("theory.rademacher_draws", s.rademacher_draws);
  s.bootstrap_resamples = c.get_uint("theory.bootstrap_resamples", s.bootstrap_resamples);
  if (!(s.rademacher_bound > 0.0)) throw DomainError("theory.rademacher_bound must be > 0");
  if (s.rademacher_draws < 1) throw DomainError("theory.rademacher_draws must be >= 1");
  if (s.bootstrap_resamples < 2) throw DomainError("theory.bootstrap_resamples must be >= 2");
  return s;
}

BenchmarkSpec BenchmarkSpec::with_seed(std::uint64_t seed) const {
  BenchmarkSpec b = *this;
  b.world.seed = seed;
  b.noise.seed = seed;
  b.modifier.seed = seed;
  b.train.seed = seed;
  return b;
}

BenchmarkSpec load_benchmark(const Config& c) {
  BenchmarkSpec b;
  b.world = load_world(c);
  b.noise = load_noise(c);
  b.modifier = load_modifier(c);
  b.tau = c.get_double("select.tau");
  b.train = load_train(c);
  return b;
}

}  // namespace echoalign
