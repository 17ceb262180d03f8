#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "echoalign/dataset.hpp"
#include "echoalign/errors.hpp"
#include "echoalign/modifier.hpp"
#include "echoalign/noise.hpp"
#include "echoalign/theory.hpp"
#include "echoalign/train.hpp"

namespace echoalign {

/// Flat key=value configuration. '#' starts a comment, blank lines are
/// skipped, whitespace around keys and values is trimmed. Duplicate keys are
/// a parse error. Getters remember which keys were read so that
/// reject_unused() can flag typos.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config read(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = {}) const;
  double get_double(const std::string& key, std::optional<double> fallback = {}) const;
  std::uint64_t get_uint(const std::string& key, std::optional<std::uint64_t> fallback = {}) const;
  /// Comma-separated list.
  std::vector<double> get_doubles(const std::string& key, const std::optional<std::vector<double>>& fallback = {}) const;
  std::vector<std::uint64_t> get_uints(const std::string& key,
                                       const std::optional<std::vector<std::uint64_t>>& fallback = {}) const;

  /// Throws ParseError at the first key no getter has asked for.
  void reject_unused() const;

  const std::string& source() const noexcept { return source_; }

 private:
  struct Value {
    std::string text;
    std::size_t line;
  };
  const Value* lookup(const std::string& key) const;
  ParseError bad_value(const std::string& key, const Value& v, const char* expected) const;

  std::string source_;
  std::map<std::string, Value> values_;
  mutable std::set<std::string> used_;
};

// Section loaders. Missing keys keep the struct defaults unless noted.
//   world.classes world.dim world.separation world.std world.per_class world.seed
//   noise.family noise.rate noise.seed noise.idn_std
//   modifier.lambda modifier.residual_std modifier.seed
//   linear.dim linear.samples linear.coefficients linear.noise_std linear.gain linear.seed
//   train.lr train.momentum train.weight_decay train.batch train.epochs
//   train.decay_epochs train.decay_factor train.seed
SynthWorldSpec load_world(const Config& c);
NoiseSpec load_noise(const Config& c);
ModifierConfig load_modifier(const Config& c);
LinearWorldSpec load_linear(const Config& c);  // linear.coefficients is required
TrainConfig load_train(const Config& c);
/// Every section above plus theory.rademacher_bound, theory.rademacher_draws,
/// theory.bootstrap_resamples.
TheorySpec load_theory(const Config& c);

/// A committed end-to-end benchmark: world, noise, modifier, threshold
/// (select.tau, required) and training config.
struct BenchmarkSpec {
  SynthWorldSpec world;
  NoiseSpec noise;
  ModifierConfig modifier;
  double tau = 0.4;
  TrainConfig train;

  /// Same benchmark with every seed replaced by `seed`.
  BenchmarkSpec with_seed(std::uint64_t seed) const;
};

BenchmarkSpec load_benchmark(const Config& c);

}  // namespace echoalign
