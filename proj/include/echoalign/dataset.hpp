#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace echoalign {

using Vector = std::vector<double>;
using ClassIndex = std::size_t;
using InstanceId = std::uint64_t;

struct LabeledInstance {
  InstanceId id = 0;
  Vector features;
  ClassIndex noisy_label = 0;
  std::optional<ClassIndex> true_label;

  bool operator==(const LabeledInstance&) const = default;
};

/// Ordered collection of instances sharing C classes and D dimensions.
///
/// Invariants (checked on construction): C >= 2, D >= 1, ids unique and
/// ascending, every feature vector has D finite entries, labels < C, and
/// either every instance carries a true label (with_truth) or none does.
class Dataset {
 public:
  Dataset(std::size_t num_classes, std::size_t dim, bool with_truth,
          std::vector<LabeledInstance> instances, std::string provenance = {});

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t dim() const noexcept { return dim_; }
  bool with_truth() const noexcept { return with_truth_; }
  const std::string& provenance() const noexcept { return provenance_; }
  std::span<const LabeledInstance> instances() const noexcept { return instances_; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const LabeledInstance& operator[](std::size_t i) const { return instances_[i]; }

  /// Position of `id`, or nullopt. Binary search over the sorted ids.
  std::optional<std::size_t> find(InstanceId id) const;

  /// Same instances, new provenance string.
  Dataset with_provenance(std::string provenance) const;

  /// Fraction of instances whose noisy label equals the true label.
  /// Requires with_truth() and a nonempty dataset.
  double clean_rate() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t num_classes_;
  std::size_t dim_;
  bool with_truth_;
  std::vector<LabeledInstance> instances_;
  std::string provenance_;
};

/// Parameters of the synthetic benchmark world: a Gaussian mixture on the
/// unit sphere with one prototype per class.
struct SynthWorldSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 32;
  double prototype_separation = 0.8;
  double intra_class_std = 0.1;
  std::size_t samples_per_class = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

struct World {
  Dataset dataset;
  std::vector<Vector> prototypes;
};

/// Places C unit-norm prototypes (pairwise distance >= separation, at most
/// 10*C placement attempts) and draws samples_per_class instances per class
/// as normalize(prototype + eps). Labels are clean: noisy == true.
World generate_world(const SynthWorldSpec& spec);

/// Draws a fresh instance set from existing prototypes. `split` selects an
/// independent sample family (0 reproduces generate_world's instances).
Dataset sample_instances(const SynthWorldSpec& spec, std::span<const Vector> prototypes,
                         std::uint64_t split);

/// Feature file, text:
///   echoalign-features v1 C=<int> D=<int> truth=<0|1>[ provenance=<text>]
///   id,label[,true_label],f0,...,f(D-1)
/// Features are printed in shortest round-trip form.
Dataset read_feature_file(const std::filesystem::path& path);
void write_feature_file(const Dataset& dataset, const std::filesystem::path& path);

/// String forms of the above, for in-memory round trips.
Dataset parse_features(const std::string& text, const std::string& source = "<memory>");
std::string format_features(const Dataset& dataset);

/// Prototype files reuse the feature format: one row per class, id = label = class.
Dataset prototypes_as_dataset(std::span<const Vector> prototypes, std::string provenance = {});
std::vector<Vector> prototypes_from_dataset(const Dataset& dataset);

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
/// Returns v / ||v||; throws DomainError on zero or non-finite norm.
Vector normalized(Vector v);

}  // namespace echoalign
