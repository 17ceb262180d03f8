#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "echoalign/dataset.hpp"

namespace echoalign {

/// Knobs of the prototype-pull modifier.
struct ModifierConfig {
  double pull_strength = 0.6;  ///< lambda in (0, 1]: fraction of the way to the label prototype
  double residual_std = 0.0;   ///< isotropic Gaussian residual added before renormalizing
  std::uint64_t seed = 0;

  void validate() const;
};

/// An original instance and its label-aligned modification.
struct ModifiedPair {
  InstanceId id = 0;
  Vector original;
  Vector modified;
  ClassIndex noisy_label = 0;
  double similarity = 0.0;  ///< cosine(original, modified), cached

  bool operator==(const ModifiedPair&) const = default;
};

/// modified = normalize((1 - lambda) * original + lambda * prototype[noisy_label] + eps),
/// eps ~ N(0, residual_std^2) per coordinate from the (seed, id) stream.
/// Output follows the dataset's order. Throws MismatchError if a label has
/// no prototype (missing or empty vector) or dims disagree.
std::vector<ModifiedPair> modify(const Dataset& dataset, std::span<const Vector> prototypes,
                                 const ModifierConfig& config);

/// Pairs two in-memory datasets by id; labels come from `original`.
/// Throws MismatchError naming the first offending id.
std::vector<ModifiedPair> pair_by_id(const Dataset& original, const Dataset& modified);

/// Reads two feature files and pairs them (see pair_by_id).
std::vector<ModifiedPair> ingest_external(const std::filesystem::path& original_path,
                                          const std::filesystem::path& modified_path);

/// Normalized mean of the original features per noisy label. Classes with
/// no instances get an empty vector.
std::vector<Vector> class_centroids(const Dataset& dataset);

/// The modified side of `pairs` as a dataset with the source's ids, labels,
/// truth flag and C.
Dataset modified_dataset(const Dataset& source, std::span<const ModifiedPair> pairs);

}  // namespace echoalign
