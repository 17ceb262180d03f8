#include "echoalign/modifier.hpp"

#include <cmath>

#include "echoalign/errors.hpp"
#include "echoalign/parallel.hpp"
#include "echoalign/rng.hpp"
#include "echoalign/selection.hpp"

namespace echoalign {

void ModifierConfig::validate() const {
  if (!(pull_strength > 0.0 && pull_strength <= 1.0)) throw DomainError("pull_strength must be in (0, 1]");
  if (!(residual_std >= 0.0) || !std::isfinite(residual_std)) throw DomainError("residual_std must be >= 0");
}

std::vector<ModifiedPair> modify(const Dataset& dataset, std::span<const Vector> prototypes,
                                 const ModifierConfig& config) {
  config.validate();
  const double lambda = config.pull_strength;
  std::vector<ModifiedPair> pairs(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const LabeledInstance& inst = dataset[i];
    if (inst.noisy_label >= prototypes.size() || prototypes[inst.noisy_label].empty()) {
      throw MismatchError("no prototype for label " + std::to_string(inst.noisy_label) + " (id " +
                          std::to_string(inst.id) + ")");
    }
    const Vector& target = prototypes[inst.noisy_label];
    if (target.size() != dataset.dim()) throw MismatchError("prototype dim != dataset dim");
    Stream s(config.seed, "modify", inst.id);
    Vector moved(dataset.dim());
    for (std::size_t d = 0; d < moved.size(); ++d) {
      moved[d] = (1.0 - lambda) * inst.features[d] + lambda * target[d];
      if (config.residual_std > 0.0) moved[d] += config.residual_std * s.normal();
    }
    ModifiedPair& p = pairs[i];
    p.id = inst.id;
    p.original = inst.features;
    p.modified = normalized(std::move(moved));
    p.noisy_label = inst.noisy_label;
    p.similarity = cosine_similarity(p.original, p.modified);
  });
  return pairs;
}

std::vector<ModifiedPair> pair_by_id(const Dataset& original, const Dataset& modified) {
  if (original.dim() != modified.dim()) {
    throw MismatchError("dimension mismatch: original D=" + std::to_string(original.dim()) +
                        ", modified D=" + std::to_string(modified.dim()));
  }
  if (original.num_classes() != modified.num_classes()) {
    throw MismatchError("class count mismatch between original and modified files");
  }
  // Both sides are sorted by id, so the first disagreement in a merge walk
  // is the smallest offending id.
  const std::size_t n = std::max(original.size(), modified.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool has_o = i < original.size();
    const bool has_m = i < modified.size();
    if (has_o && has_m && original[i].id == modified[i].id) continue;
    InstanceId bad = 0;
    std::string side;
    if (has_o && (!has_m || original[i].id < modified[i].id)) {
      bad = original[i].id;
      side = "missing from modified file";
    } else {
      bad = modified[i].id;
      side = "missing from original file";
    }
    throw MismatchError("id " + std::to_string(bad) + " " + side);
  }
  std::vector<ModifiedPair> pairs(original.size());
  parallel_for(original.size(), [&](std::size_t i) {
    ModifiedPair& p = pairs[i];
    p.id = original[i].id;
    p.original = original[i].features;
    p.modified = modified[i].features;
    p.noisy_label = original[i].noisy_label;
    try {
      p.similarity = cosine_similarity(p.original, p.modified);
    } catch (const DomainError& e) {
      throw DomainError("id " + std::to_string(p.id) + ": " + e.what());
    }
  });
  return pairs;
}

std::vector<ModifiedPair> ingest_external(const std::filesystem::path& original_path,
                                          const std::filesystem::path& modified_path) {
  return pair_by_id(read_feature_file(original_path), read_feature_file(modified_path));
}

std::vector<Vector> class_centroids(const Dataset& dataset) {
  std::vector<Vector> sums(dataset.num_classes(), Vector(dataset.dim(), 0.0));
  std::vector<std::size_t> counts(dataset.num_classes(), 0);
  for (const auto& inst : dataset.instances()) {
    ++counts[inst.noisy_label];
    for (std::size_t d = 0; d < dataset.dim(); ++d) sums[inst.noisy_label][d] += inst.features[d];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] == 0 || norm(sums[c]) == 0.0) {
      sums[c].clear();
    } else {
      sums[c] = normalized(std::move(sums[c]));
    }
  }
  return sums;
}

Dataset modified_dataset(const Dataset& source, std::span<const ModifiedPair> pairs) {
  if (pairs.size() != source.size()) throw MismatchError("pair count != dataset size");
  std::vector<LabeledInstance> rows(source.instances().begin(), source.instances().end());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (pairs[i].id != rows[i].id) throw MismatchError("pair order differs from dataset at id " + std::to_string(rows[i].id));
    rows[i].features = pairs[i].modified;
  }
  std::string prov = source.provenance();
  return Dataset(source.num_classes(), source.dim(), source.with_truth(), std::move(rows), std::move(prov));
}

}  // namespace echoalign
