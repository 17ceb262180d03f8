#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "echoalign/dataset.hpp"
#include "echoalign/manifest.hpp"
#include "echoalign/modifier.hpp"

namespace echoalign {

/// Cosine similarity. Throws DomainError if either vector has zero norm or
/// the lengths differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Output of the two-part selection rule for one threshold.
struct SelectionResult {
  double threshold = 0.0;
  std::vector<InstanceId> retained_original_ids;  ///< Part 1: similarity >= threshold
  std::vector<InstanceId> included_modified_ids;  ///< Part 2: similarity < threshold
  Dataset refined;  ///< Part 1 originals + Part 2 modified, sorted by id, noisy labels
};

/// Splits pairs at tau: originals with similarity >= tau are kept as-is,
/// the rest are replaced by their modified features. `source` supplies C,
/// provenance and (when present) the evaluation-only true labels; every
/// pair id must exist in it.
SelectionResult select(std::span<const ModifiedPair> pairs, double tau, const Dataset& source);

/// Result of a full modify-then-select run plus its manifest entries.
struct PipelineRun {
  std::vector<ModifiedPair> pairs;
  SelectionResult selection;
  RunManifest manifest;
};

/// Synthetic-mode pipeline: modify with `prototypes`, then select.
PipelineRun run_pipeline(const Dataset& dataset, std::span<const Vector> prototypes,
                         const ModifierConfig& config, double tau);

/// External-mode pipeline: pair `dataset` with externally modified features, then select.
PipelineRun run_pipeline(const Dataset& dataset, const Dataset& modified, double tau);

struct SweepPoint {
  double tau = 0.0;
  std::size_t num_part1 = 0;
  double part1_clean_fraction = 0.0;  ///< NaN when Part 1 is empty
};

struct SweepCurve {
  std::vector<SweepPoint> points;  ///< tau ascending
};

/// `count` thresholds spaced uniformly on [0, 1] (101 by default).
std::vector<double> uniform_grid(std::size_t count = 101);

/// Part 1 size and clean fraction at each tau. `truth` must carry true
/// labels for every pair id; `tau_grid` must be ascending.
SweepCurve sweep(std::span<const ModifiedPair> pairs, std::span<const double> tau_grid,
                 const Dataset& truth);

/// Similarities split by clean/noisy ground truth.
struct SimilaritySplit {
  std::vector<double> clean;
  std::vector<double> noisy;
};
SimilaritySplit split_similarities(std::span<const ModifiedPair> pairs, const Dataset& truth);

// CSV emitters.
std::string format_sweep_csv(const SweepCurve& curve);  // tau,num_selected,clean_fraction
std::string format_selection_csv(const SelectionResult& result, const Dataset& source);  // id,part,label
/// bin_lo,bin_hi,clean,noisy over [-1, 1] in `bins` equal bins.
std::string format_similarity_histogram(const SimilaritySplit& split, std::size_t bins);

}  // namespace echoalign
