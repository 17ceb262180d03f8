#include "echoalign/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "echoalign/errors.hpp"

namespace echoalign {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("cosine similarity of vectors with different lengths");
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("cosine similarity undefined for a zero-norm vector");
  if (!std::isfinite(na) || !std::isfinite(nb)) throw DomainError("cosine similarity of non-finite vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

SelectionResult select(std::span<const ModifiedPair> pairs, double tau, const Dataset& source) {
  if (!std::isfinite(tau)) throw DomainError("threshold must be finite");
  SelectionResult result{tau, {}, {}, Dataset(source.num_classes(), source.dim(), source.with_truth(), {})};
  std::vector<LabeledInstance> rows;
  rows.reserve(pairs.size());
  for (const ModifiedPair& p : pairs) {
    const auto pos = source.find(p.id);
    if (!pos) throw MismatchError("id " + std::to_string(p.id) + " not found in source dataset");
    const LabeledInstance& src = source[*pos];
    const bool keep_original = p.similarity >= tau;
    (keep_original ? result.retained_original_ids : result.included_modified_ids).push_back(p.id);
    rows.push_back(LabeledInstance{p.id, keep_original ? p.original : p.modified, p.noisy_label,
                                   src.true_label});
  }
  std::sort(result.retained_original_ids.begin(), result.retained_original_ids.end());
  std::sort(result.included_modified_ids.begin(), result.included_modified_ids.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  result.refined = Dataset(source.num_classes(), source.dim(), source.with_truth(), std::move(rows),
                           source.provenance());
  return result;
}

namespace {

void record_selection(RunManifest& m, const SelectionResult& s, std::size_t n) {
  m.add("tau", s.threshold);
  m.add("count.total", static_cast<std::uint64_t>(n));
  m.add("count.part1_original", static_cast<std::uint64_t>(s.retained_original_ids.size()));
  m.add("count.part2_modified", static_cast<std::uint64_t>(s.included_modified_ids.size()));
}

}  // namespace

PipelineRun run_pipeline(const Dataset& dataset, std::span<const Vector> prototypes,
                         const ModifierConfig& config, double tau) {
  auto pairs = modify(dataset, prototypes, config);
  auto selection = select(pairs, tau, dataset);
  PipelineRun run{std::move(pairs), std::move(selection), {}};
  run.manifest.add("mode", std::string("synthetic"));
  run.manifest.add("source.provenance", dataset.provenance());
  run.manifest.add("modifier.lambda", config.pull_strength);
  run.manifest.add("modifier.residual_std", config.residual_std);
  run.manifest.add("modifier.seed", config.seed);
  record_selection(run.manifest, run.selection, dataset.size());
  return run;
}

PipelineRun run_pipeline(const Dataset& dataset, const Dataset& modified, double tau) {
  auto pairs = pair_by_id(dataset, modified);
  auto selection = select(pairs, tau, dataset);
  PipelineRun run{std::move(pairs), std::move(selection), {}};
  run.manifest.add("mode", std::string("external"));
  run.manifest.add("source.provenance", dataset.provenance());
  run.manifest.add("modified.provenance", modified.provenance());
  record_selection(run.manifest, run.selection, dataset.size());
  return run;
}

std::vector<double> uniform_grid(std::size_t count) {
  if (count < 1) throw DomainError("grid needs at least one point");
  if (count == 1) return {0.0};
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

SimilaritySplit split_similarities(std::span<const ModifiedPair> pairs, const Dataset& truth) {
  if (!truth.with_truth()) throw DomainError("truth dataset must carry true labels");
  SimilaritySplit split;
  for (const ModifiedPair& p : pairs) {
    const auto pos = truth.find(p.id);
    if (!pos) throw MismatchError("id " + std::to_string(p.id) + " not found in truth dataset");
    const bool clean = p.noisy_label == *truth[*pos].true_label;
    (clean ? split.clean : split.noisy).push_back(p.similarity);
  }
  return split;
}

SweepCurve sweep(std::span<const ModifiedPair> pairs, std::span<const double> tau_grid,
                 const Dataset& truth) {
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) throw DomainError("tau grid must be ascending");
  SimilaritySplit split = split_similarities(pairs, truth);
  std::sort(split.clean.begin(), split.clean.end());
  std::sort(split.noisy.begin(), split.noisy.end());
  auto at_least = [](const std::vector<double>& sorted, double tau) {
    return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), tau));
  };
  SweepCurve curve;
  for (double tau : tau_grid) {
    const std::size_t clean = at_least(split.clean, tau);
    const std::size_t total = clean + at_least(split.noisy, tau);
    const double fraction = total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(clean) / static_cast<double>(total);
    curve.points.push_back(SweepPoint{tau, total, fraction});
  }
  return curve;
}

std::string format_sweep_csv(const SweepCurve& curve) {
  std::string out = "tau,num_selected,clean_fraction\n";
  for (const auto& p : curve.points) {
    out += format_double(p.tau) + "," + std::to_string(p.num_part1) + "," +
           (std::isnan(p.part1_clean_fraction) ? std::string("nan") : format_double(p.part1_clean_fraction)) +
           "\n";
  }
  return out;
}

std::string format_selection_csv(const SelectionResult& result, const Dataset& source) {
  std::string out = "id,part,label\n";
  auto emit = [&](const std::vector<InstanceId>& ids, const char* part) {
    for (InstanceId id : ids) {
      const auto pos = source.find(id);
      if (!pos) throw MismatchError("id " + std::to_string(id) + " not found in source dataset");
      out += std::to_string(id) + "," + part + "," + std::to_string(source[*pos].noisy_label) + "\n";
    }
  };
  emit(result.retained_original_ids, "original");
  emit(result.included_modified_ids, "modified");
  return out;
}

std::string format_similarity_histogram(const SimilaritySplit& split, std::size_t bins) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  std::vector<std::size_t> clean(bins, 0), noisy(bins, 0);
  auto bin_of = [&](double s) {
    const double scaled = (s + 1.0) / 2.0 * static_cast<double>(bins);
    return std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, scaled)));
  };
  for (double s : split.clean) ++clean[bin_of(s)];
  for (double s : split.noisy) ++noisy[bin_of(s)];
  std::string out = "bin_lo,bin_hi,clean,noisy\n";
  const double width = 2.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out += format_double(-1.0 + width * static_cast<double>(b)) + "," +
           format_double(-1.0 + width * static_cast<double>(b + 1)) + "," + std::to_string(clean[b]) +
           "," + std::to_string(noisy[b]) + "\n";
  }
  return out;
}

}  // namespace echoalign
