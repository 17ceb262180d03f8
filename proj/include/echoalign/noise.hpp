#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echoalign/dataset.hpp"
#include "echoalign/rng.hpp"

namespace echoalign {

enum class NoiseFamily { symmetric, pairflip, instance_dependent };

/// "symmetric" | "pairflip" | "idn" (also accepts "instance_dependent").
NoiseFamily parse_noise_family(std::string_view name);
std::string_view to_string(NoiseFamily family);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::symmetric;
  double rate = 0.0;  ///< target flip fraction, in [0, 1)
  std::uint64_t seed = 0;
  double idn_std = 0.1;  ///< std of the per-instance flip-rate draw (IDN only)

  void validate() const;
};

// All injectors take a dataset with true labels and return a copy whose
// noisy labels are redrawn from the true labels. Ids, features, true labels,
// ordering, C and D are preserved. Each instance uses its own random stream
// keyed by (seed, id).

/// With probability rate, relabel uniformly among the C-1 other classes.
Dataset inject_symmetric(const Dataset& dataset, const NoiseSpec& spec);

/// With probability rate, relabel c -> (c + 1) mod C.
Dataset inject_pairflip(const Dataset& dataset, const NoiseSpec& spec);

/// Feature-dependent flips; see idn_flip_distribution.
Dataset inject_instance_dependent(const Dataset& dataset, const NoiseSpec& spec);

/// Dispatches on spec.family.
Dataset inject_noise(const Dataset& dataset, const NoiseSpec& spec);

/// D x C Gaussian projection used to score flip targets, row-major
/// (weights[d * C + c]). Fixed by the noise seed.
struct IdnProjection {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> weights;
};

IdnProjection make_idn_projection(std::size_t dim, std::size_t classes, std::uint64_t seed);

/// Label distribution for one instance: scores = features . W, the true
/// class masked out, the rest softmaxed and scaled to sum to flip_rate;
/// the true class gets 1 - flip_rate.
std::vector<double> idn_flip_distribution(std::span<const double> features, ClassIndex true_label,
                                          double flip_rate, const IdnProjection& projection);

/// Normal(mean, std) conditioned on [lo, hi], by rejection.
double draw_truncated_normal(Stream& stream, double mean, double std, double lo, double hi);

}  // namespace echoalign
