#include "echoalign/noise.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "echoalign/errors.hpp"
#include "echoalign/parallel.hpp"

namespace echoalign {

NoiseFamily parse_noise_family(std::string_view name) {
  if (name == "symmetric") return NoiseFamily::symmetric;
  if (name == "pairflip") return NoiseFamily::pairflip;
  if (name == "idn" || name == "instance_dependent") return NoiseFamily::instance_dependent;
  throw DomainError("unknown noise family '" + std::string(name) + "'");
}

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::symmetric:
      return "symmetric";
    case NoiseFamily::pairflip:
      return "pairflip";
    case NoiseFamily::instance_dependent:
      return "idn";
  }
  return "unknown";
}

void NoiseSpec::validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("noise rate must be in [0, 1)");
  if (!(idn_std > 0.0) || !std::isfinite(idn_std)) throw DomainError("idn_std must be > 0");
}

namespace {

void check_input(const Dataset& dataset, const NoiseSpec& spec, NoiseFamily expected) {
  spec.validate();
  if (spec.family != expected) throw DomainError("noise spec family does not match injector");
  if (dataset.num_classes() < 2) throw DomainError("noise injection needs C >= 2");
  if (!dataset.with_truth()) throw DomainError("noise injection needs true labels");
}

std::string corrupted_provenance(const Dataset& dataset, const NoiseSpec& spec) {
  std::ostringstream os;
  if (!dataset.provenance().empty()) os << dataset.provenance() << " | ";
  os << "corrupt family=" << to_string(spec.family) << " rate=" << spec.rate << " seed=" << spec.seed;
  if (spec.family == NoiseFamily::instance_dependent) os << " idn_std=" << spec.idn_std;
  return os.str();
}

// Applies relabel(instance, stream) -> new noisy label to every instance.
template <class Relabel>
Dataset relabel_all(const Dataset& dataset, const NoiseSpec& spec, std::string_view purpose,
                    Relabel&& relabel) {
  std::vector<LabeledInstance> out(dataset.instances().begin(), dataset.instances().end());
  parallel_for(out.size(), [&](std::size_t i) {
    Stream s(spec.seed, purpose, out[i].id);
    out[i].noisy_label = relabel(out[i], s);
  });
  return Dataset(dataset.num_classes(), dataset.dim(), true, std::move(out),
                 corrupted_provenance(dataset, spec));
}

}  // namespace

Dataset inject_symmetric(const Dataset& dataset, const NoiseSpec& spec) {
  check_input(dataset, spec, NoiseFamily::symmetric);
  const std::size_t C = dataset.num_classes();
  return relabel_all(dataset, spec, "noise.symmetric", [&](const LabeledInstance& inst, Stream& s) {
    const ClassIndex truth = *inst.true_label;
    if (!(s.uniform() < spec.rate)) return truth;
    const ClassIndex k = s.below(C - 1);
    return k < truth ? k : k + 1;
  });
}

Dataset inject_pairflip(const Dataset& dataset, const NoiseSpec& spec) {
  check_input(dataset, spec, NoiseFamily::pairflip);
  const std::size_t C = dataset.num_classes();
  return relabel_all(dataset, spec, "noise.pairflip", [&](const LabeledInstance& inst, Stream& s) {
    const ClassIndex truth = *inst.true_label;
    return s.uniform() < spec.rate ? (truth + 1) % C : truth;
  });
}

IdnProjection make_idn_projection(std::size_t dim, std::size_t classes, std::uint64_t seed) {
  IdnProjection p{dim, classes, std::vector<double>(dim * classes)};
  Stream s(seed, "noise.idn.projection", 0);
  for (double& w : p.weights) w = s.normal();
  return p;
}

std::vector<double> idn_flip_distribution(std::span<const double> features, ClassIndex true_label,
                                          double flip_rate, const IdnProjection& projection) {
  const std::size_t C = projection.classes;
  if (features.size() != projection.dim) throw MismatchError("feature length != projection dim");
  if (true_label >= C) throw DomainError("true label out of range");
  std::vector<double> scores(C, 0.0);
  for (std::size_t d = 0; d < projection.dim; ++d) {
    const double x = features[d];
    const double* row = projection.weights.data() + d * C;
    for (std::size_t c = 0; c < C; ++c) scores[c] += x * row[c];
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < C; ++c) {
    if (c != true_label) top = std::max(top, scores[c]);
  }
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    scores[c] = c == true_label ? 0.0 : std::exp(scores[c] - top);
    total += scores[c];
  }
  for (std::size_t c = 0; c < C; ++c) scores[c] *= flip_rate / total;
  scores[true_label] = 1.0 - flip_rate;
  return scores;
}

double draw_truncated_normal(Stream& stream, double mean, double std, double lo, double hi) {
  constexpr int kMaxTries = 100000;
  for (int i = 0; i < kMaxTries; ++i) {
    const double v = mean + std * stream.normal();
    if (v >= lo && v <= hi) return v;
  }
  throw DomainError("truncated normal has negligible mass on its support");
}

Dataset inject_instance_dependent(const Dataset& dataset, const NoiseSpec& spec) {
  check_input(dataset, spec, NoiseFamily::instance_dependent);
  const IdnProjection projection = make_idn_projection(dataset.dim(), dataset.num_classes(), spec.seed);
  return relabel_all(dataset, spec, "noise.idn", [&](const LabeledInstance& inst, Stream& s) {
    const double q = draw_truncated_normal(s, spec.rate, spec.idn_std, 0.0, 1.0);
    const auto probs = idn_flip_distribution(inst.features, *inst.true_label, q, projection);
    const double u = s.uniform();
    double cumulative = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      cumulative += probs[c];
      if (u < cumulative) return c;
    }
    return *inst.true_label;  // u landed in the rounding gap above the last bucket
  });
}

Dataset inject_noise(const Dataset& dataset, const NoiseSpec& spec) {
  switch (spec.family) {
    case NoiseFamily::symmetric:
      return inject_symmetric(dataset, spec);
    case NoiseFamily::pairflip:
      return inject_pairflip(dataset, spec);
    case NoiseFamily::instance_dependent:
      return inject_instance_dependent(dataset, spec);
  }
  throw DomainError("unknown noise family");
}

}  // namespace echoalign
