#include "echoalign/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "echoalign/errors.hpp"
#include "echoalign/manifest.hpp"
#include "echoalign/rng.hpp"
#include "echoalign/selection.hpp"

namespace echoalign {

// ---------------------------------------------------------------------------
// Discrete information measures

double entropy_discrete(std::span<const std::size_t> assignments) {
  if (assignments.empty()) throw DomainError("entropy of an empty sequence");
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t a : assignments) ++counts[a];
  const double n = static_cast<double>(assignments.size());
  double h = 0.0;
  for (const auto& [value, count] : counts) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information_discrete(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) {
    throw MismatchError("assignment lengths differ: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  if (a.empty()) throw DomainError("mutual information of empty sequences");
  std::map<std::size_t, std::size_t> count_a, count_b;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++count_a[a[i]];
    ++count_b[b[i]];
    ++joint[{a[i], b[i]}];
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& [key, count] : joint) {
    const double nab = static_cast<double>(count);
    const double na = static_cast<double>(count_a[key.first]);
    const double nb = static_cast<double>(count_b[key.second]);
    mi += (nab / n) * std::log(nab * n / (na * nb));
  }
  return std::max(0.0, mi);
}

ClassIndex nearest_prototype(std::span<const double> features, std::span<const Vector> prototypes) {
  if (prototypes.empty()) throw DomainError("no prototypes");
  ClassIndex best = 0;
  double best_score = dot(features, prototypes[0]);
  for (std::size_t c = 1; c < prototypes.size(); ++c) {
    const double s = dot(features, prototypes[c]);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

namespace {

struct ClassificationRun {
  World world;
  Dataset noisy;
  std::vector<ModifiedPair> pairs;
};

ClassificationRun run_classification_world(const SynthWorldSpec& world_spec, const NoiseSpec& noise,
                                           const ModifierConfig& modifier) {
  World world = generate_world(world_spec);
  Dataset noisy = inject_noise(world.dataset, noise);
  auto pairs = modify(noisy, world.prototypes, modifier);
  return ClassificationRun{std::move(world), std::move(noisy), std::move(pairs)};
}

AlignmentMeasurement measure_alignment(const ClassificationRun& run) {
  const std::size_t n = run.pairs.size();
  std::vector<std::size_t> labels(n), q_original(n), q_modified(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = run.pairs[i].noisy_label;
    q_original[i] = nearest_prototype(run.pairs[i].original, run.world.prototypes);
    q_modified[i] = nearest_prototype(run.pairs[i].modified, run.world.prototypes);
  }
  return AlignmentMeasurement{mutual_information_discrete(q_original, labels),
                              mutual_information_discrete(q_modified, labels)};
}

}  // namespace

AlignmentMeasurement verify_alignment(const SynthWorldSpec& world, const NoiseSpec& noise,
                                      const ModifierConfig& modifier) {
  return measure_alignment(run_classification_world(world, noise, modifier));
}

// ---------------------------------------------------------------------------
// Linear world

void LinearWorldSpec::validate() const {
  if (dim < 1) throw DomainError("linear world needs dim >= 1");
  if (num_samples <= dim) throw DomainError("linear world needs num_samples > dim");
  if (coefficients.size() != dim) throw DomainError("coefficient vector length != dim");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw DomainError("noise_std must be >= 0");
  if (!(alignment_gain >= 0.0) || !std::isfinite(alignment_gain)) throw DomainError("alignment_gain must be >= 0");
  if (norm(coefficients) == 0.0) throw DomainError("coefficient vector must be nonzero");
}

std::vector<std::size_t> LinearWorldSpec::signal_coordinates() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    if (coefficients[j] != 0.0) out.push_back(j);
  }
  return out;
}

LinearWorld build_linear_world(const LinearWorldSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_samples;
  const std::size_t D = spec.dim;
  const Eigen::Map<const Eigen::VectorXd> beta(spec.coefficients.data(), static_cast<Eigen::Index>(D));
  const double beta_sq = beta.squaredNorm();
  const double shrink = 1.0 / (1.0 + spec.alignment_gain);
  const double pull = spec.alignment_gain / (1.0 + spec.alignment_gain);

  auto draw = [&](std::size_t first_row, Eigen::MatrixXd& x, Eigen::MatrixXd& aligned, Eigen::VectorXd& y) {
    x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D));
    y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      Stream s(spec.seed, "linear.world", first_row + i);
      for (std::size_t j = 0; j < D; ++j) x(i, j) = s.normal();
      y(i) = x.row(i).dot(beta) + spec.noise_std * s.normal();
    }
    aligned = x;
    for (std::size_t i = 0; i < n; ++i) {
      const double fitted = x.row(i).dot(beta);
      const double shift = pull * (y(i) - fitted) / beta_sq;
      for (std::size_t j = 0; j < D; ++j) {
        if (spec.coefficients[j] == 0.0) {
          aligned(i, j) *= shrink;
        } else {
          aligned(i, j) += shift * spec.coefficients[j];
        }
      }
    }
  };

  LinearWorld w;
  draw(0, w.x_train, w.x_train_aligned, w.y_train);
  draw(n, w.x_test, w.x_test_aligned, w.y_test);
  w.signal = spec.signal_coordinates();
  return w;
}

namespace {

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full_rank_qr(const Eigen::MatrixXd& x) {
  if (x.rows() <= x.cols()) {
    throw DomainError("least squares needs more rows than columns (" + std::to_string(x.rows()) + " <= " +
                      std::to_string(x.cols()) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    throw SingularMatrixError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                              std::to_string(x.cols()) + ")");
  }
  return qr;
}

Eigen::MatrixXd inverse_gram(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
  const Eigen::Index d = qr.cols();
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::MatrixXd g = r_inv * r_inv.transpose();
  return qr.colsPermutation() * g * qr.colsPermutation().transpose();
}

std::vector<std::size_t> all_coords(std::size_t d) {
  std::vector<std::size_t> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = j;
  return out;
}

}  // namespace

Eigen::VectorXd ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw MismatchError("design rows != target length");
  return full_rank_qr(x).solve(y);
}

double prediction_error(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() != beta.size() || x.rows() != y.size()) throw MismatchError("prediction_error shape mismatch");
  if (y.size() == 0) throw DomainError("prediction_error on empty data");
  return (y - x * beta).squaredNorm() / static_cast<double>(y.size());
}

ErrorComparison verify_error_reduction(const LinearWorldSpec& spec) {
  const LinearWorld w = build_linear_world(spec);
  const Eigen::VectorXd b_orig = ols_fit(w.x_train, w.y_train);
  const Eigen::VectorXd b_mod = ols_fit(w.x_train_aligned, w.y_train);
  return ErrorComparison{prediction_error(b_orig, w.x_test, w.y_test),
                         prediction_error(b_mod, w.x_test_aligned, w.y_test)};
}

double ols_variance_trace(const Eigen::MatrixXd& x, double sigma, std::span<const std::size_t> coords) {
  const Eigen::MatrixXd inv = inverse_gram(full_rank_qr(x));
  const auto all = all_coords(static_cast<std::size_t>(x.cols()));
  if (coords.empty()) coords = all;
  double trace = 0.0;
  for (std::size_t j : coords) trace += inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
  return sigma * sigma * trace;
}

double bootstrap_variance_trace(const Eigen::MatrixXd& x, double sigma, std::span<const std::size_t> coords,
                                std::size_t resamples, std::uint64_t seed) {
  if (resamples < 2) throw DomainError("bootstrap needs at least 2 resamples");
  const auto qr = full_rank_qr(x);
  const auto all = all_coords(static_cast<std::size_t>(x.cols()));
  if (coords.empty()) coords = all;
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(resamples), static_cast<Eigen::Index>(coords.size()));
  Eigen::VectorXd eps(n);
  for (std::size_t r = 0; r < resamples; ++r) {
    Stream s(seed, "bootstrap", r);
    for (Eigen::Index i = 0; i < n; ++i) eps(i) = sigma * s.normal();
    const Eigen::VectorXd b = qr.solve(eps);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = b(static_cast<Eigen::Index>(coords[k]));
    }
  }
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  return centered.squaredNorm() / static_cast<double>(resamples - 1);
}

VarianceComparison verify_estimator_variance(const LinearWorldSpec& spec, std::size_t resamples) {
  const LinearWorld w = build_linear_world(spec);
  const double sigma = spec.noise_std;
  VarianceComparison out;
  out.var_original = ols_variance_trace(w.x_train, sigma, w.signal);
  out.var_modified = ols_variance_trace(w.x_train_aligned, sigma, w.signal);
  out.bootstrap_original = bootstrap_variance_trace(w.x_train, sigma, w.signal, resamples, spec.seed);
  out.bootstrap_modified = bootstrap_variance_trace(w.x_train_aligned, sigma, w.signal, resamples, spec.seed);
  return out;
}

RademacherEstimate rademacher_estimate(const Eigen::MatrixXd& x, double norm_bound, std::size_t draws,
                                       std::uint64_t seed) {
  if (draws < 1) throw DomainError("rademacher estimate needs at least one draw");
  if (x.rows() == 0) throw DomainError("rademacher estimate on an empty sample");
  const double scale = norm_bound / static_cast<double>(x.rows());
  std::vector<double> values(draws);
  Eigen::RowVectorXd sum(x.cols());
  for (std::size_t k = 0; k < draws; ++k) {
    Stream s(seed, "rademacher", k);
    sum.setZero();
    for (Eigen::Index i = 0; i < x.rows(); ++i) sum += static_cast<double>(s.sign()) * x.row(i);
    values[k] = scale * sum.norm();
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(draws);
  double se = 0.0;
  if (draws > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / static_cast<double>(draws - 1) / static_cast<double>(draws));
  }
  return RademacherEstimate{mean, se};
}

RademacherComparison verify_generalization(const LinearWorldSpec& spec, double norm_bound, std::size_t draws) {
  const LinearWorld w = build_linear_world(spec);
  return RademacherComparison{rademacher_estimate(w.x_train, norm_bound, draws, spec.seed),
                              rademacher_estimate(w.x_train_aligned, norm_bound, draws, spec.seed)};
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form, converges fast for small lambda.
    const double a = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(a * odd * odd);
      sum += term;
      if (term < 1e-18) break;
    }
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS test needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double n = static_cast<double>(sa.size());
  const double m = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return KsResult{d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

// ---------------------------------------------------------------------------
// Combined report

TheoryReport run_theory_suite(const TheorySpec& spec) {
  TheoryReport r;
  const ClassificationRun run = run_classification_world(spec.world, spec.noise, spec.modifier);
  const AlignmentMeasurement mi = measure_alignment(run);
  r.mi_original = mi.mi_original;
  r.mi_modified = mi.mi_modified;

  const SimilaritySplit split = split_similarities(run.pairs, run.noisy);
  if (!split.clean.empty() && !split.noisy.empty()) {
    const KsResult ks = ks_two_sample(split.clean, split.noisy);
    r.ks_statistic = ks.statistic;
    r.ks_pvalue = ks.p_value;
  }

  const ErrorComparison err = verify_error_reduction(spec.linear);
  r.err_original = err.err_original;
  r.err_modified = err.err_modified;

  const VarianceComparison var = verify_estimator_variance(spec.linear, spec.bootstrap_resamples);
  r.var_original = var.var_original;
  r.var_modified = var.var_modified;
  r.var_bootstrap_original = var.bootstrap_original;
  r.var_bootstrap_modified = var.bootstrap_modified;

  const RademacherComparison rad = verify_generalization(spec.linear, spec.rademacher_bound, spec.rademacher_draws);
  r.rad_original = rad.original.value;
  r.rad_modified = rad.modified.value;
  return r;
}

std::string format_theory_report(const TheoryReport& r) {
  std::string out;
  auto line = [&](const char* key, double v) { out += std::string(key) + "=" + format_double(v) + "\n"; };
  line("mi_original", r.mi_original);
  line("mi_modified", r.mi_modified);
  line("err_original", r.err_original);
  line("err_modified", r.err_modified);
  line("var_original", r.var_original);
  line("var_modified", r.var_modified);
  line("var_bootstrap_original", r.var_bootstrap_original);
  line("var_bootstrap_modified", r.var_bootstrap_modified);
  line("rad_original", r.rad_original);
  line("rad_modified", r.rad_modified);
  line("ks_statistic", r.ks_statistic);
  line("ks_pvalue", r.ks_pvalue);
  return out;
}

}  // namespace echoalign
