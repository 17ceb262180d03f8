#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "echoalign/dataset.hpp"
#include "echoalign/modifier.hpp"
#include "echoalign/noise.hpp"

namespace echoalign {

// ---------------------------------------------------------------------------
// Discrete information measures (plug-in, natural log)

double entropy_discrete(std::span<const std::size_t> assignments);

/// Plug-in mutual information of two equal-length assignment sequences, in
/// nats. Clamped at 0 against rounding. Throws MismatchError on length
/// mismatch and DomainError on empty input.
double mutual_information_discrete(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Index of the prototype with the largest dot product (ties: lowest index).
ClassIndex nearest_prototype(std::span<const double> features, std::span<const Vector> prototypes);

struct AlignmentMeasurement {
  double mi_original = 0.0;  ///< I(quantized X; noisy label)
  double mi_modified = 0.0;  ///< I(quantized X'; noisy label)
};

/// Generates the world, injects noise, modifies with the world's
/// prototypes, quantizes X and X' by nearest prototype and measures MI of
/// each against the noisy labels.
AlignmentMeasurement verify_alignment(const SynthWorldSpec& world, const NoiseSpec& noise,
                                      const ModifierConfig& modifier);

// ---------------------------------------------------------------------------
// Linear world

/// y = X beta + eps with X rows ~ N(0, I). Coordinates where beta is
/// nonzero are "signal", the rest "distractors".
struct LinearWorldSpec {
  std::size_t dim = 10;
  std::size_t num_samples = 500;  ///< training rows; an equal-size held-out set is drawn too
  Vector coefficients;            ///< true model, length dim
  double noise_std = 0.5;
  double alignment_gain = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<std::size_t> signal_coordinates() const;
};

/// Original and aligned design matrices for one linear world.
///
/// The aligned matrix X' is built from X and the observed targets:
///   distractor coordinates are shrunk by 1 / (1 + gain);
///   signal coordinates move along beta so that beta . x' moves a fraction
///   gain / (1 + gain) of the way from beta . x toward y.
/// gain = 0 gives X' == X; noise_std = 0 makes y = X beta so X' stays an
/// exact linear function of X.
struct LinearWorld {
  Eigen::MatrixXd x_train, x_train_aligned, x_test, x_test_aligned;
  Eigen::VectorXd y_train, y_test;
  std::vector<std::size_t> signal;
};

LinearWorld build_linear_world(const LinearWorldSpec& spec);

/// Least-squares coefficients via column-pivoting Householder QR. Requires
/// rows > cols; throws SingularMatrixError when the design is rank deficient.
Eigen::VectorXd ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Mean squared error of x * beta against y.
double prediction_error(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct ErrorComparison {
  double err_original = 0.0;
  double err_modified = 0.0;
};

/// OLS fit on the training rows of X and X', held-out MSE of each.
ErrorComparison verify_error_reduction(const LinearWorldSpec& spec);

/// sigma^2 * trace of (X^T X)^{-1} restricted to `coords` (all if empty).
double ols_variance_trace(const Eigen::MatrixXd& x, double sigma, std::span<const std::size_t> coords = {});

/// Fixed-design parametric bootstrap of the same quantity: refit on
/// y* = eps*, eps* ~ N(0, sigma^2), and take the sample covariance trace of
/// the refitted coefficients over `coords`.
double bootstrap_variance_trace(const Eigen::MatrixXd& x, double sigma, std::span<const std::size_t> coords,
                                std::size_t resamples, std::uint64_t seed);

struct VarianceComparison {
  double var_original = 0.0;  ///< analytic, signal coordinates
  double var_modified = 0.0;
  double bootstrap_original = 0.0;  ///< 200-resample bootstrap, signal coordinates
  double bootstrap_modified = 0.0;
};

VarianceComparison verify_estimator_variance(const LinearWorldSpec& spec, std::size_t resamples = 200);

struct RademacherEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo empirical Rademacher complexity of {x -> w.x : ||w|| <= B}:
/// average over `draws` sign vectors of (B/n) * ||sum_i s_i x_i||. Draw k
/// uses stream ("rademacher", k) of `seed`, so equal seeds and row counts
/// share sign vectors across matrices.
RademacherEstimate rademacher_estimate(const Eigen::MatrixXd& x, double norm_bound, std::size_t draws,
                                       std::uint64_t seed);

struct RademacherComparison {
  RademacherEstimate original;
  RademacherEstimate modified;
};

/// Rademacher estimates of the training X and X' with shared sign draws.
RademacherComparison verify_generalization(const LinearWorldSpec& spec, double norm_bound, std::size_t draws);

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov

struct KsResult {
  double statistic = 0.0;  ///< sup |F_a - F_b|
  double p_value = 1.0;    ///< asymptotic, two-sided; approximate for small samples
};

/// Complementary CDF of the Kolmogorov distribution, Q(lambda).
double kolmogorov_survival(double lambda);

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Combined report

struct TheorySpec {
  SynthWorldSpec world;
  NoiseSpec noise;
  ModifierConfig modifier;
  LinearWorldSpec linear;
  double rademacher_bound = 1.0;
  std::size_t rademacher_draws = 200;
  std::size_t bootstrap_resamples = 200;
};

struct TheoryReport {
  double mi_original = 0.0, mi_modified = 0.0;
  double err_original = 0.0, err_modified = 0.0;
  double var_original = 0.0, var_modified = 0.0;
  double var_bootstrap_original = 0.0, var_bootstrap_modified = 0.0;
  double rad_original = 0.0, rad_modified = 0.0;
  double ks_statistic = 0.0, ks_pvalue = 1.0;
};

/// Runs every measurement; KS compares clean vs noisy pair similarities in
/// the classification world.
TheoryReport run_theory_suite(const TheorySpec& spec);

/// Flat key=value text, one measurement per line.
std::string format_theory_report(const TheoryReport& report);

}  // namespace echoalign
