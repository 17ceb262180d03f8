#include <doctest.h>

#include <cmath>
#include <numeric>

#include "echoalign/errors.hpp"
#include "echoalign/theory.hpp"
#include "oracles/checks.hpp"
#include "oracles/oracles.hpp"

using namespace echoalign;

namespace {

void expect(const checks::Check& c) {
  INFO(c.name << ": " << c.detail);
  CHECK(c.pass);
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Stream s(seed, "test.gaussian");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = s.normal();
  return m;
}

LinearWorldSpec small_linear(double gain, double sigma, std::uint64_t seed) {
  return LinearWorldSpec{4, 60, {1.0, -0.5, 0.0, 0.0}, sigma, gain, seed};
}

}  // namespace

// ---------------------------------------------------------------------------
// information measures

TEST_CASE("entropy and mutual information examples") {
  const std::vector<std::size_t> uniform4{0, 1, 2, 3, 0, 1, 2, 3};
  CHECK(entropy_discrete(uniform4) == doctest::Approx(std::log(4.0)));
  CHECK(entropy_discrete(std::vector<std::size_t>{5, 5, 5}) == 0.0);
  CHECK(mutual_information_discrete(uniform4, uniform4) == doctest::Approx(std::log(4.0)));
  const std::vector<std::size_t> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(mutual_information_discrete(a, b) == 0.0);
  CHECK_THROWS_AS(mutual_information_discrete(a, std::vector<std::size_t>{0}), MismatchError);
  CHECK_THROWS_AS(mutual_information_discrete(std::vector<std::size_t>{}, std::vector<std::size_t>{}), DomainError);
  expect(checks::mi_identical_uniform());
  expect(checks::mi_independent());
}

TEST_CASE("mutual information properties against a contingency oracle") {
  Stream s(8, "test.mi");
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + s.below(300), ka = 1 + s.below(6), kb = 1 + s.below(6);
    std::vector<std::size_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = s.below(ka);
      b[i] = s.below(2) ? a[i] % kb : s.below(kb);
    }
    const double mi = mutual_information_discrete(a, b);
    CHECK(mi >= 0.0);
    CHECK(mi == doctest::Approx(mutual_information_discrete(b, a)).epsilon(1e-12));
    CHECK(mi == doctest::Approx(oracle::contingency_mi(a, b)).epsilon(1e-9).scale(1.0));
    CHECK(mi <= std::min(entropy_discrete(a), entropy_discrete(b)) + 1e-12);
    CHECK(entropy_discrete(a) == doctest::Approx(oracle::plugin_entropy(a)).epsilon(1e-12));
  }
}

TEST_CASE("nearest prototype breaks ties low") {
  const std::vector<Vector> protos{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
  CHECK(nearest_prototype(Vector{0.9, 0.1}, protos) == 0);
  CHECK(nearest_prototype(Vector{0.1, 0.9}, protos) == 1);
  CHECK(nearest_prototype(Vector{1.0, 1.0}, protos) == 0);
}

TEST_CASE("full pull makes the modified features carry the whole label entropy") {
  const SynthWorldSpec world{5, 16, 0.8, 0.1, 200, 3};
  const NoiseSpec noise{NoiseFamily::symmetric, 0.4, 3};
  const AlignmentMeasurement m = verify_alignment(world, noise, ModifierConfig{1.0, 0.0, 3});
  const Dataset noisy = inject_noise(generate_world(world).dataset, noise);
  std::vector<std::size_t> labels;
  for (const auto& inst : noisy.instances()) labels.push_back(inst.noisy_label);
  CHECK(m.mi_modified == doctest::Approx(oracle::plugin_entropy(labels)).epsilon(1e-12));
  CHECK(m.mi_original < m.mi_modified);
}

TEST_CASE("alignment checks") {
  expect(checks::alignment_noise_free());
  expect(checks::alignment_idn50());
}

// ---------------------------------------------------------------------------
// linear world and OLS

TEST_CASE("linear spec validation") {
  CHECK_THROWS_AS(LinearWorldSpec({4, 4, {1, 0, 0, 0}, 0.5, 1.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(LinearWorldSpec({4, 10, {1, 0, 0}, 0.5, 1.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(LinearWorldSpec({4, 10, {1, 0, 0, 0}, -0.5, 1.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(LinearWorldSpec({4, 10, {1, 0, 0, 0}, 0.5, -1.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(LinearWorldSpec({4, 10, {0, 0, 0, 0}, 0.5, 1.0, 0}).validate(), DomainError);
  CHECK(LinearWorldSpec({4, 10, {1, 0, -2, 0}, 0.5, 1.0, 0}).signal_coordinates() == std::vector<std::size_t>{0, 2});
}

TEST_CASE("ols examples") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 2, 4, 6;
  CHECK(ols_fit(x, y)(0) == doctest::Approx(2.0).epsilon(1e-14));

  Eigen::MatrixXd x2(4, 2);
  x2 << 1, 0, 0, 1, 1, 1, 1, -1;
  Eigen::VectorXd y2(4);
  y2 << 1, 2, 3, 0;
  const Eigen::VectorXd b = ols_fit(x2, y2);
  const auto ref = oracle::normal_equation_ols(x2, y2);
  CHECK(b(0) == doctest::Approx(ref[0]).epsilon(1e-12));
  CHECK(b(1) == doctest::Approx(ref[1]).epsilon(1e-12));
  CHECK(prediction_error(b, x2, y2) >= 0.0);
  expect(checks::ols_matches_normal_equations());
}

TEST_CASE("ols rejects singular and underdetermined designs") {
  Eigen::MatrixXd dup(5, 2);
  dup << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  CHECK_THROWS_AS(ols_fit(dup, Eigen::VectorXd::Ones(5)), SingularMatrixError);
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)), DomainError);
  CHECK_THROWS_AS(ols_fit(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(4)), MismatchError);
}

TEST_CASE("ols is invariant to row permutation") {
  const Eigen::MatrixXd x = gaussian(40, 5, 1);
  const Eigen::VectorXd y = gaussian(40, 1, 2).col(0);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(40);
  perm.setIdentity();
  Stream s(3, "test.perm");
  for (int i = 39; i > 0; --i) std::swap(perm.indices()(i), perm.indices()(static_cast<int>(s.below(i + 1))));
  const Eigen::VectorXd a = ols_fit(x, y), b = ols_fit(perm * x, perm * y);
  CHECK((a - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("linear world shapes and the zero-gain identity") {
  const LinearWorld w = build_linear_world(small_linear(0.0, 0.5, 4));
  CHECK(w.x_train.rows() == 60);
  CHECK(w.x_test.rows() == 60);
  CHECK(w.x_train.cols() == 4);
  CHECK(w.x_train == w.x_train_aligned);
  CHECK(w.x_test == w.x_test_aligned);
  CHECK(w.signal == std::vector<std::size_t>{0, 1});
  const ErrorComparison e = verify_error_reduction(small_linear(0.0, 0.5, 4));
  CHECK(e.err_original == e.err_modified);
  const VarianceComparison v = verify_estimator_variance(small_linear(0.0, 0.5, 4), 20);
  CHECK(v.var_original == v.var_modified);
}

TEST_CASE("noise-free targets are fit exactly") {
  for (double gain : {0.0, 3.0}) {
    const ErrorComparison e = verify_error_reduction(small_linear(gain, 0.0, 6));
    CHECK(e.err_original <= 1e-10);
    CHECK(e.err_modified <= 1e-10);
  }
}

TEST_CASE("error reduction replicates") { expect(checks::error_reduction_replicates()); }

TEST_CASE("variance trace") {
  const Eigen::MatrixXd x = gaussian(30, 4, 9);
  const std::vector<std::size_t> all{0, 1, 2, 3}, some{1, 3};
  CHECK(ols_variance_trace(x, 0.7) == doctest::Approx(oracle::variance_trace(x, 0.7, all)).epsilon(1e-10));
  CHECK(ols_variance_trace(x, 0.7, some) == doctest::Approx(oracle::variance_trace(x, 0.7, some)).epsilon(1e-10));
  CHECK(ols_variance_trace(x, 0.0) == 0.0);
  expect(checks::variance_scaled_orthonormal());
  expect(checks::variance_signal_block());
}

TEST_CASE("bootstrap tracks the analytic variance") {
  const Eigen::MatrixXd x = gaussian(80, 4, 10);
  const std::vector<std::size_t> coords{0, 1};
  const double analytic = ols_variance_trace(x, 0.5, coords);
  const double boot = bootstrap_variance_trace(x, 0.5, coords, 2000, 1);
  CHECK(std::abs(boot - analytic) / analytic <= 0.15);
  CHECK(boot == bootstrap_variance_trace(x, 0.5, coords, 2000, 1));
  CHECK_THROWS_AS(bootstrap_variance_trace(x, 0.5, coords, 1, 1), DomainError);
}

TEST_CASE("alignment reduces variance on the committed linear world") {
  const VarianceComparison v = verify_estimator_variance(checks::committed_linear(5));
  CHECK(v.var_modified < v.var_original);
  CHECK(std::abs(v.bootstrap_original - v.var_original) / v.var_original <= 0.15);
  CHECK(std::abs(v.bootstrap_modified - v.var_modified) / v.var_modified <= 0.15);
}

// ---------------------------------------------------------------------------
// Rademacher

TEST_CASE("rademacher estimate") {
  const RademacherEstimate z = rademacher_estimate(Eigen::MatrixXd::Zero(20, 3), 1.0, 50, 1);
  CHECK(z.value == 0.0);
  CHECK(z.standard_error == 0.0);

  const Eigen::MatrixXd x = gaussian(50, 4, 11);
  const RademacherEstimate r = rademacher_estimate(x, 2.0, 100, 1);
  CHECK(r.value > 0.0);
  CHECK(r.standard_error > 0.0);
  CHECK(rademacher_estimate(x, 1.0, 100, 1).value == doctest::Approx(r.value / 2.0).epsilon(1e-12));
  // shrinking every row shrinks the estimate under shared signs
  double prev = r.value;
  for (double k : {0.8, 0.5, 0.1}) {
    const double v = rademacher_estimate(k * x, 2.0, 100, 1).value;
    CHECK(v < prev);
    CHECK(v == doctest::Approx(k * r.value).epsilon(1e-12));
    prev = v;
  }
  expect(checks::rademacher_orthonormal_rows());
  expect(checks::rademacher_aligned_vs_original());
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

TEST_CASE("kolmogorov survival matches reference values") {
  struct Ref {
    double lambda, q;
  };
  for (const Ref r : {Ref{0.3, 0.9999906941986655}, Ref{0.5, 0.9639452436648751}, Ref{1.0, 0.26999967167735456},
                      Ref{1.18, 0.1234538094297657}, Ref{1.36, 0.049485876755377876},
                      Ref{2.0, 0.0006709252557796953}, Ref{3.0, 3.045995948942526e-08}}) {
    INFO("lambda " << r.lambda);
    CHECK(kolmogorov_survival(r.lambda) == doctest::Approx(r.q).epsilon(1e-9));
  }
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(-1.0) == 1.0);
  CHECK(kolmogorov_survival(20.0) == 0.0);
  // both series agree near the switch
  CHECK(kolmogorov_survival(1.1799999) == doctest::Approx(kolmogorov_survival(1.18)).epsilon(1e-6));
}

TEST_CASE("ks two-sample examples") {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == 1.0);
  // ties across samples step together
  CHECK(ks_two_sample(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}).statistic == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(ks_two_sample(a, std::vector<double>{}), DomainError);
}

TEST_CASE("ks statistic matches brute force and is symmetric") {
  Stream s(12, "test.ks");
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(1 + s.below(60)), b(1 + s.below(60));
    for (auto& v : a) v = std::round(4.0 * s.normal()) / 4.0;  // plenty of ties
    for (auto& v : b) v = std::round(4.0 * s.normal() + s.uniform()) / 4.0;
    const KsResult ab = ks_two_sample(a, b), ba = ks_two_sample(b, a);
    CHECK(ab.statistic == doctest::Approx(oracle::ks_distance_bruteforce(a, b)).epsilon(1e-12));
    CHECK(ab.statistic == ba.statistic);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
  expect(checks::ks_shifted_normals());
}

// ---------------------------------------------------------------------------
// report

TEST_CASE("theory report format") {
  TheoryReport r;
  r.mi_original = 0.5;
  r.ks_pvalue = 1e-300;
  CHECK(format_theory_report(r) ==
        "mi_original=0.5\nmi_modified=0\nerr_original=0\nerr_modified=0\nvar_original=0\nvar_modified=0\n"
        "var_bootstrap_original=0\nvar_bootstrap_modified=0\nrad_original=0\nrad_modified=0\n"
        "ks_statistic=0\nks_pvalue=1e-300\n");
}

TEST_CASE("theory suite on the committed spec") {
  TheorySpec spec = checks::committed_theory();
  spec.rademacher_draws = 50;
  spec.bootstrap_resamples = 50;
  const TheoryReport r = run_theory_suite(spec);
  CHECK(r.mi_modified > r.mi_original);
  CHECK(r.err_modified < r.err_original);
  CHECK(r.var_modified < r.var_original);
  CHECK(r.rad_modified < r.rad_original);
  CHECK(r.ks_statistic > 0.0);
  CHECK(r.ks_pvalue < 0.01);
  CHECK(format_theory_report(r) == format_theory_report(run_theory_suite(spec)));
}
