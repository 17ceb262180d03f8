#include <doctest.h>

#include <cmath>
#include <numeric>

#include "echoalign/errors.hpp"
#include "echoalign/noise.hpp"
#include "echoalign/parallel.hpp"
#include "oracles/checks.hpp"

using namespace echoalign;

namespace {

Dataset world(std::size_t classes, std::size_t per_class, std::uint64_t seed = 1) {
  return generate_world(SynthWorldSpec{classes, 16, 0.8, 0.1, per_class, seed}).dataset;
}

void check_preserved(const Dataset& in, const Dataset& out) {
  REQUIRE(in.size() == out.size());
  CHECK(in.num_classes() == out.num_classes());
  CHECK(in.dim() == out.dim());
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(in[i].id == out[i].id);
    CHECK(in[i].features == out[i].features);
    CHECK(in[i].true_label == out[i].true_label);
  }
}

}  // namespace

TEST_CASE("family names") {
  CHECK(parse_noise_family("symmetric") == NoiseFamily::symmetric);
  CHECK(parse_noise_family("pairflip") == NoiseFamily::pairflip);
  CHECK(parse_noise_family("idn") == NoiseFamily::instance_dependent);
  CHECK(parse_noise_family("instance_dependent") == NoiseFamily::instance_dependent);
  CHECK_THROWS_AS(parse_noise_family("asym"), DomainError);
  CHECK(to_string(NoiseFamily::instance_dependent) == "idn");
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(NoiseSpec({NoiseFamily::symmetric, 1.0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(NoiseSpec({NoiseFamily::symmetric, -0.1, 0}).validate(), DomainError);
  CHECK_THROWS_AS(NoiseSpec({NoiseFamily::symmetric, NAN, 0}).validate(), DomainError);
  CHECK_THROWS_AS(NoiseSpec({NoiseFamily::instance_dependent, 0.3, 0, 0.0}).validate(), DomainError);
}

TEST_CASE("injectors need true labels") {
  const Dataset no_truth(2, 1, false, {{0, {1.0}, 0, {}}});
  for (auto f : {NoiseFamily::symmetric, NoiseFamily::pairflip, NoiseFamily::instance_dependent}) {
    CHECK_THROWS_AS(inject_noise(no_truth, NoiseSpec{f, 0.2, 1}), DomainError);
  }
}

TEST_CASE("rate zero is the identity on labels for every family") {
  const Dataset d = world(5, 40);
  for (auto f : {NoiseFamily::symmetric, NoiseFamily::pairflip}) {
    const Dataset out = inject_noise(d, NoiseSpec{f, 0.0, 3});
    check_preserved(d, out);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(out[i].noisy_label == *d[i].true_label);
  }
  const Dataset idn = inject_noise(d, NoiseSpec{NoiseFamily::instance_dependent, 0.0, 3, 1e-12});
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(idn[i].noisy_label == *d[i].true_label);
}

TEST_CASE("symmetric: near-certain flip with two classes always flips") {
  const Dataset d = world(2, 200);
  const Dataset out = inject_symmetric(d, NoiseSpec{NoiseFamily::symmetric, 1.0 - 1e-12, 5});
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(out[i].noisy_label != *out[i].true_label);
}

TEST_CASE("symmetric: flips spread over all other classes") {
  const Dataset d = world(4, 2000);
  const Dataset out = inject_symmetric(d, NoiseSpec{NoiseFamily::symmetric, 0.6, 2});
  std::vector<std::size_t> targets(4, 0);
  for (const auto& inst : out.instances()) {
    if (*inst.true_label == 0 && inst.noisy_label != 0) ++targets[inst.noisy_label];
  }
  CHECK(targets[0] == 0);
  const double total = static_cast<double>(targets[1] + targets[2] + targets[3]);
  for (int c = 1; c < 4; ++c) CHECK(targets[c] / total == doctest::Approx(1.0 / 3).epsilon(0.12));
}

TEST_CASE("pairflip: forced flip wraps around") {
  const Dataset d(10, 1, true, {{0, {1.0}, 9, 9}});
  const Dataset out = inject_pairflip(d, NoiseSpec{NoiseFamily::pairflip, 1.0 - 1e-12, 0});
  CHECK(out[0].noisy_label == 0);
}

TEST_CASE("flip fractions at n = 20000") {
  for (const auto& c : {checks::symmetric_flip_fraction(), checks::pairflip_flip_fraction(), checks::idn_flip_fraction()}) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
}

TEST_CASE("injectors preserve everything but noisy labels") {
  const Dataset d = world(6, 50);
  for (auto f : {NoiseFamily::symmetric, NoiseFamily::pairflip, NoiseFamily::instance_dependent}) {
    const Dataset out = inject_noise(d, NoiseSpec{f, 0.4, 8});
    check_preserved(d, out);
    CHECK(out.provenance().find("corrupt family=") != std::string::npos);
  }
}

TEST_CASE("injection is deterministic and independent of thread count") {
  const Dataset d = world(6, 300);
  for (auto f : {NoiseFamily::symmetric, NoiseFamily::pairflip, NoiseFamily::instance_dependent}) {
    set_thread_count(1);
    const Dataset a = inject_noise(d, NoiseSpec{f, 0.3, 4});
    set_thread_count(4);
    const Dataset b = inject_noise(d, NoiseSpec{f, 0.3, 4});
    set_thread_count(0);
    CHECK(a == b);
    CHECK(a != inject_noise(d, NoiseSpec{f, 0.3, 5}));
  }
}

TEST_CASE("idn: flip distribution shape") {
  const IdnProjection proj = make_idn_projection(16, 10, 3);
  CHECK(proj.weights.size() == 160);
  const Dataset d = world(10, 3);
  for (const auto& inst : d.instances()) {
    const auto p = idn_flip_distribution(inst.features, *inst.true_label, 0.3, proj);
    REQUIRE(p.size() == 10);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[*inst.true_label] == doctest::Approx(0.7));
    for (double v : p) CHECK(v >= 0.0);
  }
}

TEST_CASE("idn: identical features and draws give identical distributions") {
  const IdnProjection proj = make_idn_projection(16, 10, 3);
  const Dataset d = world(10, 1);
  const auto a = idn_flip_distribution(d[4].features, 4, 0.25, proj);
  const auto b = idn_flip_distribution(Vector(d[4].features), 4, 0.25, proj);
  CHECK(a == b);
}

TEST_CASE("idn: flip targets depend on features") {
  // Two classes' flip distributions are not the same permutation-free vector.
  const IdnProjection proj = make_idn_projection(16, 10, 3);
  const Dataset d = world(10, 1);
  const auto a = idn_flip_distribution(d[0].features, 5, 0.3, proj);
  const auto b = idn_flip_distribution(d[1].features, 5, 0.3, proj);
  CHECK(a != b);
}

TEST_CASE("truncated normal stays in its support") {
  Stream s(1, "test.truncated");
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = draw_truncated_normal(s, 0.3, 0.1, 0.0, 1.0);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    sum += v;
  }
  CHECK(sum / 10000 == doctest::Approx(0.3).epsilon(0.02));
  CHECK_THROWS_AS(draw_truncated_normal(s, 50.0, 0.1, 0.0, 1.0), DomainError);
}
