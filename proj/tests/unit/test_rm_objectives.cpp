#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "rmis/error.hpp"
#include "rmis/objectives.hpp"

using namespace rmis;
using doctest::Approx;

namespace {

const testing::LinearEnergy kLin2({1.0, 2.0});
const BitVector kZero2 = BitVector::from_string("00");

// Direct sums over the flips of x using plain energy calls.
double brute_full(const EnergyModel& m, const BitVector& x) {
  const double e = m.energy(x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) total += std::exp(2.0 * (e - m.energy(x.flipped(i))));
  return total;
}

std::vector<double> brute_optimal(const EnergyModel& m, const BitVector& x) {
  const double e = m.energy(x);
  std::vector<double> w(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) w[i] = std::exp(2.0 * (e - m.energy(x.flipped(i))));
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= z;
  return w;
}

std::vector<double> random_proposal(std::size_t d, RngStream& rng) {
  std::vector<double> p(d);
  double z = 0.0;
  for (double& v : p) z += v = 0.05 + rng.uniform();
  for (double& v : p) v /= z;
  return p;
}

double single_draw_basic(const EnergyModel& m, const BitVector& x, const std::vector<double>& p,
                         std::size_t i) {
  const std::size_t idx[] = {i};
  return is_estimate_basic(m, x, ProposalDistribution{x, p}, idx).value;
}

}  // namespace

TEST_CASE("rm_full on the two-bit linear energy") {
  const double want = std::exp(-2.0) + std::exp(-4.0);
  CHECK(rm_full_loss(kLin2, kZero2).value == Approx(want).epsilon(1e-14));
  CHECK(rm_full_loss(kLin2, kZero2).value == Approx(0.153651).epsilon(1e-6));
}

TEST_CASE("rm_full of a constant energy is d") {
  for (std::size_t d : {1u, 3u, 16u}) {
    const auto c = testing::constant_energy(d, 4.2);
    CHECK(rm_full_loss(c, BitVector(d)).value == Approx(double(d)).epsilon(1e-15));
  }
}

TEST_CASE("rm_full on a random MLP matches brute force") {
  auto model = testing::random_mlp(8, 32, 3, 21);
  RngStream rng(5, 0);
  for (int t = 0; t < 10; ++t) {
    const BitVector x = testing::random_bits(8, rng);
    CHECK(std::abs(rm_full_loss(model, x).value - brute_full(model, x)) < 1e-10);
  }
}

TEST_CASE("rm_full counts clamp events") {
  const testing::LinearEnergy steep({-40.0, 1.0});
  const LossValue v = rm_full_loss(steep, kZero2, 30.0);
  CHECK(v.clamp_events == 1);
  CHECK(v.value == Approx(std::exp(30.0) + std::exp(-2.0)));
}

TEST_CASE("rm_g examples and range") {
  const double a = 1.0 / (1.0 + std::exp(1.0));
  const double b = 1.0 / (1.0 + std::exp(2.0));
  CHECK(rm_g_loss(kLin2, kZero2).value == Approx(a * a + b * b).epsilon(1e-14));
  CHECK(rm_g_loss(kLin2, kZero2).value == Approx(0.086539).epsilon(1e-5));
  CHECK(rm_g_loss(testing::constant_energy(6, 1.0), BitVector(6)).value == Approx(1.5));

  auto model = testing::random_mlp(8, 16, 2, 2);
  RngStream rng(7, 0);
  for (int t = 0; t < 20; ++t) {
    const BitVector x = testing::random_bits(8, rng);
    const double g = rm_g_loss(model, x).value;
    CHECK(g >= 0.0);
    CHECK(g <= 8.0);
    CHECK(rm_full_loss(model, x).value >= 0.0);
  }
}

TEST_CASE("optimal and gradient-guided proposals on the linear case") {
  const double e2 = std::exp(-2.0);
  const auto exact = exact_optimal_proposal(kLin2, kZero2);
  const auto guided = gradient_guided_proposal(kLin2, kZero2);
  CHECK(exact.probs[0] == Approx(1.0 / (1.0 + e2)).epsilon(1e-14));
  CHECK(exact.probs[1] == Approx(e2 / (1.0 + e2)).epsilon(1e-14));
  CHECK(exact.probs[0] == Approx(0.880797).epsilon(1e-6));
  CHECK(guided.probs[1] == Approx(0.119203).epsilon(1e-6));
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(exact.probs[i] - guided.probs[i]) < 1e-12);
}

TEST_CASE("proposals for a constant energy are uniform") {
  const auto c = testing::constant_energy(5, -3.0);
  const BitVector x = BitVector::from_string("01100");
  for (double p : exact_optimal_proposal(c, x).probs) CHECK(p == Approx(0.2).epsilon(1e-15));
  for (double p : gradient_guided_proposal(c, x).probs) CHECK(p == Approx(0.2).epsilon(1e-15));
}

TEST_CASE("taylor delta") {
  const auto t = taylor_delta(kLin2, kZero2);
  CHECK(t[0] == -1.0);
  CHECK(t[1] == -2.0);

  const testing::LinearEnergy lin({0.3, -1.2, 2.5, 0.0});
  const BitVector x = BitVector::from_string("1010");
  const auto td = taylor_delta(lin, x);
  const double e = lin.energy(x);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(td[i] == Approx(e - lin.energy(x.flipped(i))).epsilon(1e-14));
  }
}

TEST_CASE("gradient-guided proposal is exact for random linear energies") {
  RngStream rng(9, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> w(12);
    for (double& v : w) v = rng.normal() * 2.0;
    const testing::LinearEnergy lin(w, rng.normal());
    const BitVector x = testing::random_bits(12, rng);
    const auto a = gradient_guided_proposal(lin, x).probs;
    const auto b = brute_optimal(lin, x);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("batched gradient-guided proposals match the single-point version") {
  auto model = testing::random_mlp(10, 16, 2, 4);
  RngStream rng(3, 0);
  BitBatch batch(10);
  for (int t = 0; t < 7; ++t) batch.push_back(testing::random_bits(10, rng));
  const auto all = gradient_guided_proposals(model, batch);
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto one = gradient_guided_proposal(model, batch.row(r));
    for (std::size_t i = 0; i < 10; ++i) CHECK(all[r].probs[i] == Approx(one.probs[i]).epsilon(1e-12));
  }
}

TEST_CASE("shift invariance of proposals and losses") {
  auto model = testing::random_mlp(6, 16, 2, 17);
  const testing::OffsetEnergy shifted(model, 123.5);
  RngStream rng(8, 0);
  for (int t = 0; t < 10; ++t) {
    const BitVector x = testing::random_bits(6, rng);
    CHECK(std::abs(rm_full_loss(model, x).value - rm_full_loss(shifted, x).value) < 1e-10);
    CHECK(std::abs(rm_g_loss(model, x).value - rm_g_loss(shifted, x).value) < 1e-10);
    const auto a = exact_optimal_proposal(model, x).probs;
    const auto b = exact_optimal_proposal(shifted, x).probs;
    const auto ga = gradient_guided_proposal(model, x).probs;
    const auto gb = gradient_guided_proposal(shifted, x).probs;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(std::abs(a[i] - b[i]) < 1e-10);
      CHECK(std::abs(ga[i] - gb[i]) < 1e-10);
    }
    const std::size_t idx[] = {0, 3, 3};
    CHECK(std::abs(is_estimate_advanced(model, x, idx).value -
                   is_estimate_advanced(shifted, x, idx).value) < 1e-10);
  }
}

TEST_CASE("normalize_log_weights survives large magnitudes") {
  const double lw[] = {1000.0, 1000.0, -1000.0};
  const auto p = normalize_log_weights(lw);
  CHECK(p[0] == Approx(0.5));
  CHECK(p[1] == Approx(0.5));
  CHECK(p[2] == 0.0);
}

TEST_CASE("basic IS with uniform proposal and every flip once equals rm_full") {
  auto model = testing::random_mlp(5, 8, 2, 6);
  const BitVector x = BitVector::from_string("11010");
  const std::vector<double> uniform(5, 0.2);
  const std::size_t idx[] = {0, 1, 2, 3, 4};
  CHECK(is_estimate_basic(model, x, {x, uniform}, idx).value ==
        Approx(rm_full_loss(model, x).value).epsilon(1e-14));
}

TEST_CASE("basic IS expectation on the linear case equals e^-2 + e^-4 for any proposal") {
  const double want = std::exp(-2.0) + std::exp(-4.0);
  for (double p0 : {0.5, 0.1, 0.9, 0.880797}) {
    const std::vector<double> p = {p0, 1.0 - p0};
    const double expect =
        p[0] * single_draw_basic(kLin2, kZero2, p, 0) + p[1] * single_draw_basic(kLin2, kZero2, p, 1);
    CHECK(expect == Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("basic IS with uniform proposal on a constant energy always gives d") {
  const auto c = testing::constant_energy(4, 2.0);
  const BitVector x(4);
  const std::vector<double> uniform(4, 0.25);
  const std::size_t idx[] = {2, 2, 0};
  CHECK(is_estimate_basic(c, x, {x, uniform}, idx).value == Approx(4.0).epsilon(1e-15));
}

TEST_CASE("basic IS is unbiased by enumeration") {
  RngStream rng(10, 0);
  for (int t = 0; t < 10; ++t) {
    auto model = testing::random_mlp(7, 16, 2, 100 + t);
    const BitVector x = testing::random_bits(7, rng);
    const double full = rm_full_loss(model, x).value;
    for (const auto& p : {random_proposal(7, rng), exact_optimal_proposal(model, x).probs,
                          gradient_guided_proposal(model, x).probs}) {
      double expect = 0.0;
      for (std::size_t i = 0; i < 7; ++i) expect += p[i] * single_draw_basic(model, x, p, i);
      CHECK(std::abs(expect - full) < 1e-9);
    }
  }
}

TEST_CASE("optimal proposal minimises single-draw variance") {
  RngStream rng(11, 0);
  for (int t = 0; t < 20; ++t) {
    auto model = testing::random_mlp(6, 8, 2, 200 + t);
    const BitVector x = testing::random_bits(6, rng);
    auto variance = [&](const std::vector<double>& p) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        const double v = single_draw_basic(model, x, p, i);
        m1 += p[i] * v;
        m2 += p[i] * v * v;
      }
      return m2 - m1 * m1;
    };
    const double opt = variance(brute_optimal(model, x));
    CHECK(opt == Approx(0.0).epsilon(1e-9).scale(rm_full_loss(model, x).value));
    CHECK(variance(random_proposal(6, rng)) - opt >= -1e-9);
  }
}

TEST_CASE("advanced estimator examples") {
  // Indices are 0-based: flipping x_1 of (0,0) gives D = -1.
  const std::size_t one[] = {0};
  CHECK(is_estimate_advanced(kLin2, kZero2, one).value == Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(is_estimate_advanced(kLin2, kZero2, one).value == Approx(0.135335).epsilon(1e-6));
  const std::size_t twice[] = {0, 0};
  CHECK(is_estimate_advanced(kLin2, kZero2, twice).value ==
        Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));

  const auto c = testing::constant_energy(9, 0.5);
  const std::size_t idx[] = {0, 4, 4, 8};
  CHECK(is_estimate_advanced(c, BitVector(9), idx).value == Approx(4.0).epsilon(1e-15));
}

TEST_CASE("rmwrand estimator") {
  const auto c = testing::constant_energy(6, 0.5);
  const std::size_t idx[] = {1, 1, 5};
  CHECK(rmwrand_estimate(c, BitVector(6), idx).value == Approx(6.0).epsilon(1e-15));

  auto model = testing::random_mlp(5, 8, 2, 31);
  const BitVector x = BitVector::from_string("00111");
  const std::size_t all[] = {0, 1, 2, 3, 4};
  CHECK(rmwrand_estimate(model, x, all).value == Approx(rm_full_loss(model, x).value).epsilon(1e-14));

  double expect = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t one[] = {i};
    expect += 0.5 * rmwrand_estimate(kLin2, kZero2, one).value;
  }
  CHECK(expect == Approx(0.153651).epsilon(1e-6));
}

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::RmFull, EstimatorKind::RmGFull, EstimatorKind::RmwggisBasic,
                 EstimatorKind::RmwggisAdvanced, EstimatorKind::Rmwrand}) {
    CHECK(estimator_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(estimator_kind_from_string("rm-magic"), ConfigError);
}

TEST_CASE("estimator spec validation") {
  EstimatorSpec spec;
  spec.samples = 9;
  CHECK_THROWS_AS(spec.validate(8), ConfigError);
  spec.samples = 0;
  CHECK_THROWS_AS(spec.validate(8), ConfigError);
  spec.samples = 8;
  CHECK_NOTHROW(spec.validate(8));
  spec.exponent_clamp = 0.0;
  CHECK_THROWS_AS(spec.validate(8), ConfigError);
}

TEST_CASE("batch loss") {
  auto model = testing::random_mlp(6, 8, 2, 41);
  const BitVector x = BitVector::from_string("101100");
  BitBatch same(6);
  for (int t = 0; t < 5; ++t) same.push_back(x);
  EstimatorSpec full{EstimatorKind::RmFull};
  RngStream rng(0, 2);
  CHECK(batch_loss(model, same, full, rng).value ==
        Approx(rm_full_loss(model, x).value).epsilon(1e-13));

  CHECK_THROWS(batch_loss(model, BitBatch(6), full, rng));

  // Mean equals the average of per-row plans evaluated individually.
  RngStream draw(3, 0);
  BitBatch batch(6);
  for (int t = 0; t < 8; ++t) batch.push_back(testing::random_bits(6, draw));
  for (auto kind : {EstimatorKind::RmwggisBasic, EstimatorKind::RmwggisAdvanced,
                    EstimatorKind::Rmwrand, EstimatorKind::RmGFull}) {
    EstimatorSpec spec{kind, 3};
    RngStream a(1, 2), b(1, 2);
    const double mean = batch_loss(model, batch, spec, a).value;
    const auto plans = plan_batch(model, batch, spec, b);
    double total = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      total += evaluate_plan(model, batch.row(r), plans[r], spec.exponent_clamp).value;
    }
    CHECK(mean == Approx(total / 8.0).epsilon(1e-13));
  }
}

TEST_CASE("loss graph value matches evaluate_plan") {
  auto model = testing::random_mlp(7, 16, 2, 51);
  RngStream draw(4, 0);
  BitBatch batch(7);
  for (int t = 0; t < 6; ++t) batch.push_back(testing::random_bits(7, draw));
  for (auto kind : {EstimatorKind::RmFull, EstimatorKind::RmGFull, EstimatorKind::RmwggisBasic,
                    EstimatorKind::RmwggisAdvanced, EstimatorKind::Rmwrand}) {
    EstimatorSpec spec{kind, 4};
    RngStream rng(2, 2);
    const auto plans = plan_batch(model, batch, spec, rng);
    Tape tape;
    const auto bound = bind_params(tape, model.params(), true);
    const LossGraph g =
        build_loss_graph(tape, model, bound, batch, plans, 0, batch.rows(), 30.0, 0.5);
    double total = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      total += evaluate_plan(model, batch.row(r), plans[r], 30.0).value;
    }
    CHECK(g.loss.value().item() == Approx(0.5 * total).epsilon(1e-12));
  }
}

TEST_CASE("loss graph gradients agree with finite differences for every estimator") {
  auto model = testing::random_mlp(6, 8, 2, 61);
  RngStream draw(5, 0);
  BitBatch batch(6);
  for (int t = 0; t < 3; ++t) batch.push_back(testing::random_bits(6, draw));
  for (auto kind : {EstimatorKind::RmFull, EstimatorKind::RmGFull, EstimatorKind::RmwggisBasic,
                    EstimatorKind::RmwggisAdvanced, EstimatorKind::Rmwrand}) {
    EstimatorSpec spec{kind, 3};
    RngStream rng(6, 2);
    const auto plans = plan_batch(model, batch, spec, rng);
    auto value_at = [&](const ParamSet& params) {
      Tape tape;
      const auto bound = bind_params(tape, params, false);
      return build_loss_graph(tape, model, bound, batch, plans, 0, batch.rows(), 30.0, 1.0)
          .loss.value()
          .item();
    };
    Tape tape;
    const auto bound = bind_params(tape, model.params(), true);
    const auto grads = backward(
        build_loss_graph(tape, model, bound, batch, plans, 0, batch.rows(), 30.0, 1.0).loss,
        bound);
    for (std::size_t p = 0; p < model.params().size(); ++p) {
      const Tensor fd = finite_diff_grad(
          [&](const Tensor& v) {
            ParamSet copy = model.params();
            copy[p].value = v;
            return value_at(copy);
          },
          model.params()[p].value);
      for (std::size_t i = 0; i < fd.size(); ++i) {
        CHECK(testing::rel_err(grads.grads[p][i], fd[i]) < 1e-4);
      }
    }
  }
}
