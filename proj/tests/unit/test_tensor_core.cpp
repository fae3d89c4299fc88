#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "rmis/autodiff.hpp"
#include "rmis/error.hpp"
#include "rmis/params.hpp"

using namespace rmis;
using doctest::Approx;

TEST_CASE("swish at reference points") {
  CHECK(swish(0.0) == 0.0);
  // 1 * 1/(1+e^-1)
  const double want = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(swish(1.0) == Approx(want).epsilon(1e-15));
  CHECK(swish(1.0) == Approx(0.731058).epsilon(1e-6));
  const double far = swish(-20.0);
  CHECK(std::isfinite(far));
  CHECK(far == Approx(-20.0 * std::exp(-20.0) / (1.0 + std::exp(-20.0))).epsilon(1e-12));
  CHECK(far == Approx(-4.1e-8).epsilon(0.01));
}

TEST_CASE("vectorised swish matches scalar swish") {
  std::vector<double> z;
  for (int i = -800; i <= 800; ++i) z.push_back(i * 0.05);
  z.push_back(-745.0);
  z.push_back(710.0);
  const Tensor out = swish(Tensor::vector(z));
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(std::isfinite(out[i]));
    CHECK(out[i] == Approx(swish(z[i])).epsilon(1e-13));
  }
}

namespace {

Tensor run_affine(const Tensor& w, const Tensor& b, const Tensor& x) {
  Tape tape;
  Var out = ad::affine(tape.leaf(x, false), tape.leaf(w, false), tape.leaf(b, false));
  return out.value();
}

}  // namespace

TEST_CASE("affine examples") {
  const Tensor x = Tensor::matrix(1, 2, {1, 2});
  const Tensor eye = run_affine(Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0}), x);
  CHECK(eye.at(0, 0) == 1.0);
  CHECK(eye.at(0, 1) == 2.0);

  const Tensor sum = run_affine(Tensor::matrix(1, 2, {1, 1}), Tensor::vector({3}), x);
  REQUIRE(sum.size() == 1);
  CHECK(sum[0] == 6.0);

  CHECK_THROWS_AS(run_affine(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), Tensor::vector({0, 0}), x),
                  ShapeError);
}

TEST_CASE("backward of sum and quadratic") {
  const Tensor theta = Tensor::vector({0.5, -1.5, 2.0, 3.25});
  {
    Tape tape;
    Var t = tape.leaf(theta, true);
    tape.backward(ad::sum(t));
    const Tensor g = tape.grad(t.id());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
  }
  {
    Tape tape;
    Var t = tape.leaf(theta, true);
    tape.backward(ad::scale(ad::sum(ad::square(t)), 0.5));
    const Tensor g = tape.grad(t.id());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == Approx(theta[i]).epsilon(1e-15));
  }
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Var t = tape.leaf(Tensor::vector({1, 2}), true);
  CHECK_THROWS_AS(tape.backward(t), ShapeError);
}

TEST_CASE("finite differences of x^2 and a linear function") {
  const Tensor g = finite_diff_grad([](const Tensor& p) { return p[0] * p[0]; },
                                    Tensor::vector({3.0}));
  CHECK(std::abs(g[0] - 6.0) < 1e-8);

  const std::vector<double> w = {0.25, -3.0, 7.5};
  const Tensor gl = finite_diff_grad(
      [&](const Tensor& p) { return w[0] * p[0] + w[1] * p[1] + w[2] * p[2]; },
      Tensor::vector({1.0, -2.0, 0.5}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(gl[i] == Approx(w[i]).epsilon(1e-9));
}

TEST_CASE("MLP parameter gradients agree with central differences") {
  auto model = testing::random_mlp(6, 16, 2, 11);
  RngStream rng(3, 0);
  BitBatch batch(6);
  for (int r = 0; r < 5; ++r) batch.push_back(testing::random_bits(6, rng));

  auto loss_of = [&](const ParamSet& params) {
    Tape tape;
    const auto bound = bind_params(tape, params, true);
    Var e = model.energy_graph(tape, tape.leaf(batch.to_tensor(), false), bound);
    return ad::sum(ad::square(e)).value().item();
  };

  Tape tape;
  const auto bound = bind_params(tape, model.params(), true);
  Var e = model.energy_graph(tape, tape.leaf(batch.to_tensor(), false), bound);
  const GradRecord grads = backward(ad::sum(ad::square(e)), bound);

  for (std::size_t p = 0; p < model.params().size(); ++p) {
    const Tensor fd = finite_diff_grad(
        [&](const Tensor& v) {
          ParamSet copy = model.params();
          copy[p].value = v;
          return loss_of(copy);
        },
        model.params()[p].value);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      CHECK(testing::rel_err(grads.grads[p][i], fd[i]) < 1e-4);
    }
  }
}

TEST_CASE("MLP energy input gradient agrees with central differences") {
  auto model = testing::random_mlp(5, 12, 3, 4);
  const BitVector x = BitVector::from_string("10110");
  const Tensor g = model.grad_input(batch_of(std::span(&x, 1)));
  const Tensor fd = finite_diff_grad(
      [&](const Tensor& p) {
        Tape tape;
        const auto bound = bind_params(tape, model.params(), false);
        return model.energy_graph(tape, tape.leaf(p.reshaped({1, 5}), false), bound)
            .value()
            .item();
      },
      Tensor::vector(x.to_doubles()));
  for (std::size_t i = 0; i < 5; ++i) CHECK(testing::rel_err(g[i], fd[i]) < 1e-4);
}

TEST_CASE("adam with zero gradient leaves params and decays moments") {
  ParamSet params;
  params.add("w", Tensor::vector({1.0, -2.0}));
  AdamState state = AdamState::zeros_like(params);
  state.m[0] = Tensor::vector({0.5, 0.5});
  state.v[0] = Tensor::vector({0.25, 0.25});
  GradRecord g{{Tensor::vector({0.0, 0.0})}};
  AdamConfig cfg;
  cfg.lr = 0.0;
  adam_step(params, g, state, cfg);
  CHECK(params.get("w")[0] == 1.0);
  CHECK(params.get("w")[1] == -2.0);
  CHECK(state.m[0][0] == Approx(0.9 * 0.5));
  CHECK(state.v[0][0] == Approx(0.999 * 0.25));
}

TEST_CASE("adam first step and moment recurrence") {
  ParamSet params;
  params.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  const std::vector<double> g = {0.3, -4.0, 1e-3};
  AdamState state = AdamState::zeros_like(params);
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step(params, GradRecord{{Tensor::vector(g)}}, state, cfg);
  const std::vector<double> start = {1.0, -2.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    // m_hat = g, v_hat = g^2.
    const double want = start[i] - cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps);
    CHECK(params.get("w")[i] == Approx(want).epsilon(1e-12));
  }
  const std::vector<double> m1 = {0.1 * g[0], 0.1 * g[1], 0.1 * g[2]};
  adam_step(params, GradRecord{{Tensor::vector(g)}}, state, cfg);
  CHECK(state.step == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(state.m[0][i] == Approx(0.9 * m1[i] + 0.1 * g[i]).epsilon(1e-15));
    CHECK(state.v[0][i] ==
          Approx(0.999 * (0.001 * g[i] * g[i]) + 0.001 * g[i] * g[i]).epsilon(1e-15));
  }
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  ParamSet params;
  params.add("w", Tensor::vector({1.0, 2.0}));
  AdamState state = AdamState::zeros_like(params);
  CHECK_THROWS_AS(adam_step(params, GradRecord{{Tensor::vector({1.0})}}, state, AdamConfig{}),
                  ShapeError);
}
