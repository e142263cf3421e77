#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "support/check.hpp"
#include "wta/error.hpp"
#include "wta/nn/layers.hpp"
#include "wta/nn/linalg.hpp"
#include "wta/nn/ops.hpp"
#include "wta/nn/optim.hpp"

using namespace wta;
using namespace wta::nn;
using wta::testing::contract;
using wta::testing::naive_matmul;
using wta::testing::numeric_gradient;
using wta::testing::random_tensor;
using wta::testing::relative_error;

TEST_CASE("rng streams are reproducible and splits are independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng root(7);
  Rng s1 = root.split(1), s2 = root.split(2);
  CHECK(root.counter() == 0);
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(Rng(7).split(1).next_u64() == Rng(7).split(1).next_u64());
}

TEST_CASE("rng draws stay in range and have the right mean") {
  Rng rng(3);
  double sum = 0.0;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform_open();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    const auto k = rng.below(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(seen.size() == 7);
}

TEST_CASE("matrix products agree with the naive triple loop") {
  Rng rng(1);
  const Tensor2 a = random_tensor(5, 4, rng), b = random_tensor(4, 3, rng), c = random_tensor(6, 4, rng);
  const Tensor2 d = random_tensor(5, 3, rng);
  CHECK(wta::testing::max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-14);
  CHECK(wta::testing::max_abs_diff(matmul_transposed(a, c), naive_matmul(a, c.transposed())) < 1e-14);
  CHECK(wta::testing::max_abs_diff(transposed_matmul(a, d), naive_matmul(a.transposed(), d)) < 1e-14);
}

TEST_CASE("linear forward is x W^T + b") {
  Rng rng(2);
  const Tensor2 x = random_tensor(3, 4, rng), w = random_tensor(2, 4, rng);
  const std::vector<double> bias{0.5, -1.0};
  const Tensor2 y = linear_forward(x, w, bias);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = bias[j];
      for (std::size_t k = 0; k < 4; ++k) s += x(i, k) * w(j, k);
      CHECK(y(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("sparse inputs give the same linear results as dense ones") {
  Rng rng(5);
  Tensor2 x(64, 128);
  for (double& v : x.values()) v = rng.uniform() < 0.05 ? rng.uniform(0.1, 1.0) : 0.0;
  const Tensor2 w = random_tensor(16, 128, rng), g = random_tensor(64, 16, rng);
  std::vector<double> bias(16);
  for (double& b : bias) b = rng.uniform(-1, 1);
  const Tensor2 y = linear_forward(x, w, bias);
  Tensor2 expect = naive_matmul(x, w.transposed());
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 16; ++j) expect(i, j) += bias[j];
  CHECK(wta::testing::max_abs_diff(y, expect) < 1e-12);

  const auto grads = linear_backward(x, w, g, true, false);
  CHECK(grads.input.empty());
  CHECK(wta::testing::max_abs_diff(grads.weights, naive_matmul(g.transposed(), x)) < 1e-12);
  const auto full = linear_backward(x, w, g, true, true);
  CHECK(wta::testing::max_abs_diff(full.input, naive_matmul(g, w)) < 1e-12);
}

namespace {

// Loss sum(G * layer(x)) and its gradients through the layer's own backward.
template <class L>
void check_layer_gradients(L& layer, std::size_t in, std::size_t out, Rng& rng, double input_lo = -1.0) {
  Tensor2 x = random_tensor(4, in, rng, input_lo, 1.0);
  const Tensor2 g = random_tensor(4, out, rng);
  ForwardContext ctx{Mode::train, nullptr};
  for (auto* p : [&] {
         std::vector<Parameter*> ps;
         layer.collect(ps);
         return ps;
       }())
    p->zero_grad();
  layer.forward(x, ctx);
  const Tensor2 dx = layer.backward(g);
  auto loss = [&] { return contract(layer.infer(x), g); };
  CHECK(relative_error(dx.values(), numeric_gradient(x.values(), loss)) < 1e-4);
  std::vector<Parameter*> params;
  layer.collect(params);
  for (Parameter* p : params) {
    INFO(p->name);
    CHECK(relative_error(p->grad.values(), numeric_gradient(p->value.values(), loss)) < 1e-4);
  }
}

}  // namespace

TEST_CASE("layer gradients match finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Linear with_bias(5, 3, true, rng);
    check_layer_gradients(with_bias, 5, 3, rng);
    Linear no_bias(4, 6, false, rng);
    check_layer_gradients(no_bias, 4, 6, rng);
    LayerNorm norm(6);
    check_layer_gradients(norm, 6, 6, rng);
  }
}

TEST_CASE("leaky relu gradient matches finite differences away from the kink") {
  Rng rng(12);
  LeakyRelu act(0.01);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor2 x = random_tensor(4, 5, rng);
    for (double& v : x.values())
      if (std::abs(v) < 1e-3) v = 0.5;
    const Tensor2 g = random_tensor(4, 5, rng);
    act.forward(x, {Mode::train, nullptr});
    const Tensor2 dx = act.backward(g);
    CHECK(relative_error(dx.values(), numeric_gradient(x.values(), [&] { return contract(act.infer(x), g); })) <
          1e-4);
  }
}

TEST_CASE("layer norm gain and offset start at identity") {
  LayerNorm norm(4, 1e-5);
  const Tensor2 x = Tensor2::from_rows({{1, 2, 3, 4}});
  const Tensor2 y = norm.infer(x);
  const double mean = 2.5, var = 1.25;
  for (std::size_t j = 0; j < 4; ++j) CHECK(y(0, j) == doctest::Approx((x(0, j) - mean) / std::sqrt(var + 1e-5)));
}

TEST_CASE("sigmoid and bce gradients match finite differences") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor2 z = random_tensor(3, 4, rng, -3, 3);
    const Tensor2 t = random_tensor(3, 4, rng, 0, 1);
    const auto with_logits = bce_with_logits(z, t);
    CHECK(relative_error(with_logits.grad.values(),
                         numeric_gradient(z.values(), [&] { return bce_with_logits(z, t).loss; })) < 1e-4);
    Tensor2 p = sigmoid(z);
    const auto on_probs = bce_loss(p, t);
    CHECK(on_probs.loss == doctest::Approx(with_logits.loss).epsilon(1e-10));
    CHECK(relative_error(on_probs.grad.values(), numeric_gradient(p.values(), [&] { return bce_loss(p, t).loss; })) <
          1e-4);
    const Tensor2 g = random_tensor(3, 4, rng);
    const Tensor2 ds = sigmoid_backward(sigmoid(z), g);
    CHECK(relative_error(ds.values(), numeric_gradient(z.values(), [&] { return contract(sigmoid(z), g); })) < 1e-4);
  }
}

TEST_CASE("bce reaches the binary entropy at the target") {
  const Tensor2 t = Tensor2::from_rows({{0.2, 0.9, 0.5}});
  const auto r = bce_loss(t, t);
  const double expect = (binary_entropy(0.2) + binary_entropy(0.9) + binary_entropy(0.5)) / 3.0;
  CHECK(r.loss == doctest::Approx(expect).epsilon(1e-14));
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)));
  CHECK(binary_entropy(0.0) == 0.0);
}

TEST_CASE("sequential stack gradients match finite differences") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    Sequential net;
    net.push(Linear(4, 6, true, rng));
    net.push(LeakyRelu(0.01));
    net.push(LayerNorm(6));
    net.push(Linear(6, 2, true, rng));
    Tensor2 x = random_tensor(3, 4, rng);
    const Tensor2 g = random_tensor(3, 2, rng);
    for (auto* p : net.parameters()) p->zero_grad();
    net.forward(x, {Mode::train, nullptr});
    const Tensor2 dx = net.backward(g);
    auto loss = [&] { return contract(net.infer(x), g); };
    CHECK(relative_error(dx.values(), numeric_gradient(x.values(), loss)) < 1e-4);
    for (Parameter* p : net.parameters())
      CHECK(relative_error(p->grad.values(), numeric_gradient(p->value.values(), loss)) < 1e-4);
    net.forward(x, {Mode::train, nullptr});
    CHECK(net.backward(g, false).empty());
  }
}

TEST_CASE("dropout is identity in eval mode and keeps the mean in train mode") {
  Rng rng(15);
  Dropout drop(0.25);
  const Tensor2 x(200, 50, 1.0);
  CHECK(drop.forward(x, {Mode::eval, nullptr}) == x);
  const Tensor2 y = drop.forward(x, {Mode::train, &rng});
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : y.values()) {
    sum += v;
    if (v == 0.0) ++zeros;
    else CHECK(v == doctest::Approx(1.0 / 0.75));
  }
  CHECK(sum / y.size() == doctest::Approx(1.0).epsilon(0.03));
  CHECK(static_cast<double>(zeros) / y.size() == doctest::Approx(0.25).epsilon(0.1));
  const Tensor2 back = drop.backward(Tensor2(200, 50, 1.0));
  CHECK(back == y);
}

TEST_CASE("adamw first step follows the update rule") {
  Parameter p("w", Tensor2::from_rows({{1.0, -2.0, 0.5}}));
  p.grad = Tensor2::from_rows({{0.1, -0.3, 0.0}});
  AdamW opt({0.9, 0.999, 1e-8, 0.01});
  Parameter* list[] = {&p};
  opt.step(list, 0.1);
  // After one step the bias-corrected moments are g and g^2.
  const double expect[] = {1.0 * (1 - 0.001) - 0.1 * 0.1 / (0.1 + 1e-8),
                           -2.0 * (1 - 0.001) + 0.1 * 0.3 / (0.3 + 1e-8), 0.5 * (1 - 0.001)};
  for (int i = 0; i < 3; ++i) CHECK(p.value(0, i) == doctest::Approx(expect[i]).epsilon(1e-12));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adamw minimises a quadratic") {
  Parameter p("w", Tensor2::from_rows({{3.0, -4.0}}));
  AdamW opt;
  Parameter* list[] = {&p};
  for (int i = 0; i < 2000; ++i) {
    for (int j = 0; j < 2; ++j) p.grad(0, j) = 2.0 * (p.value(0, j) - 1.0);
    opt.step(list, 0.05);
  }
  CHECK(p.value(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.value(0, 1) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("cosine annealing and exponential decay schedules") {
  const auto cos = Schedule::cosine(0.02, 1e-6, 100);
  CHECK(cos.value(0) == doctest::Approx(0.02));
  CHECK(cos.value(100) == doctest::Approx(1e-6));
  CHECK(cos.value(50) == doctest::Approx((0.02 + 1e-6) / 2));
  CHECK(cos.value(25) == doctest::Approx(1e-6 + (0.02 - 1e-6) * (1 + std::cos(std::numbers::pi / 4)) / 2));
  const auto exp = Schedule::exponential(20.0, 0.999);
  CHECK(exp.value(0) == 20.0);
  CHECK(exp.value(1000) == doctest::Approx(20.0 * std::pow(0.999, 1000)));
}

TEST_CASE("rank and least squares on known systems") {
  const Tensor2 a = Tensor2::from_rows({{1, 0, 1}, {0, 1, 1}, {1, 1, 2}, {2, 0, 2}});
  CHECK(matrix_rank(a) == 2);
  CHECK(matrix_rank(Tensor2::from_rows({{1, 2}, {3, 4}})) == 2);
  // Consistent overdetermined system with a unique solution.
  const Tensor2 m = Tensor2::from_rows({{1, 0}, {0, 1}, {1, 1}});
  const Tensor2 x = Tensor2::from_rows({{2, -1}, {3, 0.5}});
  const auto ls = least_squares(m, naive_matmul(m, x));
  CHECK(ls.rank == 2);
  CHECK(ls.residual < 1e-12);
  CHECK(wta::testing::max_abs_diff(ls.solution, x) < 1e-12);
  // Inconsistent system: residual equals the distance to the column space.
  const auto off = least_squares(Tensor2::from_rows({{1}, {1}}), Tensor2::from_rows({{0}, {2}}));
  CHECK(off.solution(0, 0) == doctest::Approx(1.0));
  CHECK(off.residual == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("shape mismatches are reported as invalid arguments") {
  const Tensor2 a(2, 3), b(2, 2);
  try {
    (void)matmul(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
}
