#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "tsaudit/rng.hpp"
#include "tsaudit/tensor.hpp"

using namespace tsaudit;
using namespace tsaudit::autodiff;

namespace {

// Independent triple-loop product used as the matmul oracle.
std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                 std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) out[i * n + j] += a[i * k + p] * b[p * n + j];
  return out;
}

}  // namespace

TEST_CASE("matmul identity and hand cases") {
  Tensor eye = Tensor::from({1, 0, 0, 1}, {2, 2});
  Tensor b = Tensor::from({3, 4, 5, 6}, {2, 2});
  CHECK(matmul(eye, b).value() == std::vector<double>{3, 4, 5, 6});

  Tensor row = Tensor::from({1, 2}, {1, 2});
  Tensor col = Tensor::from({3, 4}, {2, 1});
  CHECK(matmul(row, col).value() == std::vector<double>{11});
}

TEST_CASE("matmul matches triple-loop oracle on random operands") {
  auto av = test_support::random_vector(12, 11);
  auto bv = test_support::random_vector(8, 22);
  Tensor a = Tensor::from(av, {3, 4});
  Tensor b = Tensor::from(bv, {4, 2});
  auto expected = naive_matmul(av, bv, 3, 4, 2);
  auto got = matmul(a, b).value();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(got[i] == Catch::Approx(expected[i]).epsilon(1e-14));
  }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3});
  Tensor b = Tensor::from({1, 2, 3, 4}, {2, 2});
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("elementwise definitions") {
  CHECK(sigmoid(Tensor::scalar(0)).item() == 0.5);
  CHECK(relu(Tensor::scalar(-3)).item() == 0.0);
  CHECK(relu(Tensor::scalar(3)).item() == 3.0);
  CHECK_THROWS_AS(add(Tensor::from({1, 2}, {2, 1}), Tensor::from({1, 2, 3}, {3, 1})),
                  DimensionError);
  // scalar broadcast
  auto r = add(Tensor::from({1, 2, 3}, {3, 1}), Tensor::scalar(10));
  CHECK(r.value() == std::vector<double>{11, 12, 13});
}

TEST_CASE("tanh matches series reference on a grid") {
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    const double got = autodiff::tanh(Tensor::scalar(x)).item();
    const double want = static_cast<double>(test_support::tanh_reference(x));
    CHECK(std::fabs(got - want) < 1e-12);
  }
}

TEST_CASE("softmax cross entropy hand cases") {
  Tensor uniform = Tensor::from({0.7, 0.7, 0.7, 0.7}, {4, 1});
  CHECK(softmax_cross_entropy(uniform, 2).item() == Catch::Approx(std::log(4.0)).epsilon(1e-14));

  Tensor saturated = Tensor::from({0.0, 1e6, 0.0}, {3, 1});
  CHECK(softmax_cross_entropy(saturated, 1).item() < 1e-9);

  CHECK_THROWS_AS(softmax_cross_entropy(uniform, 4), IndexError);
}

TEST_CASE("softmax cross entropy matches direct formula on random logits") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto logits = test_support::random_vector(6, 100 + seed, -3, 3);
    const std::size_t label = seed % 6;
    // direct formula: -z_y + log sum exp(z_c), long double accumulation
    long double z = 0.0L;
    for (double v : logits) z += test_support::exp_reference(v);
    const double expected =
        static_cast<double>(-static_cast<long double>(logits[label]) + std::log(z));
    const double got = softmax_cross_entropy(Tensor::from(logits, {6, 1}), label).item();
    CHECK(got == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("softmax output sums to one") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto logits = test_support::random_vector(7, 500 + seed, -30, 30);
    auto p = softmax_values(logits);
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("backward of x*x at 3 gives 6") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  Tensor loss = mul(x, x);
  tape.backward(loss);
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("backward of a constant leaves grads at zero") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from({1, 2, 3}, {3, 1});
  x.set_requires_grad(true);
  Tensor loss = Tensor::scalar(42.0);
  tape.backward(loss);
  CHECK(x.grad() == std::vector<double>(3, 0.0));
}

TEST_CASE("backward rejects non-scalar loss and tape reuse") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from({1, 2}, {2, 1});
  x.set_requires_grad(true);
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
  Tensor s = sum(y);
  tape.backward(s);
  CHECK_THROWS_AS(tape.backward(s), ContractError);
}

namespace {

// Runs the analytic gradient of sum(f(x)) through a fresh tape.
template <typename Fn>
std::vector<double> tape_gradient(Fn&& f, const std::vector<double>& x,
                                  std::vector<std::size_t> shape) {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor t = Tensor::from(x, std::move(shape));
  t.set_requires_grad(true);
  Tensor loss = f(t);
  tape.backward(loss);
  return t.grad();
}

template <typename Fn>
void gradcheck(Fn&& f, std::vector<std::size_t> shape, std::uint64_t seed,
               double lo = -1.5, double hi = 1.5) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  for (int point = 0; point < 10; ++point) {
    auto x = test_support::random_vector(n, seed * 131 + point, lo, hi);
    auto loss = [&](const std::vector<double>& v) {
      Tape::NoGrad ng;
      return f(Tensor::from(v, shape)).item();
    };
    auto grad = [&](const std::vector<double>& v) { return tape_gradient(f, v, shape); };
    CHECK(test_support::max_grad_rel_error(loss, grad, x) < 1e-4);
  }
}

}  // namespace

TEST_CASE("gradient check for every op") {
  Tensor w = Tensor::from(test_support::random_vector(12, 7), {4, 3});
  Tensor v3 = Tensor::from(test_support::random_vector(3, 8), {3, 1});
  Tensor v4 = Tensor::from(test_support::random_vector(4, 9), {4, 1});

  gradcheck([&](const Tensor& x) { return sum(matmul(w, x)); }, {3, 4}, 1);
  gradcheck([&](const Tensor& x) { return sum(matmul(x, w)); }, {2, 4}, 2);
  gradcheck([&](const Tensor& x) { return sum(transpose(x)); }, {3, 4}, 3);
  gradcheck([&](const Tensor& x) { return sum(add(x, v3)); }, {3, 1}, 4);
  gradcheck([&](const Tensor& x) { return sum(sub(v3, x)); }, {3, 1}, 5);
  gradcheck([&](const Tensor& x) { return sum(mul(x, v3)); }, {3, 1}, 6);
  gradcheck([&](const Tensor& x) { return sum(mul(x, x)); }, {3, 1}, 7);
  gradcheck([&](const Tensor& x) { return sum(sigmoid(x)); }, {3, 2}, 8);
  gradcheck([&](const Tensor& x) { return sum(autodiff::tanh(x)); }, {3, 2}, 9);
  // relu away from the kink
  gradcheck([&](const Tensor& x) { return sum(relu(add(x, Tensor::scalar(3.0)))); }, {4, 1}, 10);
  gradcheck([&](const Tensor& x) { return sum(autodiff::exp(x)); }, {2, 2}, 11);
  gradcheck([&](const Tensor& x) { return sum(scale(x, -2.5)); }, {3, 1}, 12);
  gradcheck([&](const Tensor& x) { return sum(column(x, 1)); }, {3, 4}, 13);
  gradcheck([&](const Tensor& x) { return sum(slice_rows(x, 1, 3)); }, {4, 2}, 14);
  gradcheck([&](const Tensor& x) { return sum(mul(shift_columns_right(x, 2), x)); }, {2, 5}, 15);
  gradcheck([&](const Tensor& x) { return sum(mul(add_col_broadcast(x, v4), x)); }, {4, 3}, 16);
  gradcheck([&](const Tensor& x) { return sum(mul(row_mean(x), v4)); }, {4, 3}, 17);
  gradcheck([&](const Tensor& x) { return select_element(x, 3); }, {5, 1}, 18);
  gradcheck([&](const Tensor& x) { return sum(mul(softmax_columns(x), w)); }, {4, 3}, 19);
  gradcheck([&](const Tensor& x) { return softmax_cross_entropy(x, 2); }, {5, 1}, 20);
  gradcheck([&](const Tensor& x) { return sum(mul(layer_norm_columns(x, v4, v4), w)); },
            {4, 3}, 21);
  gradcheck([&](const Tensor& x) { return sum(layer_norm_columns(w, x, v4)); }, {4, 1}, 22);
  gradcheck([&](const Tensor& x) { return sum(layer_norm_columns(w, v4, x)); }, {4, 1}, 23);
}

TEST_CASE("gradient check for a composed model") {
  // two-layer tanh network ending in cross entropy, the shape the classifiers use
  Tensor w1 = Tensor::from(test_support::random_vector(12, 31), {4, 3});
  Tensor b1 = Tensor::from(test_support::random_vector(4, 32), {4, 1});
  Tensor w2 = Tensor::from(test_support::random_vector(8, 33), {2, 4});
  auto model = [&](const Tensor& x) {
    Tensor h = autodiff::tanh(add(matmul(w1, x), b1));
    return softmax_cross_entropy(matmul(w2, h), 1);
  };
  gradcheck(model, {3, 1}, 34);
}

TEST_CASE("input gradient of a linear score equals the weights") {
  auto wv = test_support::random_vector(6, 55);
  Tensor w = Tensor::from(wv, {1, 6});
  auto forward = [&](const Tensor& x) { return matmul(w, x); };
  auto x = test_support::random_vector(6, 56);
  auto g = input_gradient(forward, x, {6, 1}, 0);
  for (std::size_t i = 0; i < 6; ++i) CHECK(g[i] == Catch::Approx(wv[i]).epsilon(1e-14));
}

TEST_CASE("input gradient of a constant model is zero") {
  auto forward = [](const Tensor& x) {
    (void)x;
    return Tensor::from({1.0, -1.0}, {2, 1});
  };
  auto g = input_gradient(forward, {0.3, 0.4}, {2, 1}, 0);
  CHECK(g == std::vector<double>{0.0, 0.0});
}

TEST_CASE("backward is deterministic bit for bit") {
  auto run = [] {
    Tape tape;
    Tape::Scope scope(tape);
    Tensor w = Tensor::from(test_support::random_vector(20, 77), {4, 5});
    w.set_requires_grad(true);
    Tensor x = Tensor::from(test_support::random_vector(5, 78), {5, 1});
    x.set_requires_grad(true);
    Tensor h = sigmoid(matmul(w, x));
    Tensor loss = softmax_cross_entropy(h, 2);
    tape.backward(loss);
    auto g = w.grad();
    auto gx = x.grad();
    g.insert(g.end(), gx.begin(), gx.end());
    return g;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
