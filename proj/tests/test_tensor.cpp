#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <functional>
#include <vector>

#include "dwl/nets.hpp"
#include "dwl/rng.hpp"
#include "dwl/tensor.hpp"

using namespace dwl;
using dwl::nn::TensorT;
using DTensor = TensorT<double>;

namespace {

// Central finite differences against the recorded backward pass. The loss
// builder must rebuild the graph from the leaf values on every call.
void gradcheck(std::vector<DTensor> leaves, const std::function<DTensor()>& loss,
               double tol = 1e-4, double eps = 1e-5) {
  auto l = loss();
  for (auto& leaf : leaves) leaf.zero_grad();
  l.zero_grad();
  l.backward();

  for (auto& leaf : leaves) {
    const std::vector<double> analytic = leaf.grad();
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.values()[i];
      leaf.values()[i] = saved + eps;
      const double up = loss().item();
      leaf.values()[i] = saved - eps;
      const double down = loss().item();
      leaf.values()[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
      CHECK(std::abs(fd - analytic[i]) / denom <= tol);
    }
  }
}

DTensor random_tensor(int r, int c, RngStream& rng, bool grad = true,
                      double scale = 1.0) {
  DTensor t = DTensor::zeros(r, c, grad);
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("elementwise forward values") {
  using nn::elu;
  auto x = DTensor::from_data(1, 3, {0.0, 1.0, -40.0});
  auto y = elu(x, 1.0);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 1.0);
  CHECK(y(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));  // alpha asymptote

  auto s = nn::sigmoid(DTensor::from_data(1, 1, {0.0}));
  CHECK(s.item() == doctest::Approx(0.5));
  auto cl = nn::clip(DTensor::from_data(1, 3, {0.5, 1.5, -2.0}), 0.0, 1.0);
  CHECK(cl(0, 0) == 0.5);
  CHECK(cl(0, 1) == 1.0);
  CHECK(cl(0, 2) == 0.0);
}

TEST_CASE("backward on a non-scalar is an error") {
  auto x = DTensor::zeros(2, 3, true);
  CHECK_THROWS_AS(x.backward(), std::invalid_argument);
}

TEST_CASE("linear map gradient: d sum(x W) / dW is structured by x") {
  RngStream rng(1, 0);
  auto x = random_tensor(4, 3, rng, /*grad=*/false);
  auto W = random_tensor(3, 2, rng);
  auto loss = nn::sum(nn::matmul(x, W));
  loss.backward();
  // each W(i, j) sees the column sum of x(:, i)
  for (int i = 0; i < 3; ++i) {
    double colsum = 0;
    for (int r = 0; r < 4; ++r) colsum += x(r, i);
    for (int j = 0; j < 2; ++j) {
      CHECK(W.grad()[static_cast<std::size_t>(i * 2 + j)] ==
            doctest::Approx(colsum).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradients accumulate across repeated backward calls") {
  auto x = DTensor::from_data(1, 2, {1.0, 2.0}, true);
  auto loss = nn::sum(nn::square(x));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("no-grad mode records no graph") {
  auto x = DTensor::from_data(1, 2, {1.0, 2.0}, true);
  nn::NoGradGuard ng;
  auto y = nn::sum(nn::square(x));
  CHECK(y.parents().empty());
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("gradcheck: every primitive op") {
  RngStream rng(2, 0);
  auto A = random_tensor(3, 4, rng);
  auto B = random_tensor(4, 2, rng);
  auto C = random_tensor(3, 4, rng);
  auto v = random_tensor(1, 4, rng);
  auto m = random_tensor(3, 1, rng);

  gradcheck({A, B}, [&] { return nn::sum(nn::matmul(A, B)); });
  gradcheck({A, C}, [&] { return nn::sum(nn::mul(nn::add(A, C), nn::sub(A, C))); });
  gradcheck({A, v}, [&] { return nn::sum(nn::add_rowvec(A, v)); });
  gradcheck({A, v}, [&] { return nn::sum(nn::mul_rowvec(A, v)); });
  gradcheck({A, m}, [&] { return nn::sum(nn::scale_rows(A, m)); });
  gradcheck({A}, [&] { return nn::mean(nn::sigmoid(A)); });
  gradcheck({A}, [&] { return nn::mean(nn::tanh_t(A)); });
  gradcheck({A}, [&] { return nn::mean(nn::elu(A, 1.0)); });
  gradcheck({A}, [&] { return nn::sum(nn::exp_t(nn::scalar_mul(A, 0.3))); });
  gradcheck({A}, [&] { return nn::sum(nn::square(A)); });
  gradcheck({A}, [&] { return nn::sum(nn::row_sum(nn::square(A))); });
  gradcheck({A}, [&] { return nn::mean(nn::sqrt_t(nn::scalar_add(nn::square(A), 1.0))); });
  gradcheck({A, C}, [&] { return nn::sum(nn::minimum(A, C)); });
  gradcheck({A}, [&] { return nn::sum(nn::clip(A, -0.5, 0.5)); });
  gradcheck({A}, [&] { return nn::sum(nn::abs_t(A)); });

  auto pos = random_tensor(2, 3, rng);
  for (auto& x : pos.values()) x = std::abs(x) + 0.5;
  gradcheck({pos}, [&] { return nn::sum(nn::log_t(pos)); });
}

TEST_CASE("gru with zero parameters maps zero hidden state to zero") {
  nn::ParamStoreT<double> store;
  RngStream rng(3, 0);
  nn::GruCellT<double> gru;
  gru.init(store, "g", 4, 5, rng);
  for (auto& p : store.params()) {
    for (auto& v : p.values()) v = 0.0;
  }
  auto x = random_tensor(2, 4, rng, false);
  auto h = DTensor::zeros(2, 5);
  auto hn = gru.step(x, h);
  for (double v : hn.values()) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("gru hidden state stays inside (-1, 1)") {
  nn::ParamStoreT<double> store;
  RngStream rng(4, 0);
  nn::GruCellT<double> gru;
  gru.init(store, "g", 6, 8, rng);
  auto h = DTensor::zeros(3, 8);
  for (int t = 0; t < 50; ++t) {
    auto x = random_tensor(3, 6, rng, false, 5.0);
    h = gru.step(x, h);
    for (double v : h.values()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("gradcheck: gru step through time") {
  nn::ParamStoreT<double> store;
  RngStream rng(5, 0);
  nn::GruCellT<double> gru;
  gru.init(store, "g", 3, 4, rng);
  auto x0 = random_tensor(2, 3, rng, false);
  auto x1 = random_tensor(2, 3, rng, false);
  std::vector<DTensor> leaves(store.params().begin(), store.params().end());
  gradcheck(leaves, [&] {
    auto h = DTensor::zeros(2, 4);
    h = gru.step(x0, h);
    h = gru.step(x1, h);
    return nn::mean(nn::square(h));
  });
}

TEST_CASE("zero-weight affine passes zero gradient to its input") {
  RngStream rng(6, 0);
  auto x = random_tensor(2, 3, rng);
  auto W = DTensor::zeros(3, 2, true);
  auto loss = nn::sum(nn::matmul(x, W));
  loss.backward();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("forward determinism: identical inputs give identical outputs") {
  nn::ParamStoreT<double> store;
  RngStream rng(7, 0);
  nn::MlpT<double> mlp;
  mlp.init(store, "m", {5, 8, 3}, rng);
  auto x = random_tensor(4, 5, rng, false);
  auto a = mlp.forward(x);
  auto b = mlp.forward(x);
  CHECK(a.values() == b.values());
}

TEST_CASE("graph introspection tracks dependencies") {
  RngStream rng(8, 0);
  auto a = random_tensor(2, 2, rng);
  auto b = random_tensor(2, 2, rng);
  auto c = nn::add(a, b);
  auto d = nn::sum(nn::square(c));
  CHECK(d.depends_on(a));
  CHECK(d.depends_on(b));
  CHECK_FALSE(a.depends_on(d));
  auto unrelated = random_tensor(2, 2, rng);
  CHECK_FALSE(d.depends_on(unrelated));
}
