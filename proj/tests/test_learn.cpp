#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "dwl/learn.hpp"
#include "dwl/rng.hpp"

using namespace dwl;
using namespace dwl::learn;
using DTensor = nn::TensorT<double>;

namespace {

// Independent oracle: explicit telescoping sum of discounted TD residuals,
// cut at episode boundaries.
Advantage brute_force_gae(std::span<const double> r, std::span<const double> v,
                          std::span<const std::uint8_t> d, double gamma,
                          double lambda, double bootstrap) {
  const std::size_t T = r.size();
  Advantage out;
  out.advantage.assign(T, 0.0);
  out.ret.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = 0.0;
    double factor = 1.0;
    for (std::size_t l = t; l < T; ++l) {
      const double next_v = (l + 1 < T) ? v[l + 1] : bootstrap;
      const double nonterm = d[l] ? 0.0 : 1.0;
      const double delta = r[l] + gamma * next_v * nonterm - v[l];
      acc += factor * delta;
      if (d[l]) break;
      factor *= gamma * lambda;
    }
    out.advantage[t] = acc;
    out.ret[t] = acc + v[t];
  }
  return out;
}

}  // namespace

TEST_CASE("gae trivial cases") {
  const std::vector<double> r{1.0};
  const std::vector<double> v{0.0};
  const std::vector<std::uint8_t> d{1};
  const auto a = gae(r, v, d, 0.995, 0.95, 123.0);  // terminal: bootstrap ignored
  CHECK(a.advantage[0] == doctest::Approx(1.0));
  CHECK(a.ret[0] == doctest::Approx(1.0));

  const std::vector<double> rz(5, 0.0), vz(5, 0.0);
  const std::vector<std::uint8_t> dz(5, 0);
  const auto z = gae(rz, vz, dz, 0.995, 0.95, 0.0);
  for (double x : z.advantage) CHECK(x == 0.0);
  for (double x : z.ret) CHECK(x == 0.0);
}

TEST_CASE("gae matches the brute-force telescoping sum") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = rng.uniform_int(1, 8);
    std::vector<double> r(static_cast<std::size_t>(T)), v(static_cast<std::size_t>(T));
    std::vector<std::uint8_t> d(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      r[static_cast<std::size_t>(t)] = rng.uniform(-2, 2);
      v[static_cast<std::size_t>(t)] = rng.uniform(-2, 2);
      d[static_cast<std::size_t>(t)] = rng.uniform() < 0.25 ? 1 : 0;
    }
    const double boot = rng.uniform(-2, 2);
    const auto fast = gae(r, v, d, 0.995, 0.95, boot);
    const auto slow = brute_force_gae(r, v, d, 0.995, 0.95, boot);
    for (int t = 0; t < T; ++t) {
      CHECK(std::abs(fast.advantage[static_cast<std::size_t>(t)] -
                     slow.advantage[static_cast<std::size_t>(t)]) < 1e-10);
      CHECK(std::abs(fast.ret[static_cast<std::size_t>(t)] -
                     slow.ret[static_cast<std::size_t>(t)]) < 1e-10);
    }
  }
}

TEST_CASE("gae limits: lambda=1 is discounted Monte-Carlo, lambda=0 is one-step TD") {
  const std::vector<double> r{1.0, 2.0, -1.0, 0.5};
  const std::vector<double> v{0.3, -0.2, 0.7, 0.1};
  const std::vector<std::uint8_t> d{0, 0, 0, 0};
  const double gamma = 0.9, boot = 0.4;

  const auto mc = gae(r, v, d, gamma, 1.0, boot);
  for (std::size_t t = 0; t < r.size(); ++t) {
    double ret = 0.0;
    double g = 1.0;
    for (std::size_t l = t; l < r.size(); ++l) {
      ret += g * r[l];
      g *= gamma;
    }
    ret += g * boot;
    CHECK(mc.advantage[t] == doctest::Approx(ret - v[t]).epsilon(1e-12));
  }

  const auto td = gae(r, v, d, gamma, 0.0, boot);
  for (std::size_t t = 0; t < r.size(); ++t) {
    const double next_v = (t + 1 < v.size()) ? v[t + 1] : boot;
    CHECK(td.advantage[t] == doctest::Approx(r[t] + gamma * next_v - v[t]).epsilon(1e-12));
  }
}

TEST_CASE("denoise loss: reconstruction norm plus sparsity") {
  auto target = DTensor::from_data(1, 4, {1.0, -2.0, 0.5, 3.0});
  auto same = DTensor::from_data(1, 4, {1.0, -2.0, 0.5, 3.0});
  auto z0 = DTensor::zeros(1, 3);
  CHECK(denoise_loss(same, target, z0, 0.002).item() == doctest::Approx(0.0));

  // unit reconstruction residual
  auto off = DTensor::from_data(1, 4, {1.0 + 0.6, -2.0, 0.5 + 0.8, 3.0});
  CHECK(denoise_loss(off, target, z0, 0.002).item() == doctest::Approx(1.0));

  // perfect reconstruction with latent (1, -1, 0): 0.002 * 2 = 0.004
  auto z = DTensor::from_data(1, 3, {1.0, -1.0, 0.0});
  CHECK(denoise_loss(same, target, z, 0.002).item() == doctest::Approx(0.004));

  // squared variant
  CHECK(denoise_loss(off, target, z0, 0.002, true).item() == doctest::Approx(1.0));
}

TEST_CASE("ppo surrogate: clip arithmetic at c1=0.8, c2=1.2") {
  auto adv = [](double a) { return DTensor::from_data(1, 1, {a}); };
  auto logp = [](double r) { return DTensor::from_data(1, 1, {std::log(r)}); };
  auto zero = DTensor::from_data(1, 1, {0.0});

  // on-policy identity
  CHECK(ppo_surrogate(zero, zero, adv(1.0), 0.8, 1.2).item() == doctest::Approx(1.0));
  // ratio 2 with positive advantage clips at 1.2
  CHECK(ppo_surrogate(logp(2.0), zero, adv(1.0), 0.8, 1.2).item() ==
        doctest::Approx(1.2));
  // ratio 0.5 with negative advantage: min(-0.5, -0.8) takes the clipped
  // branch, the smaller (more pessimistic) objective value
  CHECK(ppo_surrogate(logp(0.5), zero, adv(-1.0), 0.8, 1.2).item() ==
        doctest::Approx(-0.8));
}

TEST_CASE("ppo surrogate: clip inactive inside [c1, c2]") {
  RngStream rng(7, 0);
  for (int i = 0; i < 200; ++i) {
    const double rho = rng.uniform(0.8, 1.2);
    const double a = rng.uniform(-3, 3);
    auto lp = DTensor::from_data(1, 1, {std::log(rho)});
    auto zero = DTensor::from_data(1, 1, {0.0});
    auto adv = DTensor::from_data(1, 1, {a});
    CHECK(ppo_surrogate(lp, zero, adv, 0.8, 1.2).item() ==
          doctest::Approx(rho * a).epsilon(1e-9));
  }
}

TEST_CASE("ppo surrogate is a lower bound on the unclipped objective") {
  RngStream rng(8, 0);
  for (int i = 0; i < 500; ++i) {
    const double rho = std::exp(rng.uniform(-2, 2));
    const double a = rng.uniform(-5, 5);
    auto lp = DTensor::from_data(1, 1, {std::log(rho)});
    auto zero = DTensor::from_data(1, 1, {0.0});
    auto adv = DTensor::from_data(1, 1, {a});
    CHECK(ppo_surrogate(lp, zero, adv, 0.8, 1.2).item() <= rho * a + 1e-12);
  }
}

TEST_CASE("value loss is the batch residual norm") {
  auto v = DTensor::from_data(3, 1, {1.0, 2.0, 3.0});
  auto same = DTensor::from_data(3, 1, {1.0, 2.0, 3.0});
  CHECK(value_loss(v, same).item() == doctest::Approx(0.0));

  // unit residual vector
  auto r1 = DTensor::from_data(3, 1, {1.0 + 0.6, 2.0, 3.0 - 0.8});
  CHECK(value_loss(v, r1).item() == doctest::Approx(1.0));

  // hand-computed residual norm
  auto r2 = DTensor::from_data(3, 1, {0.0, 0.0, 0.0});
  CHECK(value_loss(v, r2).item() == doctest::Approx(std::sqrt(1.0 + 4.0 + 9.0)));

  // squared variant: mean of squared residuals
  CHECK(value_loss(v, r2, true).item() == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));
}

TEST_CASE("combined loss: weighted sum with lambda_pi = lambda_v = 5") {
  auto one = DTensor::from_data(1, 1, {1.0});
  auto zero = DTensor::from_data(1, 1, {0.0});
  CHECK(dwl_total_loss(zero, zero, zero, 5.0, 5.0).item() == doctest::Approx(0.0));
  CHECK(dwl_total_loss(one, one, one, 5.0, 5.0).item() == doctest::Approx(11.0));
}

TEST_CASE("combined loss gradient decomposes linearly over components") {
  RngStream rng(9, 0);
  auto x = DTensor::zeros(1, 3, true);
  for (auto& v : x.values()) v = rng.normal();

  auto make_components = [&] {
    auto d = nn::mean(nn::square(x));
    auto p = nn::mean(nn::tanh_t(x));
    auto v = nn::mean(nn::abs_t(x));
    return std::tuple{d, p, v};
  };

  auto [d1, p1, v1] = make_components();
  auto total = dwl_total_loss(d1, p1, v1, 5.0, 5.0);
  x.zero_grad();
  total.backward();
  const auto g_total = x.grad();

  auto [d2, p2, v2] = make_components();
  x.zero_grad();
  d2.backward();
  const auto g_d = x.grad();
  x.zero_grad();
  p2.backward();
  const auto g_p = x.grad();
  x.zero_grad();
  v2.backward();
  const auto g_v = x.grad();

  for (std::size_t i = 0; i < g_total.size(); ++i) {
    CHECK(g_total[i] == doctest::Approx(g_d[i] + 5.0 * g_p[i] + 5.0 * g_v[i])
                            .epsilon(1e-10));
  }
}

TEST_CASE("gradcheck: full encoder-decoder and encoder-actor loss paths") {
  nn::NetConfig cfg;
  cfg.obs_dim = 7;
  cfg.state_dim = 13;
  cfg.action_dim = 3;
  cfg.gru_hidden = 12;
  cfg.emb_hidden = 10;
  cfg.latent_dim = 4;
  cfg.decoder_hidden = 8;
  cfg.actor_hidden = 6;
  cfg.critic_hidden = {8, 8, 4};

  for (int seed = 0; seed < 20; ++seed) {
    nn::DwlNetsT<double> nets;
    RngStream rng(static_cast<std::uint64_t>(seed), 77);
    nets.init(cfg, rng);

    RngStream data(static_cast<std::uint64_t>(seed), 78);
    auto obs0 = DTensor::zeros(2, 7);
    auto obs1 = DTensor::zeros(2, 7);
    auto target = DTensor::zeros(2, 13);
    auto action = DTensor::zeros(2, 3);
    auto logp_old = DTensor::zeros(2, 1);
    auto adv = DTensor::zeros(2, 1);
    for (auto* t : {&obs0, &obs1}) {
      for (auto& v : t->values()) v = data.normal();
    }
    for (auto& v : target.values()) v = data.normal();
    for (auto& v : action.values()) v = data.normal();
    for (auto& v : logp_old.values()) v = -2.0 + 0.3 * data.normal();
    for (auto& v : adv.values()) v = data.normal();

    auto denoise_path = [&] {
      auto h = DTensor::zeros(2, cfg.gru_hidden);
      auto [z0, h1] = nets.encode(obs0, h);
      auto [z1, h2] = nets.encode(obs1, h1);
      (void)z0;
      (void)h2;
      return denoise_loss(nets.decode(z1), target, z1, 0.002);
    };
    auto actor_path = [&] {
      auto h = DTensor::zeros(2, cfg.gru_hidden);
      auto [z, h1] = nets.encode(obs0, h);
      (void)h1;
      auto mean = nets.actor_mean(z);
      auto lp = nets.head.log_prob(mean, action);
      auto surr = ppo_surrogate(lp, logp_old, adv, 0.8, 1.2);
      return nn::neg(nn::add(surr, nn::scalar_mul(nets.head.entropy(), 0.005)));
    };

    // finite differences on a deterministic subsample of each parameter
    for (auto path : {0, 1}) {
      auto loss_fn = [&]() { return path == 0 ? denoise_path() : actor_path(); };
      auto l = loss_fn();
      nets.store.zero_grad();
      l.backward();
      RngStream pick(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(path));
      const double eps = 1e-5;
      for (auto& p : nets.store.params()) {
        if (p.name().rfind("critic.", 0) == 0) continue;
        const auto& g = p.grad();
        for (int probe = 0; probe < 3; ++probe) {
          const std::size_t i =
              static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(p.size()) - 1));
          const double saved = p.values()[i];
          p.values()[i] = saved + eps;
          const double up = loss_fn().item();
          p.values()[i] = saved - eps;
          const double down = loss_fn().item();
          p.values()[i] = saved;
          const double fd = (up - down) / (2.0 * eps);
          const double denom = std::max({1.0, std::abs(fd), std::abs(g[i])});
          CHECK(std::abs(fd - g[i]) / denom <= 1e-4);
        }
      }
    }
  }
}

TEST_CASE("the actor path is independent of privileged state") {
  nn::NetConfig cfg;
  cfg.obs_dim = 5;
  cfg.state_dim = 9;
  cfg.action_dim = 2;
  cfg.gru_hidden = 6;
  cfg.emb_hidden = 6;
  cfg.latent_dim = 3;
  cfg.decoder_hidden = 4;
  cfg.actor_hidden = 4;
  cfg.critic_hidden = {4, 4, 4};

  nn::DwlNetsT<float> nets;
  RngStream rng(3, 0);
  nets.init(cfg, rng);

  auto obs = nn::TensorT<float>::filled(1, 5, 0.5f);
  auto state = nn::TensorT<float>::filled(1, 9, 0.5f);
  auto h = nn::TensorT<float>::zeros(1, 6);
  auto [z, hn] = nets.encode(obs, h);
  auto mean = nets.actor_mean(z);
  auto value = nets.value(state);

  // structural: the action mean's graph reaches the observation but not the
  // privileged state tensor
  CHECK(mean.depends_on(obs));
  CHECK_FALSE(mean.depends_on(state));
  CHECK(value.depends_on(state));

  // behavioral: perturbing privileged channels cannot move the action
  auto state2 = nn::TensorT<float>::filled(1, 9, -77.0f);
  auto h2 = nn::TensorT<float>::zeros(1, 6);
  auto [z2, hn2] = nets.encode(obs, h2);
  auto mean2 = nets.actor_mean(z2);
  CHECK(mean.values() == mean2.values());
  (void)hn;
  (void)hn2;
  (void)state2;
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  hp.validate();
  hp.clip_low = 1.1;
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  hp = Hyperparams{};
  hp.algo = "sac";
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  hp = Hyperparams{};
  hp.minibatches = 1000;
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
}
