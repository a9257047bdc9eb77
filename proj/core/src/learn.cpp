#include "dwl/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace dwl::learn {

using nn::NoGradGuard;
using Tensor = nn::TensorT<float>;

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("Hyperparams: gamma");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("Hyperparams: gae_lambda");
  }
  if (!(clip_low < 1.0 && 1.0 < clip_high)) {
    throw std::invalid_argument("Hyperparams: need c1 < 1 < c2");
  }
  if (epochs <= 0 || num_envs <= 0 || horizon <= 0 || updates < 0) {
    throw std::invalid_argument("Hyperparams: loop counts must be positive");
  }
  if (minibatches <= 0 || minibatches > num_envs) {
    throw std::invalid_argument("Hyperparams: minibatches must divide the env set");
  }
  if (algo != "dwl" && algo != "ppo") {
    throw std::invalid_argument("Hyperparams: algo must be 'dwl' or 'ppo'");
  }
}

Advantage gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda,
              double bootstrap_value) {
  const std::size_t T = rewards.size();
  if (values.size() != T || dones.size() != T) {
    throw std::invalid_argument("gae: sequence lengths disagree");
  }
  Advantage out;
  out.advantage.assign(T, 0.0);
  out.ret.assign(T, 0.0);
  double running = 0.0;
  for (std::size_t i = T; i-- > 0;) {
    const double next_value = (i + 1 < T) ? values[i + 1] : bootstrap_value;
    const double nonterminal = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * nonterminal - values[i];
    running = delta + gamma * lambda * nonterminal * running;
    out.advantage[i] = running;
    out.ret[i] = running + values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

Agent Agent::make(const std::string& algo, const nn::NetConfig& cfg,
                  std::uint64_t seed) {
  Agent a;
  a.algo = algo;
  a.net_cfg = cfg;
  RngStream rng(seed, 0x9e1);
  if (algo == "dwl") {
    a.dwl = std::make_unique<nn::DwlNetsT<float>>();
    a.dwl->init(cfg, rng);
  } else if (algo == "ppo") {
    a.baseline = std::make_unique<nn::BaselineNetsT<float>>();
    a.baseline->init(cfg, rng);
  } else {
    throw std::invalid_argument("Agent: unknown algo '" + algo + "'");
  }
  return a;
}

nn::ParamStoreT<float>& Agent::store() {
  return dwl ? dwl->store : baseline->store;
}
const nn::ParamStoreT<float>& Agent::store() const {
  return dwl ? dwl->store : baseline->store;
}

const nn::TensorT<float>& Agent::log_std() const {
  return dwl ? dwl->head.log_std : baseline->head.log_std;
}

std::pair<Tensor, Tensor> Agent::policy_step(const Tensor& obs,
                                             const Tensor& hidden) const {
  if (dwl) {
    auto [z, h] = dwl->encode(obs, hidden);
    return {dwl->actor_mean(z), h};
  }
  return baseline->actor_mean(obs, hidden);
}

Tensor Agent::values(const Tensor& states) const {
  return dwl ? dwl->value(states) : baseline->value(states);
}

Agent::RolloutEval Agent::rollout_eval(const Tensor& obs, const Tensor& hidden,
                                       const Tensor& states) const {
  RolloutEval out;
  if (dwl) {
    auto [z, h] = dwl->encode(obs, hidden);
    out.mean = dwl->actor_mean(z);
    out.hidden = h;
    auto recon = dwl->decode(z);
    const float* r = recon.data();
    const float* s = states.data();
    double sq = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
      const double d = static_cast<double>(r[i]) - static_cast<double>(s[i]);
      sq += d * d;
    }
    out.recon_sq_sum = sq;
    out.recon_count = recon.size();
  } else {
    auto [mean, h] = baseline->actor_mean(obs, hidden);
    out.mean = mean;
    out.hidden = h;
  }
  out.value = values(states);
  return out;
}

nn::Checkpoint Agent::checkpoint(std::map<std::string, std::string> extra_meta) const {
  std::map<std::string, std::string> meta = std::move(extra_meta);
  meta["algo"] = algo;
  meta["obs_dim"] = std::to_string(net_cfg.obs_dim);
  meta["state_dim"] = std::to_string(net_cfg.state_dim);
  meta["action_dim"] = std::to_string(net_cfg.action_dim);
  meta["gru_hidden"] = std::to_string(net_cfg.gru_hidden);
  meta["emb_hidden"] = std::to_string(net_cfg.emb_hidden);
  meta["latent_dim"] = std::to_string(net_cfg.latent_dim);
  meta["decoder_hidden"] = std::to_string(net_cfg.decoder_hidden);
  meta["actor_hidden"] = std::to_string(net_cfg.actor_hidden);
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s;
  };
  meta["critic_hidden"] = join(net_cfg.critic_hidden);
  meta["baseline_hidden"] = join(net_cfg.baseline_hidden);
  return nn::make_checkpoint(store(), std::move(meta));
}

Agent Agent::from_checkpoint(const nn::Checkpoint& ckpt) {
  auto get = [&](const std::string& key) -> std::string {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) {
      throw std::runtime_error("checkpoint: missing meta key " + key);
    }
    return it->second;
  };
  auto split_ints = [](const std::string& s) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      const std::size_t comma = s.find(',', pos);
      out.push_back(std::stoi(s.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  nn::NetConfig cfg;
  cfg.obs_dim = std::stoi(get("obs_dim"));
  cfg.state_dim = std::stoi(get("state_dim"));
  cfg.action_dim = std::stoi(get("action_dim"));
  cfg.gru_hidden = std::stoi(get("gru_hidden"));
  cfg.emb_hidden = std::stoi(get("emb_hidden"));
  cfg.latent_dim = std::stoi(get("latent_dim"));
  cfg.decoder_hidden = std::stoi(get("decoder_hidden"));
  cfg.actor_hidden = std::stoi(get("actor_hidden"));
  cfg.critic_hidden = split_ints(get("critic_hidden"));
  cfg.baseline_hidden = split_ints(get("baseline_hidden"));
  Agent a = Agent::make(get("algo"), cfg, 0);
  nn::restore_params(a.store(), ckpt);
  return a;
}

// ---------------------------------------------------------------------------
// Rollout buffer and metrics
// ---------------------------------------------------------------------------

void RolloutBuffer::resize(int T, int N, int od, int sd, int ad, int hd) {
  horizon = T;
  num_envs = N;
  obs_dim = od;
  state_dim = sd;
  action_dim = ad;
  hidden_dim = hd;
  const std::size_t tn = static_cast<std::size_t>(T) * N;
  obs.assign(tn * od, 0.f);
  state.assign(tn * sd, 0.f);
  action.assign(tn * ad, 0.f);
  logp.assign(tn, 0.f);
  reward.assign(tn, 0.0);
  value.assign(tn, 0.f);
  done.assign(tn, 0);
  h0.assign(static_cast<std::size_t>(N) * hd, 0.f);
  advantage.assign(tn, 0.f);
  ret.assign(tn, 0.f);
}

const std::vector<std::string>& MetricsRow::columns() {
  static const std::vector<std::string> cols = {
      "update",     "wall_time_s", "mean_return",  "mean_ep_len",
      "fall_rate",  "loss_denoise", "loss_policy", "loss_value",
      "loss_total", "recon_mse",   "explained_var"};
  return cols;
}

std::vector<double> MetricsRow::numeric_values() const {
  return {static_cast<double>(update),
          mean_return,
          mean_ep_len,
          fall_rate,
          loss_denoise,
          loss_policy,
          loss_value,
          loss_total,
          recon_mse,
          explained_var};
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(EnvFactory factory, const nn::NetConfig& net_cfg,
                 const Hyperparams& hp, std::uint64_t seed, int workers)
    : hp_(hp),
      seed_(seed),
      workers_(std::max(1, workers)),
      agent_(Agent::make(hp.algo, net_cfg, seed)),
      shuffle_rng_(seed, 0x5151) {
  hp_.validate();
  envs_.reserve(static_cast<std::size_t>(hp.num_envs));
  for (int i = 0; i < hp.num_envs; ++i) {
    envs_.push_back(factory(static_cast<std::uint64_t>(i)));
  }
  const auto& ec = envs_.front()->config();
  if (ec.obs_dim() != net_cfg.obs_dim || ec.state_dim() != net_cfg.state_dim ||
      ec.joint_count != net_cfg.action_dim) {
    throw std::invalid_argument("Trainer: network dims disagree with the environment");
  }
  for (int i = 0; i < hp.num_envs; ++i) {
    action_rngs_.emplace_back(seed ^ 0xAC7100ULL, static_cast<std::uint64_t>(i));
  }
  buf_.resize(hp.horizon, hp.num_envs, net_cfg.obs_dim, net_cfg.state_dim,
              net_cfg.action_dim, net_cfg.gru_hidden);
  hidden_.assign(static_cast<std::size_t>(hp.num_envs) * net_cfg.gru_hidden, 0.f);
  chan_mean_.assign(static_cast<std::size_t>(net_cfg.state_dim), 0.0);
  chan_m2_.assign(static_cast<std::size_t>(net_cfg.state_dim), 0.0);
  ep_return_.assign(static_cast<std::size_t>(hp.num_envs), 0.0);
  ep_len_.assign(static_cast<std::size_t>(hp.num_envs), 0);
  optimizer_ = std::make_unique<nn::AdamT<float>>(agent_.store(), hp.learning_rate);
  start_time_ = std::chrono::steady_clock::now();
}

void Trainer::collect_rollout() {
  const int N = hp_.num_envs;
  const int T = hp_.horizon;
  const int H = agent_.hidden_dim();
  const int A = buf_.action_dim;

  buf_.h0 = hidden_;
  double recon_sq = 0.0;
  std::size_t recon_n = 0;
  std::vector<double> completed_returns;
  std::vector<int> completed_lens;
  int completed_falls = 0;

  std::vector<double> action_buf(static_cast<std::size_t>(A));
  for (int t = 0; t < T; ++t) {
    // pack current observations and states
    Tensor obs_t = Tensor::zeros(N, buf_.obs_dim);
    Tensor state_t = Tensor::zeros(N, buf_.state_dim);
    for (int n = 0; n < N; ++n) {
      const auto& o = envs_[static_cast<std::size_t>(n)]->observation();
      const auto& s = envs_[static_cast<std::size_t>(n)]->state();
      float* orow = buf_.obs_row(t, n);
      float* srow = buf_.state_row(t, n);
      for (int i = 0; i < buf_.obs_dim; ++i) {
        orow[i] = static_cast<float>(o[static_cast<std::size_t>(i)]);
      }
      for (int i = 0; i < buf_.state_dim; ++i) {
        srow[i] = static_cast<float>(s[static_cast<std::size_t>(i)]);
      }
      std::copy(orow, orow + buf_.obs_dim, obs_t.data() + static_cast<std::size_t>(n) * buf_.obs_dim);
      std::copy(srow, srow + buf_.state_dim,
                state_t.data() + static_cast<std::size_t>(n) * buf_.state_dim);
    }

    Tensor mean, value;
    {
      NoGradGuard ng;
      Tensor hidden_t = Tensor::from_data(N, H, hidden_);
      auto ev = agent_.rollout_eval(obs_t, hidden_t, state_t);
      mean = ev.mean;
      value = ev.value;
      std::copy(ev.hidden.data(), ev.hidden.data() + hidden_.size(), hidden_.begin());
      recon_sq += ev.recon_sq_sum;
      recon_n += ev.recon_count;
    }

    // sample actions and compute behavior log-probs
    const float* ls = agent_.log_std().data();
    double logdet = 0.0;
    for (int a = 0; a < A; ++a) logdet += ls[a];
    const double log_two_pi = std::log(2.0 * 3.14159265358979323846);
    for (int n = 0; n < N; ++n) {
      double quad = 0.0;
      float* arow = buf_.action_row(t, n);
      for (int a = 0; a < A; ++a) {
        const double sigma = std::exp(static_cast<double>(ls[a]));
        const double eps = action_rngs_[static_cast<std::size_t>(n)].normal();
        const double mu = static_cast<double>(mean(n, a));
        arow[a] = static_cast<float>(mu + sigma * eps);
        quad += eps * eps;
      }
      buf_.logp[buf_.flat(t, n)] =
          static_cast<float>(-0.5 * quad - logdet - 0.5 * A * log_two_pi);
      buf_.value[buf_.flat(t, n)] = value(n, 0);
    }

    // step environments (independent instances; split across workers)
    std::vector<env::StepInfo> infos(static_cast<std::size_t>(N));
    auto run_range = [&](int lo, int hi) {
      std::vector<double> act(static_cast<std::size_t>(A));
      for (int n = lo; n < hi; ++n) {
        const float* arow = buf_.action_row(t, n);
        for (int a = 0; a < A; ++a) act[static_cast<std::size_t>(a)] = arow[a];
        infos[static_cast<std::size_t>(n)] = envs_[static_cast<std::size_t>(n)]->step(act);
      }
    };
    if (workers_ <= 1 || N < 2 * workers_) {
      run_range(0, N);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (N + workers_ - 1) / workers_;
      for (int w = 0; w < workers_; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(N, lo + chunk);
        if (lo < hi) pool.emplace_back(run_range, lo, hi);
      }
      for (auto& th : pool) th.join();
    }

    for (int n = 0; n < N; ++n) {
      const auto& info = infos[static_cast<std::size_t>(n)];
      buf_.reward[buf_.flat(t, n)] = info.reward;
      buf_.done[buf_.flat(t, n)] = info.done ? 1 : 0;
      ep_return_[static_cast<std::size_t>(n)] += info.reward;
      ep_len_[static_cast<std::size_t>(n)] += 1;
      if (info.done) {
        completed_returns.push_back(ep_return_[static_cast<std::size_t>(n)]);
        completed_lens.push_back(ep_len_[static_cast<std::size_t>(n)]);
        if (info.fall) ++completed_falls;
        ep_return_[static_cast<std::size_t>(n)] = 0.0;
        ep_len_[static_cast<std::size_t>(n)] = 0;
        envs_[static_cast<std::size_t>(n)]->reset();
        std::fill(hidden_.begin() + static_cast<std::size_t>(n) * H,
                  hidden_.begin() + static_cast<std::size_t>(n + 1) * H, 0.f);
      }
    }
  }

  rollout_recon_mse_ = recon_n ? recon_sq / static_cast<double>(recon_n) : 0.0;

  if (hp_.denoise_normalized) {
    // fold the window's states into the running channel statistics
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n) {
        const float* row = buf_.state_row(t, n);
        chan_count_ += 1.0;
        for (int i = 0; i < buf_.state_dim; ++i) {
          const double x = row[i];
          const double d = x - chan_mean_[static_cast<std::size_t>(i)];
          chan_mean_[static_cast<std::size_t>(i)] += d / chan_count_;
          chan_m2_[static_cast<std::size_t>(i)] +=
              d * (x - chan_mean_[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  if (!completed_returns.empty()) {
    last_mean_return_ =
        std::accumulate(completed_returns.begin(), completed_returns.end(), 0.0) /
        static_cast<double>(completed_returns.size());
    last_mean_len_ = std::accumulate(completed_lens.begin(), completed_lens.end(), 0.0) /
                     static_cast<double>(completed_lens.size());
    last_fall_rate_ = static_cast<double>(completed_falls) /
                      static_cast<double>(completed_returns.size());
  }
}

void Trainer::compute_advantages() {
  const int N = hp_.num_envs;
  const int T = hp_.horizon;

  // bootstrap values for the state after the last step
  std::vector<float> boot(static_cast<std::size_t>(N), 0.f);
  {
    NoGradGuard ng;
    Tensor state_T = Tensor::zeros(N, buf_.state_dim);
    for (int n = 0; n < N; ++n) {
      const auto& s = envs_[static_cast<std::size_t>(n)]->state();
      for (int i = 0; i < buf_.state_dim; ++i) {
        state_T(n, i) = static_cast<float>(s[static_cast<std::size_t>(i)]);
      }
    }
    Tensor v = agent_.values(state_T);
    for (int n = 0; n < N; ++n) boot[static_cast<std::size_t>(n)] = v(n, 0);
  }

  std::vector<double> rew(static_cast<std::size_t>(T));
  std::vector<double> val(static_cast<std::size_t>(T));
  std::vector<std::uint8_t> don(static_cast<std::size_t>(T));
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      rew[static_cast<std::size_t>(t)] = buf_.reward[buf_.flat(t, n)];
      val[static_cast<std::size_t>(t)] = buf_.value[buf_.flat(t, n)];
      don[static_cast<std::size_t>(t)] = buf_.done[buf_.flat(t, n)];
    }
    // when the last step ended an episode the recursion drops the bootstrap
    const Advantage adv =
        gae(rew, val, don, hp_.gamma, hp_.gae_lambda,
            static_cast<double>(boot[static_cast<std::size_t>(n)]));
    for (int t = 0; t < T; ++t) {
      buf_.advantage[buf_.flat(t, n)] = static_cast<float>(adv.advantage[static_cast<std::size_t>(t)]);
      buf_.ret[buf_.flat(t, n)] = static_cast<float>(adv.ret[static_cast<std::size_t>(t)]);
    }
  }

  // explained variance of the value predictions
  const std::size_t tn = buf_.ret.size();
  double mean_ret = 0.0, mean_res = 0.0;
  for (std::size_t i = 0; i < tn; ++i) {
    mean_ret += buf_.ret[i];
    mean_res += buf_.ret[i] - buf_.value[i];
  }
  mean_ret /= static_cast<double>(tn);
  mean_res /= static_cast<double>(tn);
  double var_ret = 0.0, var_res = 0.0;
  for (std::size_t i = 0; i < tn; ++i) {
    const double dr = buf_.ret[i] - mean_ret;
    var_ret += dr * dr;
    const double res = buf_.ret[i] - buf_.value[i] - mean_res;
    var_res += res * res;
  }
  explained_var_ = var_ret > 0.0 ? 1.0 - var_res / var_ret : 0.0;

  if (hp_.normalize_advantage) {
    double m = 0.0;
    for (float a : buf_.advantage) m += a;
    m /= static_cast<double>(tn);
    double v = 0.0;
    for (float a : buf_.advantage) v += (a - m) * (a - m);
    const double sd = std::sqrt(v / static_cast<double>(tn)) + 1e-8;
    for (auto& a : buf_.advantage) a = static_cast<float>((a - m) / sd);
  }
}

Trainer::LearnStats Trainer::learn_epochs() {
  const int N = hp_.num_envs;
  const int T = hp_.horizon;
  const int H = agent_.hidden_dim();
  const int A = buf_.action_dim;
  const float c1 = static_cast<float>(hp_.clip_low);
  const float c2 = static_cast<float>(hp_.clip_high);
  const bool use_denoise = agent_.algo == "dwl" && hp_.denoise_enabled;

  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);

  Tensor chan_scale;
  if (use_denoise && hp_.denoise_normalized && chan_count_ > 1.0) {
    chan_scale = Tensor::zeros(1, buf_.state_dim);
    for (int i = 0; i < buf_.state_dim; ++i) {
      const double var = chan_m2_[static_cast<std::size_t>(i)] / chan_count_;
      chan_scale(0, i) = static_cast<float>(1.0 / (std::sqrt(var) + 0.05));
    }
  }

  LearnStats stats;
  int stat_count = 0;

  for (int epoch = 0; epoch < hp_.epochs; ++epoch) {
    // Fisher-Yates with the deterministic stream
    for (int i = N - 1; i > 0; --i) {
      const int j = shuffle_rng_.uniform_int(0, i);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const int per_mb = N / hp_.minibatches;
    for (int mb = 0; mb < hp_.minibatches; ++mb) {
      const int lo = mb * per_mb;
      const int hi = (mb + 1 == hp_.minibatches) ? N : lo + per_mb;
      const int B = hi - lo;
      std::span<const int> ids(order.data() + lo, static_cast<std::size_t>(B));

      // initial hidden (post-reset snapshot) as a constant input
      Tensor h = Tensor::zeros(B, H);
      for (int b = 0; b < B; ++b) {
        const int n = ids[static_cast<std::size_t>(b)];
        std::copy(buf_.h0.begin() + static_cast<std::size_t>(n) * H,
                  buf_.h0.begin() + static_cast<std::size_t>(n + 1) * H,
                  h.data() + static_cast<std::size_t>(b) * H);
      }

      Tensor surr_sum, denoise_sum, vsq_sum;
      for (int t = 0; t < T; ++t) {
        Tensor x = Tensor::zeros(B, buf_.obs_dim);
        Tensor st = Tensor::zeros(B, buf_.state_dim);
        Tensor act = Tensor::zeros(B, A);
        Tensor logp_old = Tensor::zeros(B, 1);
        Tensor adv = Tensor::zeros(B, 1);
        Tensor ret = Tensor::zeros(B, 1);
        Tensor mask = Tensor::filled(B, 1, 1.f);
        bool any_reset = false;
        for (int b = 0; b < B; ++b) {
          const int n = ids[static_cast<std::size_t>(b)];
          std::copy(buf_.obs_row(t, n), buf_.obs_row(t, n) + buf_.obs_dim,
                    x.data() + static_cast<std::size_t>(b) * buf_.obs_dim);
          std::copy(buf_.state_row(t, n), buf_.state_row(t, n) + buf_.state_dim,
                    st.data() + static_cast<std::size_t>(b) * buf_.state_dim);
          std::copy(buf_.action_row(t, n), buf_.action_row(t, n) + A,
                    act.data() + static_cast<std::size_t>(b) * A);
          logp_old(b, 0) = buf_.logp[buf_.flat(t, n)];
          adv(b, 0) = buf_.advantage[buf_.flat(t, n)];
          ret(b, 0) = buf_.ret[buf_.flat(t, n)];
          if (t > 0 && buf_.done[buf_.flat(t - 1, n)]) {
            mask(b, 0) = 0.f;
            any_reset = true;
          }
        }
        if (any_reset) h = scale_rows(h, mask);

        Tensor mean_t, logp_new, den_t;
        if (agent_.algo == "dwl") {
          auto [z, hn] = agent_.dwl->encode(x, h);
          h = hn;
          mean_t = agent_.dwl->actor_mean(z);
          if (use_denoise) {
            den_t = denoise_loss(agent_.dwl->decode(z), st, z,
                                 static_cast<float>(hp_.lambda_r), hp_.squared_l2,
                                 chan_scale.defined() ? &chan_scale : nullptr);
          }
          logp_new = agent_.dwl->head.log_prob(mean_t, act);
        } else {
          auto [mean_b, hn] = agent_.baseline->actor_mean(x, h);
          h = hn;
          mean_t = mean_b;
          logp_new = agent_.baseline->head.log_prob(mean_t, act);
        }

        auto surr_t = ppo_surrogate(logp_new, logp_old, adv, c1, c2);
        auto v = agent_.values(st);
        auto vsq_t = sum(square(sub(v, ret)));

        surr_sum = surr_sum.defined() ? add(surr_sum, surr_t) : surr_t;
        vsq_sum = vsq_sum.defined() ? add(vsq_sum, vsq_t) : vsq_t;
        if (use_denoise) {
          denoise_sum = denoise_sum.defined() ? add(denoise_sum, den_t) : den_t;
        }
      }

      const float inv_T = 1.f / static_cast<float>(T);
      auto policy_obj = scalar_mul(surr_sum, inv_T);
      auto entropy = agent_.algo == "dwl" ? agent_.dwl->head.entropy()
                                          : agent_.baseline->head.entropy();
      auto policy_descent = neg(
          add(policy_obj, scalar_mul(entropy, static_cast<float>(hp_.entropy_coef))));
      Tensor value_l = hp_.squared_l2
                           ? scalar_mul(vsq_sum, 1.f / static_cast<float>(B * T))
                           : sqrt_t(vsq_sum);
      Tensor denoise_l =
          use_denoise ? scalar_mul(denoise_sum, inv_T) : Tensor::scalar(0.f);
      auto total =
          dwl_total_loss(denoise_l, policy_descent, value_l,
                         static_cast<float>(hp_.lambda_pi), static_cast<float>(hp_.lambda_v));

      if (!std::isfinite(total.item())) {
        throw DivergenceError("training diverged: non-finite loss at update " +
                              std::to_string(update_index_));
      }

      agent_.store().zero_grad();
      total.backward();
      optimizer_->step();

      stats.denoise += denoise_l.item();
      stats.policy += policy_descent.item();
      stats.value += value_l.item();
      stats.total += total.item();
      ++stat_count;
    }
  }
  if (stat_count > 0) {
    stats.denoise /= stat_count;
    stats.policy /= stat_count;
    stats.value /= stat_count;
    stats.total /= stat_count;
  }
  return stats;
}

MetricsRow Trainer::update() {
  collect_rollout();
  compute_advantages();
  const LearnStats stats = learn_epochs();
  ++update_index_;

  MetricsRow row;
  row.update = update_index_;
  row.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time_)
          .count();
  row.mean_return = last_mean_return_;
  row.mean_ep_len = last_mean_len_;
  row.fall_rate = last_fall_rate_;
  row.loss_denoise = stats.denoise;
  row.loss_policy = stats.policy;
  row.loss_value = stats.value;
  row.loss_total = stats.total;
  row.recon_mse = rollout_recon_mse_;
  row.explained_var = explained_var_;
  return row;
}

bool Trainer::run(int n_updates, const std::function<void(const MetricsRow&)>& sink) {
  for (int i = 0; i < n_updates; ++i) {
    try {
      const MetricsRow row = update();
      if (sink) sink(row);
    } catch (const DivergenceError&) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

EpisodeLog collect_episode(env::EnvBase& e, const Agent& agent, int max_steps) {
  NoGradGuard ng;
  e.reset();
  const auto& cfg = e.config();
  const obs::Layout layout = obs::make_layout(cfg);
  const int A = cfg.joint_count;

  EpisodeLog log;
  Tensor h = Tensor::zeros(1, agent.hidden_dim());
  std::vector<double> action(static_cast<std::size_t>(A), 0.0);
  double abs_vx_err = 0.0;

  for (int t = 0; t < max_steps; ++t) {
    const auto& o = e.observation();
    const auto& s = e.state();
    log.obs.push_back(o);
    log.state.push_back(s);
    abs_vx_err += std::abs(s[static_cast<std::size_t>(layout.base_lin_vel)] -
                           s[static_cast<std::size_t>(layout.commands)]);

    Tensor obs_t = Tensor::zeros(1, cfg.obs_dim());
    for (int i = 0; i < cfg.obs_dim(); ++i) {
      obs_t(0, i) = static_cast<float>(o[static_cast<std::size_t>(i)]);
    }
    auto [mean, hn] = agent.policy_step(obs_t, h);
    h = hn;
    for (int a = 0; a < A; ++a) action[static_cast<std::size_t>(a)] = mean(0, a);

    const env::StepInfo info = e.step(action);
    log.breakdown.push_back(info.breakdown);
    log.total_reward += info.reward;
    ++log.steps;
    if (info.done) {
      log.fell = info.fall;
      break;
    }
  }
  log.mean_abs_vx_error = log.steps ? abs_vx_err / log.steps : 0.0;
  return log;
}

EvalReport evaluate_policy(const EnvFactory& factory, const Agent& agent,
                           int episodes, int max_steps) {
  EvalReport report;
  report.episodes = episodes;
  if (episodes <= 0) return report;
  auto e = factory(0);
  double tracking = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    const EpisodeLog log = collect_episode(*e, agent, max_steps);
    const bool success = !log.fell && log.steps >= max_steps;
    report.successes += success ? 1 : 0;
    report.mean_return += log.total_reward;
    report.mean_steps += log.steps;
    tracking += log.mean_abs_vx_error;
  }
  report.success_rate = static_cast<double>(report.successes) / episodes;
  report.mean_return /= episodes;
  report.mean_steps /= episodes;
  report.mean_tracking_error = tracking / episodes;
  return report;
}

EstimateReport estimate_state(const Agent& agent, std::span<const EpisodeLog> logs,
                              const obs::EnvConfig& cfg) {
  if (agent.algo != "dwl" || !agent.dwl) {
    throw std::invalid_argument("estimate_state: requires the encoder-decoder agent");
  }
  if (cfg.obs_dim() != agent.net_cfg.obs_dim ||
      cfg.state_dim() != agent.net_cfg.state_dim) {
    throw std::invalid_argument("estimate_state: config/agent dimension mismatch");
  }
  NoGradGuard ng;
  const obs::Layout layout = obs::make_layout(cfg);

  struct Acc {
    double sq = 0.0;
    double sum_truth = 0.0;
    double sum_truth_sq = 0.0;
    std::size_t n = 0;
    void add(double truth, double pred) {
      const double d = pred - truth;
      sq += d * d;
      sum_truth += truth;
      sum_truth_sq += truth * truth;
      ++n;
    }
    double mse() const { return n ? sq / static_cast<double>(n) : 0.0; }
    double variance() const {
      if (!n) return 0.0;
      const double m = sum_truth / static_cast<double>(n);
      return sum_truth_sq / static_cast<double>(n) - m * m;
    }
  };
  Acc fwd_vel, yaw, contacts, scan, full;

  EstimateReport report;
  for (const auto& log : logs) {
    Tensor h = Tensor::zeros(1, agent.hidden_dim());
    for (std::size_t t = 0; t < log.obs.size(); ++t) {
      Tensor obs_t = Tensor::zeros(1, cfg.obs_dim());
      for (int i = 0; i < cfg.obs_dim(); ++i) {
        obs_t(0, i) = static_cast<float>(log.obs[t][static_cast<std::size_t>(i)]);
      }
      auto [z, hn] = agent.dwl->encode(obs_t, h);
      h = hn;
      Tensor recon = agent.dwl->decode(z);
      const auto& truth = log.state[t];

      const double tv = truth[static_cast<std::size_t>(layout.base_lin_vel)];
      const double pv = recon(0, layout.base_lin_vel);
      fwd_vel.add(tv, pv);
      const double ty = truth[static_cast<std::size_t>(layout.orientation) + 2];
      const double py = recon(0, layout.orientation + 2);
      yaw.add(ty, py);
      for (int i = 0; i < 2; ++i) {
        contacts.add(truth[static_cast<std::size_t>(layout.feet_contact + i)],
                     recon(0, layout.feet_contact + i));
      }
      for (int i = 0; i < cfg.height_scan_count; ++i) {
        scan.add(truth[static_cast<std::size_t>(layout.height_scan + i)],
                 recon(0, layout.height_scan + i));
      }
      for (int i = 0; i < cfg.state_dim(); ++i) {
        full.add(truth[static_cast<std::size_t>(i)], recon(0, i));
      }
      report.series.push_back({tv, pv, ty, py});
    }
  }

  report.channels = {
      {"forward_velocity", fwd_vel.mse(), fwd_vel.variance()},
      {"yaw", yaw.mse(), yaw.variance()},
      {"feet_contact", contacts.mse(), contacts.variance()},
      {"height_scan", scan.mse(), scan.variance()},
  };
  report.state_mse = full.mse();
  return report;
}

}  // namespace dwl::learn
