#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dwl/rng.hpp"
#include "dwl/tensor.hpp"

namespace dwl::nn {

enum class Init { fan_in_uniform, recurrent_uniform, zeros };

/// Ordered collection of named, tracked parameter tensors.
template <typename S>
class ParamStoreT {
 public:
  TensorT<S>& add(const std::string& name, int rows, int cols, RngStream& rng,
                  Init scheme) {
    if (index_.count(name)) {
      throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    }
    TensorT<S> p = TensorT<S>::zeros(rows, cols, /*requires_grad=*/true);
    p.set_name(name);
    initialize(p, rng, scheme);
    index_[name] = params_.size();
    params_.push_back(p);
    return params_.back();
  }

  /// Registers a tensor that was built and initialized by the caller.
  TensorT<S>& add_existing(TensorT<S> p) {
    if (index_.count(p.name())) {
      throw std::invalid_argument("ParamStore: duplicate parameter " + p.name());
    }
    index_[p.name()] = params_.size();
    params_.push_back(std::move(p));
    return params_.back();
  }

  static void initialize(TensorT<S>& p, RngStream& rng, Init scheme) {
    const int fan_in = p.rows();
    double bound = 0.0;
    switch (scheme) {
      case Init::zeros:
        bound = 0.0;
        break;
      case Init::fan_in_uniform:
      case Init::recurrent_uniform:
        bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
        break;
    }
    for (auto& v : p.values()) {
      v = static_cast<S>(bound == 0.0 ? 0.0 : rng.uniform(-bound, bound));
    }
  }

  std::vector<TensorT<S>>& params() { return params_; }
  const std::vector<TensorT<S>>& params() const { return params_; }

  TensorT<S>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown " + name);
    return params_[it->second];
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  /// Count of scalars in parameters whose name starts with prefix.
  std::size_t count_prefix(const std::string& prefix) const {
    std::size_t n = 0;
    for (const auto& p : params_) {
      if (p.name().rfind(prefix, 0) == 0) n += p.size();
    }
    return n;
  }

 private:
  std::vector<TensorT<S>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename S>
struct AffineT {
  TensorT<S> W;  // [in x out]
  TensorT<S> b;  // [1 x out]

  void init(ParamStoreT<S>& store, const std::string& name, int in, int out,
            RngStream& rng, Init scheme = Init::fan_in_uniform) {
    W = store.add(name + ".W", in, out, rng, scheme);
    b = store.add(name + ".b", 1, out, rng, scheme);
  }

  TensorT<S> forward(const TensorT<S>& x) const { return add_rowvec(matmul(x, W), b); }
};

/// Gate-separated GRU cell with input and hidden biases on every gate.
template <typename S>
struct GruCellT {
  AffineT<S> ir, iz, in;  // input path
  AffineT<S> hr, hz, hn;  // hidden path
  int hidden = 0;

  void init(ParamStoreT<S>& store, const std::string& name, int input, int hidden_dim,
            RngStream& rng) {
    hidden = hidden_dim;
    ir.init(store, name + ".ir", input, hidden_dim, rng, Init::fan_in_uniform);
    iz.init(store, name + ".iz", input, hidden_dim, rng, Init::fan_in_uniform);
    in.init(store, name + ".in", input, hidden_dim, rng, Init::fan_in_uniform);
    hr.init(store, name + ".hr", hidden_dim, hidden_dim, rng, Init::recurrent_uniform);
    hz.init(store, name + ".hz", hidden_dim, hidden_dim, rng, Init::recurrent_uniform);
    hn.init(store, name + ".hn", hidden_dim, hidden_dim, rng, Init::recurrent_uniform);
  }

  TensorT<S> step(const TensorT<S>& x, const TensorT<S>& h) const {
    auto r = sigmoid(add(ir.forward(x), hr.forward(h)));
    auto z = sigmoid(add(iz.forward(x), hz.forward(h)));
    auto n = tanh_t(add(in.forward(x), mul(r, hn.forward(h))));
    // h' = (1 - z) * n + z * h
    auto one_minus_z = scalar_add(neg(z), S(1));
    return add(mul(one_minus_z, n), mul(z, h));
  }
};

/// Affine stack with ELU(alpha) between layers (not after the last).
template <typename S>
struct MlpT {
  std::vector<AffineT<S>> layers;
  S alpha = S(1);

  void init(ParamStoreT<S>& store, const std::string& name,
            const std::vector<int>& widths, RngStream& rng) {
    if (widths.size() < 2) throw std::invalid_argument("MlpT: need at least two widths");
    layers.resize(widths.size() - 1);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      layers[i].init(store, name + ".fc" + std::to_string(i), widths[i], widths[i + 1],
                     rng);
    }
  }

  TensorT<S> forward(const TensorT<S>& x) const {
    TensorT<S> h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layers[i].forward(h);
      if (i + 1 < layers.size()) h = elu(h, alpha);
    }
    return h;
  }
};

/// Diagonal Gaussian with a state-independent, learnable log standard
/// deviation per action dimension.
template <typename S>
struct GaussianPolicyHeadT {
  TensorT<S> log_std;  // [1 x action_dim]

  void init(ParamStoreT<S>& store, const std::string& name, int action_dim,
            S initial_log_std = S(0)) {
    log_std = TensorT<S>::zeros(1, action_dim, true);
    log_std.set_name(name + ".log_std");
    for (auto& v : log_std.values()) v = initial_log_std;
    store.add_existing(log_std);
  }

  /// log pi(a | mean) per row: [B x 1].
  TensorT<S> log_prob(const TensorT<S>& mean, const TensorT<S>& action) const {
    const int d = mean.cols();
    auto inv_std = exp_t(neg(log_std));
    auto z = mul_rowvec(sub(action, mean), inv_std);
    auto quad = scalar_mul(row_sum(square(z)), S(-0.5));
    const S log_two_pi = static_cast<S>(std::log(2.0 * 3.14159265358979323846));
    auto per_row_const = scalar_add(scalar_mul(sum(log_std), S(-1)),
                                    S(-0.5) * static_cast<S>(d) * log_two_pi);
    auto ones_col = TensorT<S>::filled(mean.rows(), 1, S(1));
    return add(quad, matmul(ones_col, per_row_const));
  }

  /// Mean entropy of the diagonal Gaussian (same for every state).
  TensorT<S> entropy() const {
    const S c = S(0.5) * static_cast<S>(std::log(2.0 * 3.14159265358979323846) + 1.0);
    return scalar_add(sum(log_std), c * static_cast<S>(log_std.cols()));
  }

  /// Draws one action row per mean row; returns a plain value tensor.
  TensorT<S> sample(const TensorT<S>& mean, RngStream& rng) const {
    TensorT<S> a = TensorT<S>::zeros(mean.rows(), mean.cols());
    const S* m = mean.data();
    const S* ls = log_std.data();
    S* out = a.data();
    for (int r = 0; r < mean.rows(); ++r) {
      for (int c = 0; c < mean.cols(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * mean.cols() + c;
        out[i] = m[i] + std::exp(ls[c]) * static_cast<S>(rng.normal());
      }
    }
    return a;
  }
};

/// Layer widths of the learning stacks; defaults are the published
/// architecture for the 47/184-dimensional configuration.
struct NetConfig {
  int obs_dim = 47;
  int state_dim = 184;
  int action_dim = 12;
  int gru_hidden = 256;
  int emb_hidden = 256;
  int latent_dim = 24;
  int decoder_hidden = 64;
  int actor_hidden = 48;
  std::vector<int> critic_hidden = {512, 512, 256};
  // baseline head widths (recurrent actor without the latent bottleneck)
  std::vector<int> baseline_hidden = {256, 128};
  double initial_log_std = 0.0;
};

/// Encoder-decoder stacks plus actor/critic: the full learnable state of the
/// denoising world-model agent.
template <typename S>
struct DwlNetsT {
  NetConfig cfg;
  ParamStoreT<S> store;

  GruCellT<S> gru;          // obs -> memory
  MlpT<S> emb;              // memory -> latent
  MlpT<S> decoder;          // latent -> reconstructed state
  MlpT<S> actor;            // latent -> action mean
  MlpT<S> critic;           // privileged state -> value
  GaussianPolicyHeadT<S> head;

  void init(const NetConfig& c, RngStream&& rng) { init(c, rng); }
  void init(const NetConfig& c, RngStream& rng) {
    cfg = c;
    gru.init(store, "encoder.gru", c.obs_dim, c.gru_hidden, rng);
    emb.init(store, "encoder.emb", {c.gru_hidden, c.emb_hidden, c.latent_dim}, rng);
    decoder.init(store, "decoder", {c.latent_dim, c.decoder_hidden, c.state_dim}, rng);
    actor.init(store, "actor", {c.latent_dim, c.actor_hidden, c.action_dim}, rng);
    std::vector<int> cw;
    cw.push_back(c.state_dim);
    cw.insert(cw.end(), c.critic_hidden.begin(), c.critic_hidden.end());
    cw.push_back(1);
    critic.init(store, "critic", cw, rng);
    head.init(store, "actor", c.action_dim, static_cast<S>(c.initial_log_std));
  }

  /// One encoder step: (obs, hidden) -> (latent, hidden').
  std::pair<TensorT<S>, TensorT<S>> encode(const TensorT<S>& obs,
                                           const TensorT<S>& hidden) const {
    if (obs.cols() != cfg.obs_dim) {
      throw std::invalid_argument("encode: observation dimension mismatch");
    }
    auto h = gru.step(obs, hidden);
    auto z = emb.forward(h);
    return {z, h};
  }

  TensorT<S> decode(const TensorT<S>& z) const { return decoder.forward(z); }
  TensorT<S> actor_mean(const TensorT<S>& z) const { return actor.forward(z); }
  TensorT<S> value(const TensorT<S>& state) const { return critic.forward(state); }

  /// Trainable scalars on the deployment path (encoder + actor + log-std).
  std::size_t actor_param_count() const {
    return store.count_prefix("encoder.") + store.count_prefix("actor.");
  }
};

/// The recurrent baseline actor: GRU memory followed by a plain MLP head,
/// sharing the critic architecture with the world-model agent.
template <typename S>
struct BaselineNetsT {
  NetConfig cfg;
  ParamStoreT<S> store;

  GruCellT<S> gru;
  MlpT<S> policy;
  MlpT<S> critic;
  GaussianPolicyHeadT<S> head;

  void init(const NetConfig& c, RngStream& rng) {
    cfg = c;
    gru.init(store, "actor.gru", c.obs_dim, c.gru_hidden, rng);
    std::vector<int> pw;
    pw.push_back(c.gru_hidden);
    pw.insert(pw.end(), c.baseline_hidden.begin(), c.baseline_hidden.end());
    pw.push_back(c.action_dim);
    policy.init(store, "actor.policy", pw, rng);
    std::vector<int> cw;
    cw.push_back(c.state_dim);
    cw.insert(cw.end(), c.critic_hidden.begin(), c.critic_hidden.end());
    cw.push_back(1);
    critic.init(store, "critic", cw, rng);
    head.init(store, "actor", c.action_dim, static_cast<S>(c.initial_log_std));
  }

  std::pair<TensorT<S>, TensorT<S>> actor_mean(const TensorT<S>& obs,
                                               const TensorT<S>& hidden) const {
    auto h = gru.step(obs, hidden);
    return {policy.forward(h), h};
  }

  TensorT<S> value(const TensorT<S>& state) const { return critic.forward(state); }

  std::size_t actor_param_count() const { return store.count_prefix("actor."); }
};

/// Adam with bias correction; one slot pair per parameter tensor.
template <typename S>
class AdamT {
 public:
  explicit AdamT(ParamStoreT<S>& store, double lr = 1e-5, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8)
      : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(store.params().size());
    v_.resize(store.params().size());
    for (std::size_t i = 0; i < store.params().size(); ++i) {
      m_[i].assign(store.params()[i].size(), 0.0);
      v_[i].assign(store.params()[i].size(), 0.0);
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < store_->params().size(); ++i) {
      auto& p = store_->params()[i];
      const S* g = p.grad().data();
      S* w = p.data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double gk = static_cast<double>(g[k]);
        m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * gk;
        v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * gk * gk;
        const double mhat = m_[i][k] / bc1;
        const double vhat = v_[i][k] / bc2;
        w[k] -= static_cast<S>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  ParamStoreT<S>* store_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// ---------------------------------------------------------------------------
// Checkpoints: versioned binary dump of named tensors plus metadata strings.
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::map<std::string, std::string> meta;
  struct Entry {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> data;
  };
  std::vector<Entry> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

template <typename S>
Checkpoint make_checkpoint(const ParamStoreT<S>& store,
                           std::map<std::string, std::string> meta) {
  Checkpoint c;
  c.meta = std::move(meta);
  for (const auto& p : store.params()) {
    Checkpoint::Entry e;
    e.name = p.name();
    e.rows = p.rows();
    e.cols = p.cols();
    e.data.assign(p.values().begin(), p.values().end());
    c.tensors.push_back(std::move(e));
  }
  return c;
}

/// Copies tensor data into an already-built store; every name and shape must
/// match. Throws std::runtime_error naming the offending tensor.
template <typename S>
void restore_params(ParamStoreT<S>& store, const Checkpoint& ckpt) {
  std::map<std::string, const Checkpoint::Entry*> by_name;
  for (const auto& e : ckpt.tensors) by_name[e.name] = &e;
  for (auto& p : store.params()) {
    auto it = by_name.find(p.name());
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: missing tensor " + p.name());
    }
    const auto* e = it->second;
    if (e->rows != p.rows() || e->cols != p.cols()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name() +
                               " (file " + std::to_string(e->rows) + "x" +
                               std::to_string(e->cols) + ", expected " +
                               std::to_string(p.rows()) + "x" +
                               std::to_string(p.cols()) + ")");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.values()[i] = static_cast<S>(e->data[i]);
    }
  }
}

}  // namespace dwl::nn
