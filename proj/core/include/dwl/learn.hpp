#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwl/env.hpp"
#include "dwl/nets.hpp"
#include "dwl/obs.hpp"
#include "dwl/tensor.hpp"

namespace dwl::learn {

// ---------------------------------------------------------------------------
// Losses. Policy quantities follow the clipped-surrogate formulation; the
// reconstruction and value terms use the plain (non-squared) L2 norm by
// default, with a squared variant behind a switch.
// ---------------------------------------------------------------------------

/// Mean over rows of ||recon - target||_2 + lambda_r * ||z||_1. An optional
/// per-channel scale row standardizes the residual before the norm so that
/// low-magnitude channels are not drowned out by high-magnitude ones; the
/// default (no scale) is the plain raw-residual form.
template <typename S>
nn::TensorT<S> denoise_loss(const nn::TensorT<S>& recon, const nn::TensorT<S>& target,
                            const nn::TensorT<S>& z, S lambda_r, bool squared = false,
                            const nn::TensorT<S>* channel_scale = nullptr) {
  auto diff = sub(recon, target);
  if (channel_scale != nullptr) diff = mul_rowvec(diff, *channel_scale);
  auto per_row_sq = row_sum(square(diff));          // [B x 1]
  auto rec = squared ? mean(per_row_sq) : mean(sqrt_t(per_row_sq));
  auto l1 = mean(row_sum(abs_t(z)));
  return add(rec, scalar_mul(l1, lambda_r));
}

/// Mean over the batch of min(rho * A, clip(rho, c1, c2) * A) with
/// rho = exp(logp_new - logp_old). This is the objective to ascend.
template <typename S>
nn::TensorT<S> ppo_surrogate(const nn::TensorT<S>& logp_new,
                             const nn::TensorT<S>& logp_old,
                             const nn::TensorT<S>& advantage, S c1, S c2) {
  auto ratio = exp_t(sub(logp_new, logp_old));
  auto unclipped = mul(ratio, advantage);
  auto clipped = mul(clip(ratio, c1, c2), advantage);
  return mean(minimum(unclipped, clipped));
}

/// ||R - V||_2 over the batch vector (default), or the mean squared residual.
template <typename S>
nn::TensorT<S> value_loss(const nn::TensorT<S>& values, const nn::TensorT<S>& returns,
                          bool squared = false) {
  auto sq = square(sub(values, returns));
  if (squared) return mean(sq);
  return sqrt_t(sum(sq));
}

/// L = L_denoise + lambda_pi * L_pi + lambda_v * L_v, where L_pi is already
/// in descent form (the negated surrogate plus entropy bonus).
template <typename S>
nn::TensorT<S> dwl_total_loss(const nn::TensorT<S>& denoise,
                              const nn::TensorT<S>& policy_descent,
                              const nn::TensorT<S>& value, S lambda_pi, S lambda_v) {
  return add(denoise,
             add(scalar_mul(policy_descent, lambda_pi), scalar_mul(value, lambda_v)));
}

// ---------------------------------------------------------------------------
// Generalized advantage estimation (plain double math, oracle-checkable).
// ---------------------------------------------------------------------------

struct Advantage {
  std::vector<double> advantage;
  std::vector<double> ret;  // R_t = A_t + V(s_t)
};

/// Standard GAE recursion over one sequence. dones[t] == 1 cuts both the TD
/// bootstrap and the trace at t; bootstrap_value extends the final step when
/// the sequence does not end an episode.
Advantage gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda,
              double bootstrap_value);

// ---------------------------------------------------------------------------
// Training configuration and the agent bundle.
// ---------------------------------------------------------------------------

struct Hyperparams {
  double gamma = 0.995;
  double gae_lambda = 0.95;
  double entropy_coef = 0.005;
  double clip_low = 0.8;    // c1
  double clip_high = 1.2;   // c2
  double learning_rate = 1e-5;
  double lambda_r = 0.002;
  double lambda_pi = 5.0;
  double lambda_v = 5.0;
  int epochs = 2;
  int num_envs = 64;
  int horizon = 24;
  int episode_steps = 2400;
  int minibatches = 4;
  int updates = 1000;
  bool normalize_advantage = true;
  bool denoise_enabled = true;   // off reduces the objective to pure PPO
  bool denoise_normalized = false;  // standardize residual channels in the loss
  bool squared_l2 = false;
  std::string algo = "dwl";      // "dwl" | "ppo"

  void validate() const;
};

/// The learnable bundle: either the encoder-decoder agent or the recurrent
/// baseline, behind one inference surface.
struct Agent {
  std::string algo;  // "dwl" | "ppo"
  nn::NetConfig net_cfg;
  std::unique_ptr<nn::DwlNetsT<float>> dwl;
  std::unique_ptr<nn::BaselineNetsT<float>> baseline;

  static Agent make(const std::string& algo, const nn::NetConfig& cfg,
                    std::uint64_t seed);

  nn::ParamStoreT<float>& store();
  const nn::ParamStoreT<float>& store() const;
  int hidden_dim() const { return net_cfg.gru_hidden; }
  const nn::TensorT<float>& log_std() const;

  /// Action means for a batch of observations; advances the hidden state.
  /// Run under NoGradGuard for rollouts.
  std::pair<nn::TensorT<float>, nn::TensorT<float>> policy_step(
      const nn::TensorT<float>& obs, const nn::TensorT<float>& hidden) const;

  nn::TensorT<float> values(const nn::TensorT<float>& states) const;

  struct RolloutEval {
    nn::TensorT<float> mean;
    nn::TensorT<float> hidden;
    nn::TensorT<float> value;      // [N x 1]
    double recon_sq_sum = 0.0;     // sum of squared reconstruction errors
    std::size_t recon_count = 0;   // elements behind recon_sq_sum
  };
  /// Everything the rollout needs in one pass; call under NoGradGuard.
  RolloutEval rollout_eval(const nn::TensorT<float>& obs,
                           const nn::TensorT<float>& hidden,
                           const nn::TensorT<float>& states) const;

  nn::Checkpoint checkpoint(std::map<std::string, std::string> extra_meta = {}) const;
  static Agent from_checkpoint(const nn::Checkpoint& ckpt);
};

// ---------------------------------------------------------------------------
// Rollout storage and the trainer.
// ---------------------------------------------------------------------------

struct RolloutBuffer {
  int horizon = 0, num_envs = 0;
  int obs_dim = 0, state_dim = 0, action_dim = 0, hidden_dim = 0;
  std::vector<float> obs;      // [T][N][obs_dim]
  std::vector<float> state;    // [T][N][state_dim]
  std::vector<float> action;   // [T][N][action_dim]
  std::vector<float> logp;     // [T][N]
  std::vector<double> reward;  // [T][N]
  std::vector<float> value;    // [T][N]
  std::vector<std::uint8_t> done;  // [T][N], 1 when the episode ended at t
  std::vector<float> h0;       // [N][hidden] snapshot at window start
  std::vector<float> advantage;  // [T][N] (normalized when configured)
  std::vector<float> ret;        // [T][N]

  void resize(int T, int N, int od, int sd, int ad, int hd);
  float* obs_row(int t, int n) { return &obs[(static_cast<std::size_t>(t) * num_envs + n) * obs_dim]; }
  float* state_row(int t, int n) { return &state[(static_cast<std::size_t>(t) * num_envs + n) * state_dim]; }
  float* action_row(int t, int n) { return &action[(static_cast<std::size_t>(t) * num_envs + n) * action_dim]; }
  std::size_t flat(int t, int n) const { return static_cast<std::size_t>(t) * num_envs + n; }
};

/// One row of the metrics log, written per update.
struct MetricsRow {
  int update = 0;
  double wall_time_s = 0.0;
  double mean_return = 0.0;
  double mean_ep_len = 0.0;
  double fall_rate = 0.0;
  double loss_denoise = 0.0;
  double loss_policy = 0.0;
  double loss_value = 0.0;
  double loss_total = 0.0;
  double recon_mse = 0.0;
  double explained_var = 0.0;

  static const std::vector<std::string>& columns();
  std::vector<double> numeric_values() const;  // excludes wall_time_s
};

using EnvFactory =
    std::function<std::unique_ptr<env::EnvBase>(std::uint64_t stream_index)>;

class Trainer {
 public:
  Trainer(EnvFactory factory, const nn::NetConfig& net_cfg, const Hyperparams& hp,
          std::uint64_t seed, int workers = 1);

  /// One rollout + learning cycle. Returns the metrics row; throws
  /// DivergenceError when the loss turns non-finite.
  MetricsRow update();

  /// Runs n updates, invoking sink after each. Returns false on divergence
  /// (after invoking sink for the offending update is not possible).
  bool run(int n_updates, const std::function<void(const MetricsRow&)>& sink);

  Agent& agent() { return agent_; }
  const Agent& agent() const { return agent_; }
  const Hyperparams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }

 private:
  void collect_rollout();
  struct LearnStats {
    double denoise = 0.0, policy = 0.0, value = 0.0, total = 0.0;
  };
  LearnStats learn_epochs();
  void compute_advantages();

  Hyperparams hp_;
  std::uint64_t seed_;
  int workers_;
  Agent agent_;
  std::unique_ptr<nn::AdamT<float>> optimizer_;
  std::vector<std::unique_ptr<env::EnvBase>> envs_;
  std::vector<RngStream> action_rngs_;
  RngStream shuffle_rng_;

  RolloutBuffer buf_;
  std::vector<float> hidden_;      // [N][hidden] rolling encoder state
  std::vector<std::uint8_t> prev_done_;

  // running per-channel statistics of the state stream (Welford), used by
  // the standardized denoising loss
  std::vector<double> chan_mean_;
  std::vector<double> chan_m2_;
  double chan_count_ = 0.0;

  // episode bookkeeping
  std::vector<double> ep_return_;
  std::vector<int> ep_len_;
  double last_mean_return_ = 0.0;
  double last_mean_len_ = 0.0;
  double last_fall_rate_ = 1.0;
  double rollout_recon_mse_ = 0.0;
  double explained_var_ = 0.0;
  int update_index_ = 0;
  std::chrono::steady_clock::time_point start_time_;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Evaluation and state estimation.
// ---------------------------------------------------------------------------

struct EpisodeLog {
  std::vector<std::vector<double>> obs;    // per step
  std::vector<std::vector<double>> state;  // per step (ground truth)
  std::vector<rewards::RewardBreakdown> breakdown;
  bool fell = false;
  int steps = 0;
  double total_reward = 0.0;
  double mean_abs_vx_error = 0.0;
};

/// Runs one episode with the deterministic (mean) policy, recording
/// observations, ground-truth states and rewards.
EpisodeLog collect_episode(env::EnvBase& e, const Agent& agent, int max_steps);

struct EvalReport {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_tracking_error = 0.0;
  double mean_return = 0.0;
  double mean_steps = 0.0;
};

EvalReport evaluate_policy(const EnvFactory& factory, const Agent& agent,
                           int episodes, int max_steps);

struct ChannelMse {
  std::string name;
  double mse = 0.0;
  double truth_variance = 0.0;  // MSE of the best constant predictor
};

struct EstimateReport {
  std::vector<ChannelMse> channels;
  // per step: truth fwd velocity, predicted, truth yaw, predicted yaw
  std::vector<std::array<double, 4>> series;
  double state_mse = 0.0;
};

/// Replays logged episodes through the encoder-decoder and scores the
/// reconstruction per named channel group. Requires a "dwl" agent.
EstimateReport estimate_state(const Agent& agent, std::span<const EpisodeLog> logs,
                              const obs::EnvConfig& cfg);

}  // namespace dwl::learn
