// Command-line front end: training, evaluation, state-estimation reports,
// trajectory export and randomization audits.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dwl/config.hpp"
#include "dwl/gait.hpp"
#include "dwl/learn.hpp"
#include "dwl/noise.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

struct CommonArgs {
  std::string profile = "smoke";
  std::uint64_t seed = 0;
  std::string out = "out";
  int workers = 1;
  std::vector<std::string> overrides;
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--profile", args.profile, "built-in profile: paper | desk | smoke");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--workers", args.workers,
                  "rollout worker threads (1 = reproducible reference)");
  cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
  cmd->add_option("--config", args.config_file,
                  "load a config file instead of a named profile");
}

dwl::config::RunProfile resolve(const CommonArgs& args) {
  dwl::config::RunConfig rc;
  rc.profile_name = args.profile;
  rc.seed = args.seed;
  rc.out_dir = args.out;
  rc.overrides = args.overrides;
  rc.workers = args.workers;
  rc.config_file = args.config_file;
  return rc.resolve();
}

int cmd_train(const CommonArgs& args) {
  const auto profile = resolve(args);
  if (profile.backend == "stub" && profile.hp.num_envs > 512) {
    std::cerr << "note: profile '" << profile.name << "' declares "
              << profile.hp.num_envs
              << " environments; override hp.num_envs for a workstation run\n";
  }
  std::filesystem::create_directories(args.out);
  dwl::config::write_manifest(args.out, profile, args.seed, "train");

  auto factory = dwl::config::make_env_factory(profile, args.seed);
  dwl::learn::Trainer trainer(factory, profile.net, profile.hp, args.seed, args.workers);

  std::ofstream metrics(args.out + "/metrics.csv");
  const auto& cols = dwl::learn::MetricsRow::columns();
  for (std::size_t i = 0; i < cols.size(); ++i) metrics << (i ? "," : "") << cols[i];
  metrics << "\n";

  const bool ok = trainer.run(profile.hp.updates, [&](const dwl::learn::MetricsRow& row) {
    const auto vals = row.numeric_values();
    metrics << row.update << "," << dwl::config::format_double(row.wall_time_s);
    for (std::size_t i = 1; i < vals.size(); ++i) {
      metrics << "," << dwl::config::format_double(vals[i]);
    }
    metrics << "\n";
    metrics.flush();
    if (row.update % 25 == 0) {
      std::cout << "update " << row.update << "  return " << row.mean_return
                << "  fall_rate " << row.fall_rate << "  loss " << row.loss_total
                << std::endl;
    }
  });

  const auto ckpt = trainer.agent().checkpoint(
      {{"profile", profile.name}, {"seed", std::to_string(args.seed)}});
  dwl::nn::save_checkpoint(args.out + "/checkpoint.bin", ckpt);
  std::cout << "checkpoint: " << args.out << "/checkpoint.bin\n";
  if (!ok) {
    std::cerr << "training diverged (non-finite loss)\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint,
             const std::string& terrain, int episodes, double push_force,
             double push_duration, bool write_breakdown) {
  auto profile = resolve(args);
  profile.opts.terrain = terrain;
  if (push_force > 0.0) {
    profile.opts.push_enabled = true;
    profile.opts.push_force_max = push_force;
    profile.opts.push_duration = push_duration;
  }
  std::filesystem::create_directories(args.out);
  dwl::config::write_manifest(args.out, profile, args.seed, "eval");

  auto agent = dwl::learn::Agent::from_checkpoint(dwl::nn::load_checkpoint(checkpoint));
  if (agent.net_cfg.obs_dim != profile.env.obs_dim() ||
      agent.net_cfg.state_dim != profile.env.state_dim() ||
      agent.net_cfg.action_dim != profile.env.joint_count) {
    std::cerr << "error: checkpoint architecture does not match the profile\n";
    return kExitUsage;
  }
  auto factory = dwl::config::make_env_factory(profile, args.seed);

  std::vector<std::vector<double>> rows;
  int successes = 0;
  double tracking = 0.0;
  auto e = factory(0);
  const auto layout = dwl::obs::make_layout(profile.env);
  for (int ep = 0; ep < episodes; ++ep) {
    const auto log =
        dwl::learn::collect_episode(*e, agent, profile.opts.max_episode_steps);
    const bool success = !log.fell && log.steps >= profile.opts.max_episode_steps;
    successes += success ? 1 : 0;
    tracking += log.mean_abs_vx_error;
    rows.push_back({static_cast<double>(ep), static_cast<double>(log.steps),
                    log.total_reward, log.fell ? 1.0 : 0.0, log.mean_abs_vx_error});

    std::vector<std::vector<double>> replay;
    for (std::size_t t = 0; t < log.state.size(); ++t) {
      const auto& s = log.state[t];
      replay.push_back({static_cast<double>(t) * profile.env.control_dt(),
                        s[static_cast<std::size_t>(layout.base_lin_vel)],
                        s[static_cast<std::size_t>(layout.commands)],
                        s[static_cast<std::size_t>(layout.orientation) + 1],
                        s[static_cast<std::size_t>(layout.feet_contact)],
                        s[static_cast<std::size_t>(layout.feet_contact) + 1],
                        s[static_cast<std::size_t>(layout.current_reward)]});
    }
    dwl::config::write_csv(args.out + "/replay_ep" + std::to_string(ep) + ".csv",
                           {"time", "vx", "cmd_vx", "pitch", "contact_left",
                            "contact_right", "reward"},
                           replay);
    if (ep == 0) {
      // full state log with one named column per channel
      std::vector<std::string> header{"time"};
      for (const auto& name : dwl::obs::channel_names(profile.env)) {
        header.push_back(name);
      }
      std::vector<std::vector<double>> state_rows;
      for (std::size_t t = 0; t < log.state.size(); ++t) {
        std::vector<double> row{static_cast<double>(t) * profile.env.control_dt()};
        row.insert(row.end(), log.state[t].begin(), log.state[t].end());
        state_rows.push_back(std::move(row));
      }
      dwl::config::write_csv(args.out + "/states_ep0.csv", header, state_rows);
    }
    if (write_breakdown) {
      std::vector<std::vector<double>> bd;
      for (std::size_t t = 0; t < log.breakdown.size(); ++t) {
        std::vector<double> row{static_cast<double>(t) * profile.env.control_dt()};
        for (const auto& term : log.breakdown[t].terms) row.push_back(term.weighted);
        row.push_back(log.breakdown[t].total);
        bd.push_back(std::move(row));
      }
      std::vector<std::string> header{"time"};
      for (const auto& name : dwl::rewards::reward_term_names()) header.push_back(name);
      header.push_back("total");
      dwl::config::write_csv(args.out + "/breakdown_ep" + std::to_string(ep) + ".csv",
                             header, bd);
    }
  }

  dwl::config::write_csv(args.out + "/eval.csv",
                         {"episode", "steps", "return", "fell", "tracking_error"},
                         rows);
  const double rate = episodes > 0 ? static_cast<double>(successes) / episodes : 0.0;
  std::cout << "terrain " << terrain << ": success " << successes << "/" << episodes
            << " (" << 100.0 * rate << "%)";
  if (episodes > 0) std::cout << "  mean |vx err| " << tracking / episodes;
  std::cout << std::endl;
  return kExitOk;
}

int cmd_estimate(const CommonArgs& args, const std::string& checkpoint, int episodes) {
  const auto profile = resolve(args);
  std::filesystem::create_directories(args.out);
  dwl::config::write_manifest(args.out, profile, args.seed, "estimate");

  auto agent = dwl::learn::Agent::from_checkpoint(dwl::nn::load_checkpoint(checkpoint));
  auto factory = dwl::config::make_env_factory(profile, args.seed);
  auto e = factory(0);
  std::vector<dwl::learn::EpisodeLog> logs;
  for (int ep = 0; ep < episodes; ++ep) {
    logs.push_back(
        dwl::learn::collect_episode(*e, agent, profile.opts.max_episode_steps));
  }
  const auto report = dwl::learn::estimate_state(agent, logs, profile.env);

  std::vector<std::vector<std::string>> rows;
  for (const auto& c : report.channels) {
    rows.push_back({c.name, dwl::config::format_double(c.mse),
                    dwl::config::format_double(c.truth_variance)});
    std::cout << c.name << ": mse " << c.mse << " (constant-predictor mse "
              << c.truth_variance << ")\n";
  }
  dwl::config::write_csv_strings(args.out + "/estimate.csv",
                                 {"channel", "mse", "constant_predictor_mse"}, rows);

  std::vector<std::vector<double>> series;
  for (std::size_t i = 0; i < report.series.size(); ++i) {
    const auto& s = report.series[i];
    series.push_back({static_cast<double>(i) * profile.env.control_dt(), s[0], s[1],
                      s[2], s[3]});
  }
  dwl::config::write_csv(args.out + "/estimate_series.csv",
                         {"time", "vx_truth", "vx_pred", "yaw_truth", "yaw_pred"},
                         series);
  return kExitOk;
}

int cmd_traj(const dwl::gait::QuinticConstraints& c, double rate,
             const std::string& out) {
  const auto coeffs = dwl::gait::solve_quintic(c);
  std::vector<std::vector<double>> rows;
  const int n = std::max(1, static_cast<int>(c.T * rate));
  for (int i = 0; i <= n; ++i) {
    const double t = c.T * i / n;
    const auto s = dwl::gait::eval_quintic(coeffs, t);
    rows.push_back({t, s.height, s.velocity, s.acceleration});
  }
  if (out.empty() || out == "-") {
    std::cout << "t,height,velocity,acceleration\n";
    for (const auto& r : rows) {
      std::cout << dwl::config::format_double(r[0]) << ","
                << dwl::config::format_double(r[1]) << ","
                << dwl::config::format_double(r[2]) << ","
                << dwl::config::format_double(r[3]) << "\n";
    }
  } else {
    dwl::config::write_csv(out, {"t", "height", "velocity", "acceleration"}, rows);
  }
  return kExitOk;
}

int cmd_randomize_check(const CommonArgs& args, int n, const std::string& out) {
  const auto profile = resolve(args);
  dwl::RngStream rng(args.seed, 0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) {
    const auto d = dwl::noise::sample_dynamics(rng, profile.env.noise_specs,
                                               profile.env.joint_count);
    rows.push_back({static_cast<double>(i), d.friction, d.motor_offset[0],
                    d.motor_strength, d.payload, d.pd_factors[0], d.pd_factors[1],
                    d.system_delay_ms});
  }
  const std::vector<std::string> header = {"sample",       "friction",
                                           "motor_offset_0", "strength",
                                           "payload",      "pd_factor_kp",
                                           "pd_factor_kd", "delay_ms"};
  if (out.empty() || out == "-") {
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::cout << (i ? "," : "") << header[i];
    }
    std::cout << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::cout << (i ? "," : "") << dwl::config::format_double(r[i]);
      }
      std::cout << "\n";
    }
  } else {
    dwl::config::write_csv(out, header, rows);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"denoising world-model locomotion trainer"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, est_args, rand_args;

  auto* train =
      app.add_subcommand("train", "train a policy; writes checkpoint + metrics.csv");
  add_common(train, train_args);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over episodes");
  add_common(eval, eval_args);
  std::string eval_ckpt, eval_terrain = "flat";
  int eval_episodes = 5;
  double eval_push_force = 0.0, eval_push_duration = 0.1;
  bool eval_breakdown = false;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--terrain", eval_terrain, "flat | slope | stairs | irregular");
  eval->add_option("--episodes", eval_episodes, "episode count");
  eval->add_option("--push-force", eval_push_force,
                   "enable pushes of this magnitude [N]");
  eval->add_option("--push-duration", eval_push_duration, "push duration [s]");
  eval->add_flag("--breakdown", eval_breakdown, "emit per-term reward breakdown CSVs");

  auto* est = app.add_subcommand("estimate", "state-estimation report for a checkpoint");
  add_common(est, est_args);
  std::string est_ckpt;
  int est_episodes = 3;
  est->add_option("--checkpoint", est_ckpt, "checkpoint file")->required();
  est->add_option("--episodes", est_episodes, "episode count");

  auto* traj = app.add_subcommand("traj", "emit the swing-foot profile as CSV");
  dwl::gait::QuinticConstraints tc{0.0, 0.1, 10.0, 0.1, 0.0, 0.0, 0.5};
  double traj_rate = 200.0;
  std::string traj_out;
  traj->add_option("--h0", tc.h0, "initial height [m]");
  traj->add_option("--v0", tc.v0, "initial velocity [m/s]");
  traj->add_option("--acc0", tc.acc0, "initial acceleration [m/s^2]");
  traj->add_option("--hmax", tc.h_max, "apex height [m]");
  traj->add_option("--hswing", tc.h_swing, "final height [m]");
  traj->add_option("--vswing", tc.v_swing, "final velocity [m/s]");
  traj->add_option("-T,--duration", tc.T, "swing duration [s]");
  traj->add_option("--rate", traj_rate, "sample rate [Hz]");
  traj->add_option("--out", traj_out, "output CSV ('-' for stdout)");

  auto* rand =
      app.add_subcommand("randomize-check", "sample dynamics draws for range auditing");
  add_common(rand, rand_args);
  int rand_n = 100;
  std::string rand_out;
  rand->add_option("--n", rand_n, "number of samples");
  rand->add_option("--csv", rand_out, "output CSV ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) {
      return cmd_eval(eval_args, eval_ckpt, eval_terrain, eval_episodes,
                      eval_push_force, eval_push_duration, eval_breakdown);
    }
    if (est->parsed()) return cmd_estimate(est_args, est_ckpt, est_episodes);
    if (traj->parsed()) return cmd_traj(tc, traj_rate, traj_out);
    if (rand->parsed()) return cmd_randomize_check(rand_args, rand_n, rand_out);
  } catch (const dwl::learn::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
