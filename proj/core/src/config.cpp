#include "dwl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dwl::config {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const RunProfile&)> get;
  std::function<void(RunProfile&, const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for '" + key + "': " + s);
  }
}

int parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for '" + key + "': " + s);
  }
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: bad boolean value for '" + key + "': " + s);
}

using DoubleRef = std::function<double&(RunProfile&)>;
using IntRef = std::function<int&(RunProfile&)>;
using BoolRef = std::function<bool&(RunProfile&)>;
using StringRef = std::function<std::string&(RunProfile&)>;

void add_double(std::vector<Field>& v, const std::string& key, DoubleRef ref) {
  v.push_back(Field{
      key,
      [ref](const RunProfile& p) { return format_double(ref(const_cast<RunProfile&>(p))); },
      [ref, key](RunProfile& p, const std::string& s) { ref(p) = parse_double(key, s); }});
}
void add_int(std::vector<Field>& v, const std::string& key, IntRef ref) {
  v.push_back(Field{
      key,
      [ref](const RunProfile& p) {
        return std::to_string(ref(const_cast<RunProfile&>(p)));
      },
      [ref, key](RunProfile& p, const std::string& s) { ref(p) = parse_int(key, s); }});
}
void add_bool(std::vector<Field>& v, const std::string& key, BoolRef ref) {
  v.push_back(Field{
      key,
      [ref](const RunProfile& p) {
        return ref(const_cast<RunProfile&>(p)) ? "true" : "false";
      },
      [ref, key](RunProfile& p, const std::string& s) { ref(p) = parse_bool(key, s); }});
}
void add_string(std::vector<Field>& v, const std::string& key, StringRef ref) {
  v.push_back(Field{
      key,
      [ref](const RunProfile& p) { return ref(const_cast<RunProfile&>(p)); },
      [ref](RunProfile& p, const std::string& s) { ref(p) = s; }});
}

noise::NoiseSpec& spec_by_name(RunProfile& p, const std::string& name) {
  for (auto& s : p.env.noise_specs) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("config: profile has no noise spec '" + name + "'");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> v;
    add_string(v, "profile", [](RunProfile& p) -> std::string& { return p.name; });
    add_string(v, "backend", [](RunProfile& p) -> std::string& { return p.backend; });

    add_int(v, "env.joint_count", [](RunProfile& p) -> int& { return p.env.joint_count; });
    add_int(v, "env.height_scan_count",
            [](RunProfile& p) -> int& { return p.env.height_scan_count; });
    add_int(v, "env.scan_x_count", [](RunProfile& p) -> int& { return p.env.scan_x_count; });
    add_int(v, "env.scan_y_count", [](RunProfile& p) -> int& { return p.env.scan_y_count; });
    add_double(v, "env.scan_x0", [](RunProfile& p) -> double& { return p.env.scan_x0; });
    add_double(v, "env.scan_dx", [](RunProfile& p) -> double& { return p.env.scan_dx; });
    add_double(v, "env.control_rate_hz",
               [](RunProfile& p) -> double& { return p.env.control_rate_hz; });
    add_double(v, "env.inner_rate_hz",
               [](RunProfile& p) -> double& { return p.env.inner_rate_hz; });
    add_double(v, "env.cycle_time", [](RunProfile& p) -> double& { return p.env.cycle_time; });
    add_double(v, "env.cmd_vx_min",
               [](RunProfile& p) -> double& { return p.env.cmd_vx_range[0]; });
    add_double(v, "env.cmd_vx_max",
               [](RunProfile& p) -> double& { return p.env.cmd_vx_range[1]; });
    add_double(v, "env.standing_prob",
               [](RunProfile& p) -> double& { return p.env.standing_prob; });

    add_double(v, "traj.h0", [](RunProfile& p) -> double& { return p.env.trajectory.h0; });
    add_double(v, "traj.v0", [](RunProfile& p) -> double& { return p.env.trajectory.v0; });
    add_double(v, "traj.acc0", [](RunProfile& p) -> double& { return p.env.trajectory.acc0; });
    add_double(v, "traj.h_max", [](RunProfile& p) -> double& { return p.env.trajectory.h_max; });
    add_double(v, "traj.h_swing",
               [](RunProfile& p) -> double& { return p.env.trajectory.h_swing; });
    add_double(v, "traj.v_swing",
               [](RunProfile& p) -> double& { return p.env.trajectory.v_swing; });
    add_double(v, "traj.T", [](RunProfile& p) -> double& { return p.env.trajectory.T; });

    auto add_weight = [&v](const std::string& key,
                           double rewards::RewardWeights::* member) {
      add_double(v, key, [member](RunProfile& p) -> double& {
        return p.env.reward_weights.*member;
      });
    };
    add_weight("rewards.lin_vel_tracking", &rewards::RewardWeights::lin_vel_tracking);
    add_weight("rewards.ang_vel_tracking", &rewards::RewardWeights::ang_vel_tracking);
    add_weight("rewards.orientation_tracking",
               &rewards::RewardWeights::orientation_tracking);
    add_weight("rewards.base_height_tracking",
               &rewards::RewardWeights::base_height_tracking);
    add_weight("rewards.periodic_force", &rewards::RewardWeights::periodic_force);
    add_weight("rewards.periodic_velocity", &rewards::RewardWeights::periodic_velocity);
    add_weight("rewards.foot_height_tracking",
               &rewards::RewardWeights::foot_height_tracking);
    add_weight("rewards.foot_vel_tracking", &rewards::RewardWeights::foot_vel_tracking);
    add_weight("rewards.default_joint", &rewards::RewardWeights::default_joint);
    add_weight("rewards.energy_cost", &rewards::RewardWeights::energy_cost);
    add_weight("rewards.action_smoothness", &rewards::RewardWeights::action_smoothness);
    add_weight("rewards.feet_movements", &rewards::RewardWeights::feet_movements);
    add_weight("rewards.large_contact", &rewards::RewardWeights::large_contact);
    add_weight("rewards.target_base_height", &rewards::RewardWeights::target_base_height);
    add_weight("rewards.force_scale", &rewards::RewardWeights::force_scale);
    add_weight("rewards.velocity_scale", &rewards::RewardWeights::velocity_scale);
    add_weight("rewards.contact_force_limit",
               &rewards::RewardWeights::contact_force_limit);
    add_weight("rewards.contact_clip", &rewards::RewardWeights::contact_clip);

    for (const char* name :
         {"joint_position", "joint_velocity", "angular_velocity", "orientation",
          "system_delay", "friction", "motor_offset", "motor_strength", "payload",
          "pd_factors"}) {
      const std::string n = name;
      add_double(v, "noise." + n + ".lo",
                 [n](RunProfile& p) -> double& { return spec_by_name(p, n).lo; });
      add_double(v, "noise." + n + ".hi",
                 [n](RunProfile& p) -> double& { return spec_by_name(p, n).hi; });
    }

    add_double(v, "robot.trunk_mass", [](RunProfile& p) -> double& { return p.robot.trunk_mass; });
    add_double(v, "robot.thigh_len", [](RunProfile& p) -> double& { return p.robot.thigh_len; });
    add_double(v, "robot.shank_len", [](RunProfile& p) -> double& { return p.robot.shank_len; });
    add_double(v, "robot.gravity", [](RunProfile& p) -> double& { return p.robot.gravity; });
    for (int j = 0; j < 3; ++j) {
      const std::string leg = j == 0 ? "hip" : (j == 1 ? "knee" : "ankle");
      add_double(v, "robot." + leg + "_kp", [j](RunProfile& p) -> double& {
        return p.robot.leg_joints[static_cast<std::size_t>(j)].kp;
      });
      add_double(v, "robot." + leg + "_kd", [j](RunProfile& p) -> double& {
        return p.robot.leg_joints[static_cast<std::size_t>(j)].kd;
      });
      add_double(v, "robot." + leg + "_torque_limit", [j](RunProfile& p) -> double& {
        return p.robot.leg_joints[static_cast<std::size_t>(j)].torque_limit;
      });
      add_double(v, "robot." + leg + "_nominal", [j](RunProfile& p) -> double& {
        return p.robot.nominal_leg_pose[static_cast<std::size_t>(j)];
      });
    }

    add_double(v, "opts.action_scale", [](RunProfile& p) -> double& { return p.opts.action_scale; });
    add_double(v, "opts.init_joint_noise",
               [](RunProfile& p) -> double& { return p.opts.init_joint_noise; });
    add_bool(v, "opts.random_init_phase",
             [](RunProfile& p) -> bool& { return p.opts.random_init_phase; });
    add_double(v, "opts.fall_height_frac",
               [](RunProfile& p) -> double& { return p.opts.fall_height_frac; });
    add_double(v, "opts.fall_pitch", [](RunProfile& p) -> double& { return p.opts.fall_pitch; });
    add_string(v, "opts.terrain", [](RunProfile& p) -> std::string& { return p.opts.terrain; });
    add_double(v, "opts.terrain_max_elev",
               [](RunProfile& p) -> double& { return p.opts.terrain_max_elev; });
    add_bool(v, "opts.push_enabled", [](RunProfile& p) -> bool& { return p.opts.push_enabled; });
    add_int(v, "opts.push_interval_steps",
            [](RunProfile& p) -> int& { return p.opts.push_interval_steps; });
    add_double(v, "opts.push_force_max",
               [](RunProfile& p) -> double& { return p.opts.push_force_max; });
    add_double(v, "opts.push_torque_max",
               [](RunProfile& p) -> double& { return p.opts.push_torque_max; });
    add_double(v, "opts.push_duration",
               [](RunProfile& p) -> double& { return p.opts.push_duration; });

    add_int(v, "net.gru_hidden", [](RunProfile& p) -> int& { return p.net.gru_hidden; });
    add_int(v, "net.emb_hidden", [](RunProfile& p) -> int& { return p.net.emb_hidden; });
    add_int(v, "net.latent_dim", [](RunProfile& p) -> int& { return p.net.latent_dim; });
    add_int(v, "net.decoder_hidden",
            [](RunProfile& p) -> int& { return p.net.decoder_hidden; });
    add_int(v, "net.actor_hidden", [](RunProfile& p) -> int& { return p.net.actor_hidden; });
    for (int i = 0; i < 3; ++i) {
      add_int(v, "net.critic_hidden" + std::to_string(i + 1),
              [i](RunProfile& p) -> int& {
                return p.net.critic_hidden[static_cast<std::size_t>(i)];
              });
    }
    for (int i = 0; i < 2; ++i) {
      add_int(v, "net.baseline_hidden" + std::to_string(i + 1),
              [i](RunProfile& p) -> int& {
                return p.net.baseline_hidden[static_cast<std::size_t>(i)];
              });
    }
    add_double(v, "net.initial_log_std",
               [](RunProfile& p) -> double& { return p.net.initial_log_std; });

    add_double(v, "hp.gamma", [](RunProfile& p) -> double& { return p.hp.gamma; });
    add_double(v, "hp.gae_lambda", [](RunProfile& p) -> double& { return p.hp.gae_lambda; });
    add_double(v, "hp.entropy_coef", [](RunProfile& p) -> double& { return p.hp.entropy_coef; });
    add_double(v, "hp.clip_low", [](RunProfile& p) -> double& { return p.hp.clip_low; });
    add_double(v, "hp.clip_high", [](RunProfile& p) -> double& { return p.hp.clip_high; });
    add_double(v, "hp.learning_rate",
               [](RunProfile& p) -> double& { return p.hp.learning_rate; });
    add_double(v, "hp.lambda_r", [](RunProfile& p) -> double& { return p.hp.lambda_r; });
    add_double(v, "hp.lambda_pi", [](RunProfile& p) -> double& { return p.hp.lambda_pi; });
    add_double(v, "hp.lambda_v", [](RunProfile& p) -> double& { return p.hp.lambda_v; });
    add_int(v, "hp.epochs", [](RunProfile& p) -> int& { return p.hp.epochs; });
    add_int(v, "hp.num_envs", [](RunProfile& p) -> int& { return p.hp.num_envs; });
    add_int(v, "hp.horizon", [](RunProfile& p) -> int& { return p.hp.horizon; });
    add_int(v, "hp.episode_steps", [](RunProfile& p) -> int& { return p.hp.episode_steps; });
    add_int(v, "hp.minibatches", [](RunProfile& p) -> int& { return p.hp.minibatches; });
    add_int(v, "hp.updates", [](RunProfile& p) -> int& { return p.hp.updates; });
    add_bool(v, "hp.normalize_advantage",
             [](RunProfile& p) -> bool& { return p.hp.normalize_advantage; });
    add_bool(v, "hp.denoise_enabled",
             [](RunProfile& p) -> bool& { return p.hp.denoise_enabled; });
    add_bool(v, "hp.denoise_normalized",
             [](RunProfile& p) -> bool& { return p.hp.denoise_normalized; });
    add_bool(v, "hp.squared_l2", [](RunProfile& p) -> bool& { return p.hp.squared_l2; });
    add_string(v, "hp.algo", [](RunProfile& p) -> std::string& { return p.hp.algo; });

    std::sort(v.begin(), v.end(),
              [](const Field& a, const Field& b) { return a.key < b.key; });
    return v;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  const auto& v = fields();
  auto it = std::lower_bound(v.begin(), v.end(), key,
                             [](const Field& f, const std::string& k) { return f.key < k; });
  if (it == v.end() || it->key != key) return nullptr;
  return &*it;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RunProfile make_profile(const std::string& name) {
  RunProfile p;
  p.name = name;
  if (name == "paper") {
    p.backend = "stub";
    p.env.joint_count = 12;
    p.env.height_scan_count = 96;
    p.env.scan_x_count = 12;
    p.env.scan_y_count = 8;
    p.env.cycle_time = 1.0;
    p.env.nominal_pose.assign(12, 0.0);
    p.env.noise_specs = noise::default_noise_specs(1.0);
    p.env.cmd_vx_range = {0.0, 0.8};
    p.net = nn::NetConfig{};  // published widths
    p.net.obs_dim = p.env.obs_dim();
    p.net.state_dim = p.env.state_dim();
    p.net.action_dim = 12;
    p.hp.num_envs = 12288;
    p.hp.horizon = 24;
    p.hp.epochs = 2;
    p.hp.episode_steps = 2400;
    p.hp.learning_rate = 1e-5;
    p.hp.minibatches = 16;
    p.hp.updates = 1000;
    p.opts.random_init_phase = false;
  } else if (name == "desk" || name == "smoke") {
    p.backend = "planar";
    p.env.joint_count = 6;
    p.env.height_scan_count = 16;
    p.env.scan_x_count = 8;
    p.env.scan_y_count = 2;
    p.env.scan_x0 = -0.35;
    p.env.scan_dx = 0.1;
    p.env.cycle_time = 1.0;
    p.env.nominal_pose = p.robot.nominal_pose();
    const double mass_scale = p.robot.total_mass() / 38.0;
    p.env.noise_specs = noise::default_noise_specs(mass_scale);
    p.env.reward_weights.target_base_height = p.robot.nominal_base_height();
    p.env.reward_weights.force_scale = 70.0;
    p.env.cmd_vx_range = {0.15, 0.45};

    if (name == "desk") {
      p.hp.num_envs = 64;
      p.hp.episode_steps = 1000;
      p.hp.learning_rate = 1e-4;
      p.hp.minibatches = 4;
      p.hp.updates = 2000;
      p.net.gru_hidden = 128;
      p.net.emb_hidden = 128;
      p.net.latent_dim = 16;
      p.net.decoder_hidden = 48;
      p.net.actor_hidden = 32;
      p.net.critic_hidden = {256, 256, 128};
      p.net.baseline_hidden = {128, 64};
      p.opts.push_enabled = true;
      p.opts.push_interval_steps = 400;
      p.opts.push_force_max = 30.0;
    } else {
      p.hp.num_envs = 32;
      p.hp.episode_steps = 600;
      p.hp.learning_rate = 3e-4;
      p.hp.minibatches = 4;
      p.hp.updates = 2000;
      p.hp.squared_l2 = true;
      p.hp.denoise_normalized = true;
      p.net.initial_log_std = -0.7;
      p.net.gru_hidden = 64;
      p.net.emb_hidden = 64;
      p.net.latent_dim = 16;
      p.net.decoder_hidden = 48;
      p.net.actor_hidden = 24;
      p.net.critic_hidden = {128, 128, 64};
      p.net.baseline_hidden = {64, 32};
      p.opts.push_enabled = true;
      p.opts.push_interval_steps = 250;
      p.opts.push_force_max = 15.0;
      p.opts.push_torque_max = 2.0;
      p.opts.push_duration = 0.1;
      // smoke shaping: a strong velocity-tracking pull and dominant periodic
      // terms get the gait stepping within the minutes-scale budget; the
      // swing profile is scaled to this model's leg length
      p.env.reward_weights.lin_vel_tracking = 6.0;
      p.env.reward_weights.periodic_force = 1.5;
      p.env.reward_weights.periodic_velocity = 2.0;
      p.env.reward_weights.velocity_scale = 1.0;
      p.env.trajectory.h_max = 0.06;
      p.env.trajectory.v0 = 0.05;
      p.env.trajectory.acc0 = 5.0;
      // gentler randomization for the minutes-scale budget
      for (auto& s : p.env.noise_specs) {
        if (s.name == "joint_position") { s.lo = -0.1; s.hi = 0.1; }
        if (s.name == "joint_velocity") { s.lo = -0.4; s.hi = 0.4; }
        if (s.name == "motor_offset") { s.lo = -0.02; s.hi = 0.02; }
        if (s.name == "motor_strength") { s.lo = 0.95; s.hi = 1.05; }
        if (s.name == "payload") { s.lo = -1.0; s.hi = 3.0; }
        if (s.name == "pd_factors") { s.lo = 0.9; s.hi = 1.1; }
        if (s.name == "friction") { s.lo = 0.4; s.hi = 1.2; }
        if (s.name == "system_delay") { s.lo = 0.0; s.hi = 4.0; }
      }
    }
    p.net.obs_dim = p.env.obs_dim();
    p.net.state_dim = p.env.state_dim();
    p.net.action_dim = p.env.joint_count;
    p.hp.horizon = 24;
    p.hp.epochs = 2;
    p.env.trajectory.T = 0.5 * p.env.cycle_time;
  } else {
    throw std::invalid_argument("config: unknown profile '" + name +
                                "' (expected paper, desk or smoke)");
  }
  p.opts.max_episode_steps = p.hp.episode_steps;
  p.env.validate();
  return p;
}

std::vector<std::string> schema_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_override(RunProfile& p, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("config: override must be key=value, got '" +
                                key_value + "'");
  }
  std::string key = key_value.substr(0, eq);
  std::string value = key_value.substr(eq + 1);
  auto trim = [](std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
  };
  trim(key);
  trim(value);
  const Field* f = find_field(key);
  if (!f) throw std::invalid_argument("config: unknown field '" + key + "'");
  f->set(p, value);
  p.opts.max_episode_steps = p.hp.episode_steps;
}

std::string serialize(const RunProfile& p) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(p);
    out += "\n";
  }
  return out;
}

RunProfile load_config_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string profile_name;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected 'key = value', got '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return (a == std::string::npos) ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "profile") {
      profile_name = value;
    } else {
      pairs.emplace_back(key, value);
    }
  }
  if (profile_name.empty()) {
    throw std::invalid_argument("config: missing 'profile' key");
  }
  RunProfile p = make_profile(profile_name);
  for (const auto& [k, v] : pairs) apply_override(p, k + "=" + v);
  return p;
}

RunProfile load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return load_config_text(ss.str());
}

std::uint64_t config_hash(const RunProfile& p) {
  const std::string s = serialize(p);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunProfile RunConfig::resolve() const {
  RunProfile p =
      config_file.empty() ? make_profile(profile_name) : load_config_file(config_file);
  for (const auto& o : overrides) apply_override(p, o);
  p.env.validate();
  p.hp.validate();
  return p;
}

learn::EnvFactory make_env_factory(const RunProfile& p, std::uint64_t seed) {
  if (p.backend == "planar") {
    return [p, seed](std::uint64_t stream) -> std::unique_ptr<env::EnvBase> {
      return std::make_unique<env::PlanarEnv>(p.env, p.robot, p.opts, seed, stream);
    };
  }
  if (p.backend == "stub") {
    return [p, seed](std::uint64_t stream) -> std::unique_ptr<env::EnvBase> {
      return std::make_unique<env::StubEnv>(p.env, p.opts, seed, stream);
    };
  }
  throw std::invalid_argument("config: unknown backend '" + p.backend + "'");
}

void write_manifest(const std::string& out_dir, const RunProfile& p,
                    std::uint64_t seed, const std::string& subcommand) {
  std::filesystem::create_directories(out_dir);
  std::ofstream os(out_dir + "/manifest.txt");
  os << "subcommand = " << subcommand << "\n";
  os << "profile = " << p.name << "\n";
  os << "backend = " << p.backend << "\n";
  os << "seed = " << seed << "\n";
  os << "config_hash = " << config_hash(p) << "\n";
}

// ---------------------------------------------------------------------------

int Csv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double Csv::number(std::size_t row, int col) const {
  return std::stod(rows.at(row).at(static_cast<std::size_t>(col)));
}

void write_csv_strings(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("csv: cannot open for write: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os << ",";
    os << header[i];
  }
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      os << row[i];
    }
    os << "\n";
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> srows;
  srows.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<std::string> s;
    s.reserve(row.size());
    for (double v : row) s.push_back(format_double(v));
    srows.push_back(std::move(s));
  }
  write_csv_strings(path, header, srows);
}

Csv read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("csv: cannot open " + path);
  Csv csv;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
      const auto comma = s.find(',', pos);
      out.push_back(s.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  if (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    csv.header = split(line);
  }
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    csv.rows.push_back(split(line));
  }
  return csv;
}

}  // namespace dwl::config
