#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dwl/env.hpp"
#include "dwl/learn.hpp"
#include "dwl/nets.hpp"
#include "dwl/obs.hpp"
#include "dwl/sim.hpp"

namespace dwl::config {

/// A fully-resolved run configuration: environment definition, robot,
/// episode options, network widths and optimization hyperparameters.
struct RunProfile {
  std::string name = "smoke";
  std::string backend = "planar";  // "planar" | "stub"
  obs::EnvConfig env;
  sim::RobotModel robot;
  env::EnvOptions opts;
  nn::NetConfig net;
  learn::Hyperparams hp;
};

/// Built-in profiles: "paper" (published dimensions and hyperparameters,
/// kinematic stub backend), "desk" (planar biped, workstation scale) and
/// "smoke" (planar biped, minutes-scale training).
RunProfile make_profile(const std::string& name);

/// Returns every overridable key, sorted.
std::vector<std::string> schema_keys();

/// Applies "dotted.key=value"; throws std::invalid_argument naming the key
/// when it is unknown or the value does not parse.
void apply_override(RunProfile& p, const std::string& key_value);

/// Flat "key = value" text dump covering the whole schema; parseable by
/// load_config_text.
std::string serialize(const RunProfile& p);

/// Rebuilds a profile from serialized text: resolves the base profile from
/// the "profile" key, then applies every other line as an override.
RunProfile load_config_text(const std::string& text);
RunProfile load_config_file(const std::string& path);

/// FNV-1a hash of the canonical serialization.
std::uint64_t config_hash(const RunProfile& p);

/// Command-line level run description.
struct RunConfig {
  std::string profile_name = "smoke";
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::vector<std::string> overrides;  // "key=value"
  int workers = 1;
  std::string config_file;  // optional: load instead of a named profile

  RunProfile resolve() const;
};

/// Environment factory honoring the profile's backend.
learn::EnvFactory make_env_factory(const RunProfile& p, std::uint64_t seed);

void write_manifest(const std::string& out_dir, const RunProfile& p,
                    std::uint64_t seed, const std::string& subcommand);

// ---------------------------------------------------------------------------
// CSV helpers; every emitted file carries a header and parses back.
// ---------------------------------------------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

std::string format_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_csv_strings(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);
Csv read_csv(const std::string& path);

}  // namespace dwl::config
