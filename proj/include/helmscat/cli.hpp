#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "helmscat/common.hpp"

namespace helmscat::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitOracle = 4,
  kExitInvariant = 5,
};

/// Resolved run configuration. Execution settings (threads, output directory)
/// are kept out of to_json() so artifacts do not depend on them.
struct RunConfig {
  int mesh_level = 3;
  std::string shape = "identity";
  Complex k{1.0, 0.0};
  std::string datum = "constant:1";
  std::vector<Vec3> points{Vec3(2.0, 0.0, 0.0)};
  int direction_count = 50;
  std::vector<Vec3> directions;  // explicit list overrides direction_count
  double R = 2.0;
  double R2 = 3.0;
  std::string method = "direct";
  bool dtn_matrix = false;
  bool dump_operators = false;
  nlohmann::json sweep = nlohmann::json::object();
  nlohmann::json convergence = nlohmann::json::object();
  nlohmann::json verify = nlohmann::json::object();
  std::uint64_t seed = 0;
  bool strict = false;

  std::string output = "out";
  int threads = 0;

  /// Throws ConfigError on unknown keys, wrong types or Im k < 0.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::vector<Vec3> resolved_directions() const;
};

/// Applies `--key value` overrides to a config.
struct Overrides {
  std::string config_path;
  int level = -1;
  std::string k;
  std::string shape;
  std::string datum;
  std::string out;
  int threads = -1;
  bool strict = false;
};

RunConfig resolve_config(const Overrides& o);

/// Parses "RE,IM" or "RE".
Complex parse_wave_number(const std::string& text);

/// {"config": ..., "result": ...} plus "digest", the SHA-256 of the dump without it.
nlohmann::json seal(nlohmann::json config, nlohmann::json result);

/// Runs one command. Never throws; maps errors onto exit codes and writes
/// messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace helmscat::cli
