/**
 * Run configuration: one JSON document with sections spec, integrator,
 * analysis, initial_points, seeds and outputs. Numbers may be written as
 * simple expressions ("sqrt(3)", "sqrt(2)/2", "2*pi"); n_f accepts
 * "unbounded". A manifest written by a previous run is itself a valid
 * config.
 */
#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohm/analysis.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/errors.hpp"
#include "bohm/nodal.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Invalid configuration; pointer is the JSON pointer of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer.empty() ? what : pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }
  const char* kind() const noexcept override { return "config_error"; }

 private:
  std::string pointer_;
};

/// Evaluate a numeric expression: literals, pi, e, + - * / ^, parentheses,
/// sqrt exp log sin cos. Throws std::invalid_argument.
double evaluate_expression(const std::string& text);

struct AnalysisSettings {
  GridSpec grid;
  /// Snapshot times (density, node snapshots).
  std::vector<double> times{0.0};
  double floor = kSupportFloor;

  // nodes
  std::string node_mode = "snapshot";  // snapshot | trace | contour | crosscheck
  NodeLocator locator = NodeLocator::automatic;
  int k_max = 5;
  int seed_grid = 256;
  double t0 = 0.0;
  double t1 = 10.0;
  double dt = 0.01;
  double speed_level = 500.0;
  int contour_grid = 200;
  double continuation_threshold = 1.0;

  // trajectories
  bool lyapunov = false;
  double renorm_interval = 1.0;

  // sweep
  std::vector<std::optional<int>> n_f_list{2, 4, 6, 8, 10, 12};
  std::vector<double> c2_list{0.2, 0.5, std::numbers::sqrt2 / 2.0};
  int sweep_n_in = 0;

  // overlap / Poisson tables
  std::vector<double> amplitudes{2.5, 2.0, 1.5, 1.0};
  int n_f_max = 20;

  // compare / convergence series
  std::vector<double> checkpoints;

  // Born samples written by the density command (0 = none)
  std::uint64_t born_count = 0;
};

struct RunConfig {
  SystemSpec spec;
  IntegratorSettings integrator;
  AnalysisSettings analysis;
  std::vector<Point2> initial_points{{0.1, 0.4}};
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> outputs{"csv", "image"};

  bool wants(const std::string& artifact) const;
};

/// Parse and validate; unknown keys and bad values raise ConfigError.
RunConfig parse_config(const json& doc);

/// Apply "section.key=value" overrides (value parsed as JSON, else string).
void apply_override(json& doc, const std::string& assignment);

/// Fully resolved config, sorted keys, numbers as doubles/integers.
json canonical_json(const RunConfig& config);

/// Lower-case hex SHA-256 of the compact canonical JSON.
std::string config_hash(const RunConfig& config);

/// First 16 hex digits of config_hash as an integer (binary file headers).
std::uint64_t short_hash(const std::string& hex_digest);

}  // namespace bohm::cli
