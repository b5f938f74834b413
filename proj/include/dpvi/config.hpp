#pragma once
// JSON run configuration: problem selection/composition, schedule, privacy
// policy, solver knobs and analysis knobs, plus a canonical content hash so
// every output file can be traced back to the exact configuration.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpvi/privacy.hpp"
#include "dpvi/problem.hpp"
#include "dpvi/schedule.hpp"

namespace dpvi {

struct RunConfig {
  std::string mode = "run";  // reference | run | simulate | analyze | check
  // {"name": "reference10" | "scalar"} or a full composition object.
  nlohmann::json problem = nlohmann::json{{"name", "reference10"}};
  StepSchedule schedule;
  PrivacyPolicy policy;

  std::int64_t iterations = 100000;
  std::vector<std::uint64_t> seeds = {1};
  std::int64_t record_every = 10;
  std::int64_t dense_until = 1000;
  std::int64_t kkt_every = 0;
  double fixed_point_tol = 0.0;
  bool noisy_mu = true;

  std::string output_dir = "out";
  std::string reference_file;
  double reference_tol = 1e-4;

  // analyze-mode knobs
  std::int64_t analysis_kmax = 1000000;
  std::vector<std::int64_t> checkpoints = {100, 1000, 10000, 100000};
  double eps_ball = 1.0;
  std::vector<double> tradeoff_epsilons = {0.1, 0.6931471805599453, 1.0986122886681098};
  long lipschitz_samples = 20000;
  std::int64_t analysis_record_every = 100;
  std::string run_dir;  // trace directory to join observed errors from
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

// Canonical serialization (sorted keys, fixed float format) used for hashing.
std::string canonical_dump(const RunConfig& cfg);

// FNV-1a 64-bit over the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

// Builds the problem named or composed in cfg.problem. Known names:
// "reference10" (the ten-agent benchmark) and "scalar" (min x^2 s.t.
// 1 - x <= 0 on [-10, 10]). Anything else must be a full composition object.
ProblemSpec build_problem(const nlohmann::json& problem,
                          std::vector<std::string>* notes = nullptr);

// Scalar benchmark: f = x^2, g = 1 - x, X = [-10, 10], Slater point 5.
ProblemSpec build_scalar_problem();

}  // namespace dpvi
