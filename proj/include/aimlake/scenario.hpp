#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aimlake/grid.hpp"
#include "aimlake/model.hpp"

namespace aimlake {

struct GridSpec {
  std::string side_length = "2*pi";  ///< expression, may use pi
  int points = 64;
  int cutoff = 6;
};

struct FieldsSpec {
  FieldSource b{"1", ""};
  FieldSource nu{"1", ""};
  FieldSource eta{"0", ""};
};

struct IntegratorSpec {
  double dt = 0.01;
  double horizon = 40.0;  ///< ensemble horizon for the absorbing-ball estimate
  double spinup = 20.0;   ///< before attractor sampling
};

struct DynamicsSpec {
  int ensemble = 4;
  double initial_radius = 1.0;
  double margin = 0.1;
  double spacing = 1.0;
  int samples = 40;
  int cutoff_samples = 1000;
  int lipschitz_pairs = 1000;
  double energy_dt = 0.002;
  double energy_horizon = 1.0;
  double sample_dt = 0.0;  ///< attractor sampling step; 0 uses integrator.dt
};

struct AimSpec {
  int n = 4;
  int levels = 3;
  std::vector<double> tau{0.05};
  bool paper_schedule = false;
  double chi = 0.03;
  double delta0 = 1.0;
  double memo_resolution = 1e-6;
  long budget = 20'000'000;
  bool include_tail = true;
  std::vector<int> n_sweep;
  int sweep_level = 2;
  int audit_samples = 100;
  std::vector<int> bound_cuts{1, 2, 4, 8, 16};
  std::vector<double> bound_times{0.01, 0.1, 1.0};
  std::vector<double> bound_taus{0.01, 0.1};
};

struct DecaySpec {
  bool enabled = true;
  double alpha = 2.0;
  std::vector<std::string> box_ladder;  ///< side lengths; empty means the scenario box only
  double horizon = 20.0;
  double dt = 0.01;
  double record_dt = 0.05;
  double initial_radius = 0.2;
  double q = 1.0;
  std::vector<double> lp_times{0.01, 0.1, 1.0};
  std::vector<std::string> mollifiers{"Identity", "Gaussian", "HeatEvolved", "DeltaMinusGaussian"};
  double smallness_C = 0.25;
};

struct Scenario {
  std::string name;
  std::string source_path;
  std::string base_dir;  ///< relative table paths resolve against this
  std::string hash;      ///< sha256 of the scenario file bytes
  GridSpec grid;
  FieldsSpec fields;
  ForcingModel forcing;
  IntegratorSpec integrator;
  DynamicsSpec dynamics;
  AimSpec aim;
  DecaySpec decay;
  std::uint64_t seed = 1;
  std::string output = "out";

  double side_length() const;
  Grid make_grid() const;
  Grid make_grid(double side_length) const;
  CoefficientFields make_fields() const;
  CoefficientFields make_fields(const Grid& grid) const;
};

/// Parses and validates a scenario file. Errors are ConfigError naming the key.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& base_dir);

}  // namespace aimlake
