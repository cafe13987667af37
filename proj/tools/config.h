#pragma once

// Experiment configuration: flat "key = value" lines grouped under
// [section] headers. '#' starts a comment. Reals accept a trailing "pi"
// factor ("pi", "3pi", "0.5*pi"). Vector-valued keys are whitespace
// separated; lists of vectors use ';' between entries.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kvbeam/galerkin.h"
#include "kvbeam/signals.h"
#include "kvbeam/synthesis.h"
#include "kvbeam/closed_loop.h"

namespace kvbeam::cli {

struct BumpSpec {
  double scale = 1.0 / 3.0;
  int left = 2;
  int right = 2;
};

struct TrigSpec {
  Eigen::VectorXd a0;
  std::vector<double> freqs;
  std::vector<Eigen::VectorXd> cos, sin;

  TrigSignal to_signal() const;
};

enum class ReferenceKind { kTrig, kTriangle };

struct ExperimentConfig {
  // [beam]
  double E = 10.0, I_mom = 1.0, d_KV = 0.01, d_v = 0.4;
  double xi1 = -0.6, xi2 = 0.3;
  BumpSpec b1{1.0 / 3.0, 2, 6};
  BumpSpec b2{1.0 / 3.0, 6, 2};
  std::vector<BumpSpec> b_d{BumpSpec{1.0 / 3.0, 2, 2}};
  // [galerkin]
  int n_design = 39;
  int n_sim = 69;
  // [internal_model]
  double base_frequency;  // pi
  int q = 10;
  // [synthesis]
  SynthesisOptions synthesis;
  // [signals]
  ReferenceKind reference = ReferenceKind::kTriangle;
  double triangle_amplitude = 1.0;
  TrigSpec ref;
  TrigSpec dist;
  // [simulation]
  double horizon = 16.0;
  double step = 1e-3;
  int record_every = 1;
  Integrator integrator = Integrator::kTrapezoidal;
  double regulation_tolerance = 1e-3;
  double deflection_dt = 0.05;
  int deflection_points = 41;
  // [low_gain]
  int lg_q = 5;
  double lg_eps = 0.076;  // <= 0 means tune
  double lg_eps_max = 1.0;
  int lg_grid = 400;
  // [compare]
  double cmp_horizon = 300.0;
  double cmp_step = 2e-3;
  int cmp_record_every = 5;
  Integrator cmp_integrator = Integrator::kExactHold;
  // [output]
  std::string out_dir = "kvbeam_out";

  ExperimentConfig();

  BeamParameters beam() const;
  std::vector<double> frequencies() const;
  std::vector<double> low_gain_frequencies() const;
  double period() const;
  ExogenousInput exogenous() const;
  /// max ||y_ref(t)|| over one period.
  double reference_amplitude() const;

  /// Checks every precondition of the pipeline. Throws ValidationError.
  /// With allow_zero_kv the beam may have d_KV = 0 (verify only).
  void validate(bool allow_zero_kv = false) const;
};

/// Throws ValidationError with a line number on malformed input.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace kvbeam::cli
