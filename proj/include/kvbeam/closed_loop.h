#pragma once

#include <functional>
#include <iosfwd>

#include <Eigen/Core>

#include "kvbeam/galerkin.h"
#include "kvbeam/matrix_equations.h"
#include "kvbeam/synthesis.h"

namespace kvbeam {

/// Plant + error-feedback controller over the stacked state (x, z).
/// Exogenous input vector is s = (w_dist, y_ref).
struct ClosedLoop {
  Eigen::MatrixXd Acl;
  Eigen::MatrixXd Ein;   // N x (n_d + p)
  Eigen::MatrixXd Cy;    // p x N, y = Cy x
  Eigen::MatrixXd Cu;    // p x N, u = Cu x
  int plant_dim = 0;
  int controller_dim = 0;
  int disturbances = 0;
  int outputs = 0;

  int dim() const { return static_cast<int>(Acl.rows()); }
};

/// Generic interconnection with a strictly proper controller (Ac, Bc, Cc)
/// driven by e = y - y_ref.
ClosedLoop assemble_closed_loop(const GalerkinModel& plant, const StateSpace& controller);
ClosedLoop assemble_closed_loop(const GalerkinModel& plant,
                                const RegulatorRealization& controller);
ClosedLoop assemble_closed_loop(const GalerkinModel& plant,
                                const LowGainController& controller);

struct ExogenousInput {
  std::function<Eigen::VectorXd(double)> w_dist;
  std::function<Eigen::VectorXd(double)> y_ref;
};

/// Zero disturbance and reference of the right sizes.
ExogenousInput zero_input(int disturbances, int outputs);

enum class Integrator {
  kTrapezoidal,  // implicit trapezoid, A-stable, O(h^2)
  kExactHold,    // matrix exponential, cubic input hold through 4 samples
};

struct SimulationOptions {
  Integrator method = Integrator::kTrapezoidal;
  double horizon = 16.0;
  double step = 1e-3;
  int record_every = 1;        // keep every k-th sample
  bool record_plant_state = false;
};

struct SimulationResult {
  Eigen::VectorXd times;
  Eigen::MatrixXd y, y_ref, u, e;  // samples x p
  Eigen::VectorXd err_norm;
  Eigen::MatrixXd plant_state;     // samples x plant_dim, if recorded

  Eigen::Index samples() const { return times.size(); }
};

/// Fixed-step integration of x' = Acl x + Ein s(t) from x0 (zero if empty).
/// Trapezoidal by default; kExactHold propagates the homogeneous part exactly,
/// so sampled internal-model frequencies are not warped. Throws NumericalError
/// if the step matrix is singular or the state blows up.
SimulationResult simulate(const ClosedLoop& cl, const ExogenousInput& input,
                          const SimulationOptions& opts,
                          const Eigen::VectorXd& x0 = Eigen::VectorXd());

struct ErrorMetrics {
  double peak = 0.0;
  double terminal = 0.0;    // mean ||e|| over the last period
  double decay_rate = 0.0;  // +inf when the error is identically zero
  int fitted_windows = 0;
};

/// Decay rate: least-squares slope of log(max ||e|| per period window) from
/// the largest window until the envelope reaches ten times its final level.
ErrorMetrics error_metrics(const SimulationResult& res, double period = 2.0);

/// Mean of ||e|| over samples with t in [t_end - period, t_end].
double final_period_mean(const SimulationResult& res, double period);

/// CSV with header t,y1,y2,yref1,yref2,u1,u2,enorm (12 significant digits).
void write_csv(std::ostream& os, const SimulationResult& res);

}  // namespace kvbeam
