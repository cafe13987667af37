#include "commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "kvbeam/chebyshev.h"
#include "kvbeam/closed_loop.h"
#include "kvbeam/errors.h"
#include "kvbeam/galerkin.h"
#include "kvbeam/matrix_equations.h"
#include "kvbeam/matrix_io.h"
#include "kvbeam/signals.h"

namespace kvbeam::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_simulation_csv(const fs::path& path, const SimulationResult& res) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(os, res);
  if (!os) throw IoError("write failed: " + path.string());
}

std::string csv_plot(const std::string& png, const std::string& title,
                     const std::string& ylabel, const std::string& plots, bool logy = false) {
  std::ostringstream os;
  os << "set terminal pngcairo size 900,500\n"
     << "set output '" << png << "'\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set title '" << title << "'\n"
     << "set xlabel 't'\nset ylabel '" << ylabel << "'\n"
     << "set grid\n";
  if (logy) os << "set logscale y\nset format y '10^{%L}'\n";
  os << "plot " << plots << "\n";
  return os.str();
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> controller_parts(
    const RegulatorRealization& c) {
  return {{"G1", &c.G1}, {"G2", &c.G2}, {"AL", &c.AL}, {"BL", &c.BL},
          {"Lr", &c.Lr}, {"K1", &c.K1}, {"K2r", &c.K2r}};
}

struct Plants {
  GalerkinModel design, sim;
};

Plants build_plants(const ExperimentConfig& cfg) {
  const BeamParameters bp = cfg.beam();
  return {assemble_first_order(bp, cfg.n_design), assemble_first_order(bp, cfg.n_sim)};
}

SimulationOptions sim_options(double horizon, double step, int record_every, Integrator m) {
  SimulationOptions o;
  o.method = m;
  o.horizon = horizon;
  o.step = step;
  o.record_every = record_every;
  return o;
}

std::vector<std::pair<double, double>> sorted_eigs(const Eigen::MatrixXd& A) {
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
  std::vector<std::pair<double, double>> out;
  for (const auto& z : ev) out.emplace_back(z.real(), z.imag());
  // Conjugate pairs can differ by roundoff in the real part; sort on rounded keys.
  auto key = [](const std::pair<double, double>& p) {
    return std::make_pair(std::round(p.first * 1e9) / 1e9, p.second);
  };
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a) > key(b); });
  return out;
}

Json metrics_json(const ErrorMetrics& m, double amplitude, double tolerance) {
  Json j;
  j["peak"] = num(m.peak);
  j["terminal"] = num(m.terminal);
  j["terminal_relative"] = amplitude > 0 ? num(m.terminal / amplitude) : Json(nullptr);
  j["decay_rate"] = m.fitted_windows > 0 ? num(m.decay_rate) : Json(nullptr);
  j["fitted_windows"] = m.fitted_windows;
  j["reference_amplitude"] = num(amplitude);
  j["tolerance"] = num(tolerance);
  j["regulated"] = m.terminal <= tolerance * amplitude;
  return j;
}

// Deflection v(xi, t) = sum_k alpha_k(t) phi_k(xi) on a uniform grid, in
// gnuplot grid format (blank line between time slices).
std::string deflection_table(const SimulationResult& res, int n, double dt, int points) {
  Eigen::MatrixXd basis(points, n);
  for (int i = 0; i < points; ++i) {
    const double xi = -1.0 + 2.0 * i / (points - 1);
    basis.row(i) = assemble_output_matrix(xi, xi, n).row(0);
  }
  std::ostringstream os;
  os << "# t xi v\n";
  const double t_end = res.times[res.samples() - 1];
  const double spacing = res.samples() > 1 ? res.times[1] - res.times[0] : 1.0;
  for (int j = 0; j * dt <= t_end + 1e-12; ++j) {
    const auto idx = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(j * dt / spacing)), res.samples() - 1);
    const Eigen::VectorXd v = basis * res.plant_state.row(idx).head(n).transpose();
    for (int i = 0; i < points; ++i) {
      os << fmt12(res.times[idx]) << ' ' << fmt12(-1.0 + 2.0 * i / (points - 1)) << ' '
         << fmt12(v[i]) << '\n';
    }
    os << '\n';
  }
  return os.str();
}

double window_l2(const SimulationResult& r, double t0, double t1) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.samples(); ++i) {
    if (r.times[i] >= t0 && r.times[i] <= t1) s += r.u.row(i).squaredNorm();
  }
  return std::sqrt(s);
}

}  // namespace

void save_controller(const fs::path& dir, const RegulatorRealization& c) {
  make_dir(dir);
  for (const auto& [name, m] : controller_parts(c)) save_dense(dir / (name + ".txt"), *m);
}

RegulatorRealization load_controller(const fs::path& dir, const ExperimentConfig& cfg) {
  if (!fs::is_directory(dir)) {
    throw IoError("controller directory " + dir.string() + " not found (run 'design' first)");
  }
  auto load = [&](const char* name) { return load_dense(dir / (std::string(name) + ".txt")); };
  RegulatorRealization c;
  c.G1 = load("G1");
  c.G2 = load("G2");
  c.AL = load("AL");
  c.BL = load("BL");
  c.Lr = load("Lr");
  c.K1 = load("K1");
  c.K2r = load("K2r");
  const Eigen::Index nz = 2 * (2 * cfg.q + 1), p = 2, r = c.AL.rows();
  auto expect = [&](const char* name, const Eigen::MatrixXd& m, Eigen::Index rows,
                    Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols) {
      throw ValidationError("controller/" + std::string(name) + ".txt has shape " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                            ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    }
  };
  expect("G1", c.G1, nz, nz);
  expect("G2", c.G2, nz, p);
  expect("AL", c.AL, r, r);
  expect("BL", c.BL, r, p);
  expect("Lr", c.Lr, r, p);
  expect("K1", c.K1, p, nz);
  expect("K2r", c.K2r, p, r);
  return c;
}

int cmd_design(const ExperimentConfig& cfg, const fs::path& out) {
  const Plants pl = build_plants(cfg);
  const InternalModel im = build_internal_model(cfg.frequencies());
  const SynthesisReport rep = synthesize_regulator(pl.design, im, cfg.synthesis);
  const RegulatorRealization& c = rep.controller;
  const ClosedLoop cl_sim = assemble_closed_loop(pl.sim, c);
  const ClosedLoop cl_design = assemble_closed_loop(pl.design, c);
  const double margin = stability_margin(cl_sim.Acl);

  make_dir(out);
  save_controller(out / "controller", c);

  Json j;
  j["controller_dim"] = c.dim();
  j["internal_model_dim"] = im.dim();
  j["reduced_order"] = static_cast<int>(c.AL.rows());
  j["open_loop_margin"] = num(stability_margin(pl.design.A));
  j["open_loop_margin_sim"] = num(stability_margin(pl.sim.A));
  j["observer_margin"] = num(rep.observer.margin);
  j["state_feedback_margin"] = num(rep.feedback.margin);
  j["closed_loop_margin_design"] = num(stability_margin(cl_design.Acl));
  j["closed_loop_margin"] = num(margin);
  j["hankel_singular_values"] = vec(rep.hankel_sv);
  j["residuals"] = {{"observer_care", num(rep.observer.care_residual)},
                    {"state_feedback_care", num(rep.feedback.care_residual)},
                    {"gramian_lyapunov", num(rep.gramian_residual)}};
  Json zeros = Json::array();
  for (std::size_t k = 0; k < rep.zeros.freqs.size(); ++k) {
    zeros.push_back({{"omega", num(rep.zeros.freqs[k])}, {"sigma_min", num(rep.zeros.sigma_min[k])}});
  }
  j["transmission_zero_check"] = {
      {"threshold", num(rep.zeros.threshold)}, {"passed", rep.zeros.passed()}, {"frequencies", zeros}};
  write_json(out / "design.json", j);

  std::ostringstream eig;
  eig << "# re im (closed loop on the simulation plant)\n";
  for (const auto& [re, im_] : sorted_eigs(cl_sim.Acl)) eig << fmt12(re) << ' ' << fmt12(im_) << '\n';
  write_text(out / "closed_loop_eigs.dat", eig.str());
  write_text(out / "fig_eigs.gp",
             "set terminal pngcairo size 700,600\nset output 'fig_eigs.png'\n"
             "set title 'Closed-loop eigenvalues'\nset xlabel 'Re'\nset ylabel 'Im'\n"
             "set grid\nset xrange [-15:0.5]\nset yrange [-60:60]\n"
             "plot 'closed_loop_eigs.dat' using 1:2 with points pt 7 ps 0.6 notitle\n");

  std::cout << "controller dimension " << c.dim() << ", closed-loop margin "
            << fmt12(margin) << " (simulation plant)\n";
  if (!(margin > kHurwitzThreshold)) {
    throw NumericalError("design: closed loop on the simulation plant is not stable (margin " +
                         fmt12(margin) + ")");
  }
  return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out) {
  const RegulatorRealization c = load_controller(out / "controller", cfg);
  const GalerkinModel sim = assemble_first_order(cfg.beam(), cfg.n_sim);
  const ClosedLoop cl = assemble_closed_loop(sim, c);
  SimulationOptions opts = sim_options(cfg.horizon, cfg.step, cfg.record_every, cfg.integrator);
  opts.record_plant_state = true;
  const SimulationResult res = simulate(cl, cfg.exogenous(), opts);
  const ErrorMetrics m = error_metrics(res, cfg.period());
  const double amp = cfg.reference_amplitude();

  make_dir(out);
  write_simulation_csv(out / "simulation.csv", res);
  Json j = metrics_json(m, amp, cfg.regulation_tolerance);
  j["closed_loop_margin"] = num(stability_margin(cl.Acl));
  j["samples"] = static_cast<long long>(res.samples());
  write_json(out / "metrics.json", j);

  write_text(out / "fig_output.gp",
             csv_plot("fig_output.png", "Outputs and references", "y",
                      "'simulation.csv' using 1:2 with lines, '' using 1:3 with lines, "
                      "'' using 1:4 with lines dt 2, '' using 1:5 with lines dt 2"));
  write_text(out / "fig_error.gp",
             csv_plot("fig_error.png", "Tracking error", "||e(t)||",
                      "'simulation.csv' using 1:8 with lines", true));
  write_text(out / "fig_control.gp",
             csv_plot("fig_control.png", "Control inputs", "u",
                      "'simulation.csv' using 1:6 with lines, '' using 1:7 with lines"));
  write_text(out / "deflection.dat",
             deflection_table(res, sim.n, cfg.deflection_dt, cfg.deflection_points));
  write_text(out / "fig_deflection.gp",
             "set terminal pngcairo size 900,600\nset output 'fig_deflection.png'\n"
             "set title 'Beam deflection'\nset xlabel 't'\nset ylabel 'xi'\nset zlabel 'v'\n"
             "set hidden3d\nsplot 'deflection.dat' using 1:2:3 with lines notitle\n");

  std::cout << "terminal mean ||e|| " << fmt12(m.terminal) << ", decay rate "
            << fmt12(m.decay_rate) << ", regulated " << (j["regulated"].get<bool>() ? "yes" : "no")
            << "\n";
  return kExitOk;
}

namespace {

struct Pipeline {
  double margin = 0.0;
  double eps = 0.0;
  EpsilonTuning tuning;
  int dim = 0;
  SimulationResult res;
  ErrorMetrics metrics;
};

}  // namespace

int cmd_compare(const ExperimentConfig& cfg, const fs::path& out) {
  const Plants pl = build_plants(cfg);
  const ExogenousInput input = cfg.exogenous();
  const SimulationOptions opts =
      sim_options(cfg.cmp_horizon, cfg.cmp_step, cfg.cmp_record_every, cfg.cmp_integrator);

  // Independent pipelines; each only reads the shared plants.
  auto reduced = std::async(std::launch::async, [&] {
    Pipeline p;
    const InternalModel im = build_internal_model(cfg.frequencies());
    const SynthesisReport rep = synthesize_regulator(pl.design, im, cfg.synthesis);
    const ClosedLoop cl = assemble_closed_loop(pl.sim, rep.controller);
    p.dim = rep.controller.dim();
    p.margin = stability_margin(cl.Acl);
    p.res = simulate(cl, input, opts);
    p.metrics = error_metrics(p.res, cfg.period());
    return p;
  });
  auto low_gain = std::async(std::launch::async, [&] {
    Pipeline p;
    const InternalModel im = build_internal_model(cfg.low_gain_frequencies());
    p.tuning = tune_epsilon(pl.design, im, cfg.lg_eps_max, cfg.lg_grid);
    p.eps = cfg.lg_eps > 0 ? cfg.lg_eps : p.tuning.eps_star;
    const LowGainController c = build_low_gain(pl.design, im, p.eps);
    const ClosedLoop cl = assemble_closed_loop(pl.sim, c);
    p.dim = c.dim();
    p.margin = stability_margin(cl.Acl);
    if (!(p.margin > kHurwitzThreshold)) {
      throw NumericalError("compare: low-gain closed loop is not stable (eps " + fmt12(p.eps) + ")");
    }
    p.res = simulate(cl, input, opts);
    p.metrics = error_metrics(p.res, cfg.period());
    return p;
  });
  const Pipeline r = reduced.get();
  const Pipeline l = low_gain.get();

  const double T = cfg.cmp_horizon, per = cfg.period();
  double diff = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < r.res.samples(); ++i) {
    if (r.res.times[i] < T - per - 1e-12) continue;
    diff = std::max(diff, (r.res.u.row(i) - l.res.u.row(i)).norm());
    scale = std::max(scale, r.res.u.row(i).norm());
  }
  const double ur = window_l2(r.res, 0.0, per), ul = window_l2(l.res, 0.0, per);

  make_dir(out);
  write_simulation_csv(out / "compare_reduced.csv", r.res);
  write_simulation_csv(out / "compare_low_gain.csv", l.res);
  const double amp = cfg.reference_amplitude();
  Json j;
  j["reduced_order"] = {{"controller_dim", r.dim},
                        {"closed_loop_margin", num(r.margin)},
                        {"metrics", metrics_json(r.metrics, amp, cfg.regulation_tolerance)}};
  j["low_gain"] = {{"controller_dim", l.dim},
                   {"eps", num(l.eps)},
                   {"eps_star", num(l.tuning.eps_star)},
                   {"tuned_margin", num(l.tuning.margin)},
                   {"poorly_stabilizable", l.tuning.poorly_stabilizable()},
                   {"closed_loop_margin", num(l.margin)},
                   {"metrics", metrics_json(l.metrics, amp, cfg.regulation_tolerance)}};
  j["steady_state_u_relative_difference"] = scale > 0 ? num(diff / scale) : num(diff);
  j["early_window_u_ratio"] = ur > 0 ? num(ul / ur) : Json(nullptr);
  write_json(out / "compare.json", j);
  write_text(out / "fig_compare_error.gp",
             csv_plot("fig_compare_error.png", "Tracking error: reduced order vs low gain",
                      "||e(t)||",
                      "'compare_reduced.csv' using 1:8 with lines title 'reduced order', "
                      "'compare_low_gain.csv' using 1:8 with lines title 'low gain'",
                      true));
  write_text(out / "fig_compare_control.gp",
             csv_plot("fig_compare_control.png", "Control u1: reduced order vs low gain", "u1",
                      "'compare_reduced.csv' using 1:6 with lines title 'reduced order', "
                      "'compare_low_gain.csv' using 1:6 with lines title 'low gain'"));

  std::cout << "margins: reduced " << fmt12(r.margin) << ", low gain " << fmt12(l.margin)
            << " (eps " << fmt12(l.eps) << ")\n";
  return kExitOk;
}

namespace {

class Report {
 public:
  void add(const std::string& name, bool passed, double value, double tolerance,
           const std::string& detail = "") {
    Json c;
    c["name"] = name;
    c["status"] = passed ? "pass" : "fail";
    c["value"] = num(value);
    c["tolerance"] = num(tolerance);
    if (!detail.empty()) c["detail"] = detail;
    checks_.push_back(c);
    if (!passed) ++failed_;
  }
  void skip(const std::string& name, const std::string& why) {
    std::cerr << "warning: " << name << " skipped: " << why << "\n";
    checks_.push_back({{"name", name}, {"status", "skipped"}, {"detail", why}});
  }
  void fail(const std::string& name, const std::string& why, bool io = false) {
    checks_.push_back({{"name", name}, {"status", "fail"}, {"detail", why}});
    ++failed_;
    io_failure_ = io_failure_ || io;
  }
  int failed() const { return failed_; }
  bool io_failure() const { return io_failure_; }
  Json json() const { return {{"failed", failed_}, {"checks", checks_}}; }

 private:
  Json checks_ = Json::array();
  int failed_ = 0;
  bool io_failure_ = false;
};

// Relative error on the nonzero closed-form entries; structural zeros are
// compared against the largest entry.
double max_rel_diff(const Eigen::MatrixXd& closed, const Eigen::MatrixXd& oracle) {
  const double big = closed.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < closed.rows(); ++i) {
    for (Eigen::Index j = 0; j < closed.cols(); ++j) {
      const double d = std::abs(closed(i, j) - oracle(i, j));
      worst = std::max(worst, closed(i, j) != 0.0 ? d / std::abs(closed(i, j)) : d / big);
    }
  }
  return worst;
}

}  // namespace

int cmd_verify(const ExperimentConfig& cfg, const fs::path& out, std::uint64_t seed) {
  Report rep;
  const BeamParameters bp = cfg.beam();
  const int n = cfg.n_design;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;

  const double m_err = max_rel_diff(assemble_M(n), oracle_M(n));
  rep.add("mass_matrix_oracle", m_err <= 1e-8, m_err, 1e-8);
  const double m00 = std::abs(assemble_M(n)(0, 0) - 35.0 * std::numbers::pi / 18.0);
  rep.add("mass_matrix_m00", m00 <= 1e-12, m00, 1e-12);
  const double f_err = max_rel_diff(assemble_F(n), oracle_F(n));
  rep.add("stiffness_matrix_oracle", f_err <= 1e-8, f_err, 1e-8);

  const SesquilinearForm a(bp, n, SesquilinearForm::Mode::kSymmetrized);
  const NormGrams& g = a.grams();
  const Eigen::MatrixXd M = assemble_M(n);
  auto draw = [&] {
    Eigen::VectorXd v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v[i] = nd(rng) / (1.0 + (i % n));
    return v;
  };
  const int draws = 1000;
  if (bp.d_KV == 0.0) {
    rep.skip("coercivity", "d_KV = 0 gives q2 = 0, the coercivity constants vanish");
  } else {
    const double q2 = bp.d_KV / bp.E;
    double worst = 0.0, slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < draws; ++k) {
      const Eigen::VectorXd phi = draw();
      const auto phi2 = phi.tail(n);
      const double re_a = a.value(phi, phi);
      const double v2 = phi.dot(g.G_V * phi), x2 = phi.dot(g.G_X * phi), w2 = phi2.dot(M * phi2);
      const double scale = std::max(1.0, std::abs(re_a));
      worst = std::max(worst, std::abs(re_a - (q2 * (v2 - x2) + (q2 + bp.d_v) * w2)) / scale);
      slack = std::min(slack, (re_a - (q2 * v2 - q2 * x2 + bp.d_v * w2)) / scale);
    }
    rep.add("coercivity_identity", worst <= 1e-8, worst, 1e-8);
    rep.add("coercivity_inequality", slack >= -1e-8, slack, -1e-8);
  }
  {
    const double q1 = 2 + bp.d_KV / bp.E + bp.d_v * g.beta_hat * g.beta_hat;
    double worst = 0.0;
    for (int k = 0; k < draws; ++k) {
      const Eigen::VectorXd phi = draw(), psi = draw();
      const double bound = q1 * std::sqrt(phi.dot(g.G_V * phi)) * std::sqrt(psi.dot(g.G_V * psi));
      worst = std::max(worst, std::abs(a.value(phi, psi)) / bound);
    }
    rep.add("boundedness", worst <= 1 + 1e-12, worst, 1.0);
  }

  {
    double worst = 0.0;
    for (int m = 1; m <= 12; ++m) {
      Eigen::MatrixXd A(m, m), W(m, m);
      for (auto& v : A.reshaped()) v = nd(rng);
      for (auto& v : W.reshaped()) v = nd(rng);
      W = (W * W.transpose()).eval();
      A -= (1.0 - stability_margin(A)) * Eigen::MatrixXd::Identity(m, m);
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
      Eigen::MatrixXd K(m * m, m * m);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          K.block(i * m, j * m, m, m) = A(i, j) * I + (i == j ? A : Eigen::MatrixXd::Zero(m, m));
        }
      }
      const Eigen::VectorXd x = K.lu().solve(-W.reshaped());
      const Eigen::MatrixXd X = solve_lyapunov(A, W);
      worst = std::max(worst, (X.reshaped() - x).norm() / x.norm());
    }
    rep.add("lyapunov_kronecker_oracle", worst <= 1e-8, worst, 1e-8);
  }

  const GalerkinModel design = assemble_first_order(bp, n);
  const double open = stability_margin(design.A);
  rep.add("open_loop_hurwitz", open > kHurwitzThreshold, open, kHurwitzThreshold);
  try {
    const InternalModel im = build_internal_model(cfg.frequencies());
    const SynthesisReport s = synthesize_regulator(design, im, cfg.synthesis);
    rep.add("observer_care_residual", s.observer.care_residual <= 1e-8, s.observer.care_residual, 1e-8);
    rep.add("state_feedback_care_residual", s.feedback.care_residual <= 1e-8,
            s.feedback.care_residual, 1e-8);
    rep.add("gramian_lyapunov_residual", s.gramian_residual <= 1e-8, s.gramian_residual, 1e-8);
    const GalerkinModel sim = assemble_first_order(bp, cfg.n_sim);
    const double cl = stability_margin(assemble_closed_loop(sim, s.controller).Acl);
    rep.add("closed_loop_hurwitz", cl > kHurwitzThreshold, cl, kHurwitzThreshold);
  } catch (const NumericalError& e) {
    rep.fail("synthesis", e.what());
  }

  const fs::path cdir = out / "controller";
  if (!fs::exists(cdir)) {
    rep.skip("controller_files", "no controller directory under " + out.string());
  } else {
    try {
      load_controller(cdir, cfg);
      rep.add("controller_files", true, 0.0, 0.0);
    } catch (const IoError& e) {
      rep.fail("controller_files", e.what(), true);
    } catch (const ValidationError& e) {
      rep.fail("controller_files", e.what());
    }
  }

  make_dir(out);
  write_json(out / "verify.json", rep.json());
  std::cout << (rep.failed() == 0 ? "all checks passed" : std::to_string(rep.failed()) + " check(s) failed")
            << "\n";
  if (rep.failed() == 0) return kExitOk;
  return rep.io_failure() ? kExitIo : kExitNumerical;
}

int cmd_matrices(const ExperimentConfig& cfg, const fs::path& out) {
  const BeamParameters bp = cfg.beam();
  for (int n : {cfg.n_design, cfg.n_sim}) {
    const GalerkinModel g = assemble_first_order(bp, n);
    const fs::path dir = out / "matrices" / ("n" + std::to_string(n));
    make_dir(dir);
    const std::vector<std::pair<std::string, const Eigen::MatrixXd*>> parts = {
        {"M", &g.M}, {"F", &g.F}, {"B0", &g.B0}, {"Bd0", &g.Bd0}, {"C0", &g.C0},
        {"A", &g.A}, {"B", &g.B}, {"Bd", &g.Bd}, {"C", &g.C}};
    for (const auto& [name, m] : parts) save_dense(dir / (name + ".txt"), *m);
  }
  std::cout << "wrote " << (out / "matrices").string() << "\n";
  return kExitOk;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Robust output regulation of a Kelvin-Voigt damped beam"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "experiment configuration file");
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_option("--seed", seed, "seed for randomized property checks");
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"design", "synthesize the reduced-order controller"},
      {"simulate", "simulate the closed loop with a saved controller"},
      {"compare", "reduced-order vs low-gain controller"},
      {"verify", "oracle and property checks"},
      {"matrices", "dump the Galerkin matrices"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate(cmd == "verify" || cmd == "matrices");
    const fs::path out = cfg.out_dir;
    if (cmd == "design") return cmd_design(cfg, out);
    if (cmd == "simulate") return cmd_simulate(cfg, out);
    if (cmd == "compare") return cmd_compare(cfg, out);
    if (cmd == "verify") return cmd_verify(cfg, out, seed);
    return cmd_matrices(cfg, out);
  } catch (const IoError& e) {
    std::cerr << cmd << ": I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << cmd << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << cmd << ": invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << cmd << ": invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << cmd << ": error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace kvbeam::cli
