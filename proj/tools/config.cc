#include "config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "kvbeam/errors.h"

namespace kvbeam::cli {

namespace {

using std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

double parse_real(const std::string& tok) {
  std::string t = tok;
  double factor = 1.0;
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    factor = pi;
    t.resize(t.size() - 2);
    if (!t.empty() && t.back() == '*') t.pop_back();
    if (t.empty() || t == "+") return pi;
    if (t == "-") return -pi;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size() || !std::isfinite(v)) {
    throw ValidationError("not a real number: '" + tok + "'");
  }
  return v * factor;
}

int parse_int(const std::string& tok) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tok.size()) throw ValidationError("not an integer: '" + tok + "'");
  return static_cast<int>(v);
}

Eigen::VectorXd parse_vector(const std::string& s) {
  const auto w = words(s);
  Eigen::VectorXd v(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_real(w[i]);
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  const Eigen::VectorXd v = parse_vector(s);
  return {v.data(), v.data() + v.size()};
}

std::vector<Eigen::VectorXd> parse_vector_list(const std::string& s) {
  std::vector<Eigen::VectorXd> out;
  if (trim(s).empty()) return out;
  for (const auto& part : split(s, ';')) out.push_back(parse_vector(part));
  return out;
}

BumpSpec parse_bump(const std::string& s) {
  const auto w = words(s);
  if (w.size() != 4 || w[0] != "bump") {
    throw ValidationError("profile must read 'bump <scale> <left power> <right power>'");
  }
  return {parse_real(w[1]), parse_int(w[2]), parse_int(w[3])};
}

Eigen::Matrix2d parse_2x2(const std::string& s) {
  const Eigen::VectorXd v = parse_vector(s);
  if (v.size() != 4) throw ValidationError("2x2 matrix needs 4 entries (row-major)");
  Eigen::Matrix2d m;
  m << v[0], v[1], v[2], v[3];
  return m;
}

bool parse_integrator(const std::string& s, Integrator& out) {
  if (s == "trapezoidal") { out = Integrator::kTrapezoidal; return true; }
  if (s == "exact") { out = Integrator::kExactHold; return true; }
  return false;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

std::string fmt(const std::vector<double>& v) {
  return fmt(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval());
}

std::string fmt(const std::vector<Eigen::VectorXd>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " ; " : "") + fmt(v[i]);
  return s;
}

std::string fmt(const BumpSpec& b) {
  return "bump " + fmt(b.scale) + " " + std::to_string(b.left) + " " + std::to_string(b.right);
}

std::string fmt(const Eigen::Matrix2d& m) {
  return fmt(m(0, 0)) + " " + fmt(m(0, 1)) + " " + fmt(m(1, 0)) + " " + fmt(m(1, 1));
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const std::string& key, double ExperimentConfig::*field) {
      t[key] = [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_real(v); };
    };
    auto integer = [&t](const std::string& key, int ExperimentConfig::*field) {
      t[key] = [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_int(v); };
    };
    real("beam.E", &ExperimentConfig::E);
    real("beam.I", &ExperimentConfig::I_mom);
    real("beam.d_KV", &ExperimentConfig::d_KV);
    real("beam.d_v", &ExperimentConfig::d_v);
    real("beam.xi1", &ExperimentConfig::xi1);
    real("beam.xi2", &ExperimentConfig::xi2);
    t["beam.b1"] = [](ExperimentConfig& c, const std::string& v) { c.b1 = parse_bump(v); };
    t["beam.b2"] = [](ExperimentConfig& c, const std::string& v) { c.b2 = parse_bump(v); };
    t["beam.b_d"] = [](ExperimentConfig& c, const std::string& v) {
      c.b_d.clear();
      if (trim(v) == "none") return;
      for (const auto& part : split(v, ',')) c.b_d.push_back(parse_bump(part));
    };
    integer("galerkin.n_design", &ExperimentConfig::n_design);
    integer("galerkin.n_sim", &ExperimentConfig::n_sim);
    real("internal_model.base_frequency", &ExperimentConfig::base_frequency);
    integer("internal_model.q", &ExperimentConfig::q);
    t["synthesis.alpha1"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.alpha1 = parse_real(v); };
    t["synthesis.alpha2"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.alpha2 = parse_real(v); };
    t["synthesis.R1"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.R1 = parse_2x2(v); };
    t["synthesis.R2"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.R2 = parse_2x2(v); };
    t["synthesis.q0"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.q0 = parse_real(v); };
    t["synthesis.q1"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.q1 = parse_real(v); };
    t["synthesis.q2"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.q2 = parse_real(v); };
    t["synthesis.r"] = [](ExperimentConfig& c, const std::string& v) { c.synthesis.r = parse_int(v); };
    t["synthesis.zero_threshold"] = [](ExperimentConfig& c, const std::string& v) {
      c.synthesis.zero_threshold = parse_real(v);
    };
    t["signals.reference"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "triangle") c.reference = ReferenceKind::kTriangle;
      else if (v == "trig") c.reference = ReferenceKind::kTrig;
      else throw ValidationError("reference must be 'triangle' or 'trig'");
    };
    real("signals.triangle_amplitude", &ExperimentConfig::triangle_amplitude);
    t["signals.ref_a0"] = [](ExperimentConfig& c, const std::string& v) { c.ref.a0 = parse_vector(v); };
    t["signals.ref_freqs"] = [](ExperimentConfig& c, const std::string& v) { c.ref.freqs = parse_list(v); };
    t["signals.ref_cos"] = [](ExperimentConfig& c, const std::string& v) { c.ref.cos = parse_vector_list(v); };
    t["signals.ref_sin"] = [](ExperimentConfig& c, const std::string& v) { c.ref.sin = parse_vector_list(v); };
    t["signals.dist_a0"] = [](ExperimentConfig& c, const std::string& v) { c.dist.a0 = parse_vector(v); };
    t["signals.dist_freqs"] = [](ExperimentConfig& c, const std::string& v) { c.dist.freqs = parse_list(v); };
    t["signals.dist_cos"] = [](ExperimentConfig& c, const std::string& v) { c.dist.cos = parse_vector_list(v); };
    t["signals.dist_sin"] = [](ExperimentConfig& c, const std::string& v) { c.dist.sin = parse_vector_list(v); };
    real("simulation.T", &ExperimentConfig::horizon);
    real("simulation.h", &ExperimentConfig::step);
    integer("simulation.record_every", &ExperimentConfig::record_every);
    t["simulation.integrator"] = [](ExperimentConfig& c, const std::string& v) {
      if (!parse_integrator(v, c.integrator)) {
        throw ValidationError("integrator must be 'trapezoidal' or 'exact'");
      }
    };
    real("simulation.regulation_tolerance", &ExperimentConfig::regulation_tolerance);
    real("simulation.deflection_dt", &ExperimentConfig::deflection_dt);
    integer("simulation.deflection_points", &ExperimentConfig::deflection_points);
    integer("low_gain.q", &ExperimentConfig::lg_q);
    t["low_gain.eps"] = [](ExperimentConfig& c, const std::string& v) {
      c.lg_eps = (v == "auto") ? 0.0 : parse_real(v);
    };
    real("low_gain.eps_max", &ExperimentConfig::lg_eps_max);
    integer("low_gain.grid", &ExperimentConfig::lg_grid);
    real("compare.T", &ExperimentConfig::cmp_horizon);
    real("compare.h", &ExperimentConfig::cmp_step);
    integer("compare.record_every", &ExperimentConfig::cmp_record_every);
    t["compare.integrator"] = [](ExperimentConfig& c, const std::string& v) {
      if (!parse_integrator(v, c.cmp_integrator)) {
        throw ValidationError("integrator must be 'trapezoidal' or 'exact'");
      }
    };
    t["output.dir"] = [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; };
    return t;
  }();
  return table;
}

void validate_trig(const TrigSpec& s, int components, const std::string& name) {
  if (s.a0.size() != components) {
    throw ValidationError(name + ": constant term needs " + std::to_string(components) +
                          " components");
  }
  if (s.cos.size() != s.freqs.size() || s.sin.size() != s.freqs.size()) {
    throw ValidationError(name + ": need one cos and one sin vector per frequency");
  }
  s.to_signal().validate();
  for (double w : s.freqs) {
    if (!(w > 0)) throw ValidationError(name + ": frequencies must be positive");
  }
}

}  // namespace

TrigSignal TrigSpec::to_signal() const {
  TrigSignal s;
  s.a0 = a0;
  s.freqs = freqs;
  s.a = cos;
  s.b = sin;
  return s;
}

ExperimentConfig::ExperimentConfig() : base_frequency(pi) {
  ref.a0 = Eigen::VectorXd::Zero(2);
  dist.a0 = Eigen::VectorXd::Zero(1);
  dist.freqs = {pi, 3 * pi};
  dist.cos = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.4)};
  dist.sin = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1)};
}

BeamParameters ExperimentConfig::beam() const {
  BeamParameters p;
  p.E = E;
  p.I_mom = I_mom;
  p.d_KV = d_KV;
  p.d_v = d_v;
  p.xi1 = xi1;
  p.xi2 = xi2;
  auto prof = [](const BumpSpec& b) { return BumpProfile{b.scale, b.left, b.right}; };
  p.b1 = prof(b1);
  p.b2 = prof(b2);
  for (const auto& b : b_d) p.b_d.push_back(prof(b));
  return p;
}

std::vector<double> ExperimentConfig::frequencies() const {
  return harmonic_frequencies(base_frequency, q);
}

std::vector<double> ExperimentConfig::low_gain_frequencies() const {
  return harmonic_frequencies(base_frequency, lg_q);
}

double ExperimentConfig::period() const { return 2.0 * pi / base_frequency; }

ExogenousInput ExperimentConfig::exogenous() const {
  ExogenousInput in;
  const TrigSignal d = dist.to_signal();
  in.w_dist = [d](double t) { return eval_trig(d, t); };
  if (reference == ReferenceKind::kTriangle) {
    const TriangleWave w{triangle_amplitude, period()};
    in.y_ref = [w](double t) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(2);
      r[0] = eval_triangle(w, t);
      return r;
    };
  } else {
    const TrigSignal r = ref.to_signal();
    in.y_ref = [r](double t) { return eval_trig(r, t); };
  }
  return in;
}

double ExperimentConfig::reference_amplitude() const {
  if (reference == ReferenceKind::kTriangle) return std::abs(triangle_amplitude);
  const ExogenousInput in = exogenous();
  double amp = 0.0;
  const int grid = 4000;
  for (int i = 0; i < grid; ++i) amp = std::max(amp, in.y_ref(period() * i / grid).norm());
  return amp;
}

void ExperimentConfig::validate(bool allow_zero_kv) const {
  beam().validate(allow_zero_kv);
  if (n_design < 5 || n_sim < 5) throw ValidationError("galerkin: n_design and n_sim must be >= 5");
  if (n_design > 120 || n_sim > 120) {
    throw ValidationError("galerkin: basis sizes above 120 are not supported");
  }
  if (!(base_frequency > 0)) throw ValidationError("internal_model: base_frequency must be positive");
  if (q < 0 || lg_q < 0) throw ValidationError("internal_model: q must be nonnegative");
  synthesis.validate(2 * n_design);
  validate_trig(ref, 2, "signals.ref");
  validate_trig(dist, static_cast<int>(b_d.size()), "signals.dist");
  if (!(triangle_amplitude >= 0)) throw ValidationError("signals: triangle_amplitude must be >= 0");
  if (!(step > 0) || !(horizon >= step) || record_every < 1) {
    throw ValidationError("simulation: need h > 0, T >= h and record_every >= 1");
  }
  if (!(cmp_step > 0) || !(cmp_horizon >= cmp_step) || cmp_record_every < 1) {
    throw ValidationError("compare: need h > 0, T >= h and record_every >= 1");
  }
  if (!(cmp_horizon >= period())) throw ValidationError("compare: T must cover one period");
  if (!(regulation_tolerance > 0)) throw ValidationError("simulation: regulation_tolerance must be positive");
  if (!(deflection_dt > 0) || deflection_points < 2) {
    throw ValidationError("simulation: deflection_dt > 0 and deflection_points >= 2 required");
  }
  if (!(lg_eps >= 0) || !(lg_eps_max > 0) || lg_grid < 3) {
    throw ValidationError("low_gain: eps >= 0 (0 = auto), eps_max > 0, grid >= 3");
  }
  if (out_dir.empty()) throw ValidationError("output: dir must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + "expected 'key = value'");
    if (section.empty()) throw ValidationError(where + "key outside of any [section]");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ValidationError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ValidationError(where + "duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + key + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[beam]\n"
     << "E = " << fmt(c.E) << "\nI = " << fmt(c.I_mom) << "\nd_KV = " << fmt(c.d_KV)
     << "\nd_v = " << fmt(c.d_v) << "\nxi1 = " << fmt(c.xi1) << "\nxi2 = " << fmt(c.xi2)
     << "\nb1 = " << fmt(c.b1) << "\nb2 = " << fmt(c.b2) << "\nb_d = ";
  if (c.b_d.empty()) os << "none";
  for (std::size_t i = 0; i < c.b_d.size(); ++i) os << (i ? ", " : "") << fmt(c.b_d[i]);
  os << "\n\n[galerkin]\nn_design = " << c.n_design << "\nn_sim = " << c.n_sim
     << "\n\n[internal_model]\nbase_frequency = " << fmt(c.base_frequency) << "\nq = " << c.q
     << "\n\n[synthesis]\nalpha1 = " << fmt(c.synthesis.alpha1)
     << "\nalpha2 = " << fmt(c.synthesis.alpha2) << "\nR1 = " << fmt(c.synthesis.R1)
     << "\nR2 = " << fmt(c.synthesis.R2) << "\nq0 = " << fmt(c.synthesis.q0)
     << "\nq1 = " << fmt(c.synthesis.q1) << "\nq2 = " << fmt(c.synthesis.q2)
     << "\nr = " << c.synthesis.r << "\nzero_threshold = " << fmt(c.synthesis.zero_threshold)
     << "\n\n[signals]\nreference = "
     << (c.reference == ReferenceKind::kTriangle ? "triangle" : "trig")
     << "\ntriangle_amplitude = " << fmt(c.triangle_amplitude)
     << "\nref_a0 = " << fmt(c.ref.a0) << "\nref_freqs = " << fmt(c.ref.freqs)
     << "\nref_cos = " << fmt(c.ref.cos) << "\nref_sin = " << fmt(c.ref.sin)
     << "\ndist_a0 = " << fmt(c.dist.a0) << "\ndist_freqs = " << fmt(c.dist.freqs)
     << "\ndist_cos = " << fmt(c.dist.cos) << "\ndist_sin = " << fmt(c.dist.sin)
     << "\n\n[simulation]\nT = " << fmt(c.horizon) << "\nh = " << fmt(c.step)
     << "\nrecord_every = " << c.record_every << "\nintegrator = "
     << (c.integrator == Integrator::kTrapezoidal ? "trapezoidal" : "exact")
     << "\nregulation_tolerance = " << fmt(c.regulation_tolerance)
     << "\ndeflection_dt = " << fmt(c.deflection_dt)
     << "\ndeflection_points = " << c.deflection_points
     << "\n\n[low_gain]\nq = " << c.lg_q << "\neps = "
     << (c.lg_eps > 0 ? fmt(c.lg_eps) : std::string("auto"))
     << "\neps_max = " << fmt(c.lg_eps_max) << "\ngrid = " << c.lg_grid
     << "\n\n[compare]\nT = " << fmt(c.cmp_horizon) << "\nh = " << fmt(c.cmp_step)
     << "\nrecord_every = " << c.cmp_record_every << "\nintegrator = "
     << (c.cmp_integrator == Integrator::kTrapezoidal ? "trapezoidal" : "exact")
     << "\n\n[output]\ndir = " << c.out_dir << "\n";
  return os.str();
}

}  // namespace kvbeam::cli
