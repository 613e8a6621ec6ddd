#pragma once

// Command-line front end: JSON run configs, subcommands and CSV writers.
// Everything writes to caller-supplied streams so the commands can be
// driven in-process.

#include "mpde/mpde.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mpde::cli {

enum ExitCode : int { ok = 0, config_error = 2, numerical_failure = 3 };

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &w) : std::runtime_error(w) {}
};

struct RawMatrices {
  DenseMatrix A, B;
  DenseVector c_on, c_off;
  double fs = 500.0;
  double duty = 0.7;
  int output_index = 0;
};

struct RunConfig {
  std::optional<BuckParameters> buck;
  std::optional<RawMatrices> matrices;
  std::optional<DenseVector> x0;
  double t_end = 10e-3;
  Method method = Method::mpde_pwm;
  int np = 8;
  double reltol = 1e-6;
  double abstol = 1e-10;
  int samples_per_period = 500;

  [[nodiscard]] CircuitModel circuit() const {
    CircuitModel c;
    if (matrices) {
      c.A = matrices->A;
      c.B = matrices->B;
      c.c_on = matrices->c_on;
      c.c_off = matrices->c_off;
      c.fs = matrices->fs;
      c.duty = matrices->duty;
      c.output_index = matrices->output_index;
      c.x0 = DenseVector::Zero(c.A.rows());
    } else {
      c = buck_converter(buck.value_or(BuckParameters{}));
    }
    if (x0)
      c.x0 = *x0;
    return c;
  }

  [[nodiscard]] std::vector<std::string> state_names() const {
    if (!matrices)
      return {"i_L", "v_C"};
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < matrices->A.rows(); ++j)
      names.push_back("x_" + std::to_string(j + 1));
    return names;
  }

  [[nodiscard]] RunSettings settings() const {
    RunSettings s;
    s.t_end = t_end;
    s.samples_per_period = samples_per_period;
    s.reltol = reltol;
    s.abstol = abstol;
    return s;
  }
};

namespace detail {

using nlohmann::json;

inline std::pair<std::size_t, std::size_t> line_col(const std::string &text,
                                                    std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Field diagnostics: path plus the line of the key's first occurrence.
class FieldReader {
public:
  explicit FieldReader(const std::string &text) : text_(text) {}

  [[noreturn]] void fail(const std::string &path, const std::string &what) const {
    const auto key = path.substr(path.find_last_of('.') + 1);
    const auto pos = text_.find('"' + key + '"');
    std::string where;
    if (pos != std::string::npos)
      where = " (line " + std::to_string(line_col(text_, pos).first) + ")";
    throw ConfigError("config field '" + path + "'" + where + ": " + what);
  }

  double number(const json &j, const std::string &path) const {
    if (!j.is_number())
      fail(path, "expected a number");
    return j.get<double>();
  }
  double positive(const json &j, const std::string &path) const {
    const double v = number(j, path);
    if (!(v > 0.0))
      fail(path, "must be > 0");
    return v;
  }
  int integer(const json &j, const std::string &path) const {
    if (!j.is_number_integer())
      fail(path, "expected an integer");
    return j.get<int>();
  }
  std::string string(const json &j, const std::string &path) const {
    if (!j.is_string())
      fail(path, "expected a string");
    return j.get<std::string>();
  }
  DenseVector vector(const json &j, const std::string &path) const {
    if (!j.is_array() || j.empty())
      fail(path, "expected a non-empty array of numbers");
    DenseVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
      v(static_cast<Eigen::Index>(i)) =
          number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
  }
  DenseMatrix matrix(const json &j, const std::string &path) const {
    if (!j.is_array() || j.empty())
      fail(path, "expected a non-empty array of rows");
    const auto rows = j.size();
    DenseMatrix m;
    for (std::size_t r = 0; r < rows; ++r) {
      const DenseVector row = vector(j[r], path + "[" + std::to_string(r) + "]");
      if (r == 0)
        m.resize(static_cast<Eigen::Index>(rows), row.size());
      else if (row.size() != m.cols())
        fail(path, "rows have different lengths");
      m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    if (m.rows() != m.cols())
      fail(path, "must be square");
    return m;
  }
  void only_keys(const json &obj, const std::string &path,
                 const std::vector<std::string> &allowed) const {
    if (!obj.is_object())
      fail(path.empty() ? "<root>" : path, "expected an object");
    for (const auto &item : obj.items())
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
        fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
  }

private:
  const std::string &text_;
};

} // namespace detail

/// Parses a JSON run config.  Throws ConfigError with line or field
/// diagnostics.
inline RunConfig parse_config(const std::string &text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    const auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + e.what());
  }
  const detail::FieldReader rd(text);
  rd.only_keys(root, "",
               {"buck", "matrices", "x0", "t_end", "method", "Np", "reltol",
                "abstol", "samples_per_period"});
  if (root.contains("buck") && root.contains("matrices"))
    rd.fail("matrices", "give either 'buck' or 'matrices', not both");

  RunConfig cfg;
  if (root.contains("buck")) {
    const auto &b = root["buck"];
    rd.only_keys(b, "buck", {"Vi", "fs", "D", "L", "RL", "C", "R"});
    BuckParameters p;
    if (b.contains("Vi")) p.Vi = rd.number(b["Vi"], "buck.Vi");
    if (b.contains("fs")) p.fs = rd.positive(b["fs"], "buck.fs");
    if (b.contains("D")) p.duty = rd.number(b["D"], "buck.D");
    if (b.contains("L")) p.L = rd.positive(b["L"], "buck.L");
    if (b.contains("RL")) p.RL = rd.number(b["RL"], "buck.RL");
    if (b.contains("C")) p.C = rd.positive(b["C"], "buck.C");
    if (b.contains("R")) p.R = rd.positive(b["R"], "buck.R");
    if (!(p.duty > 0.0 && p.duty < 1.0))
      rd.fail("buck.D", "must lie in (0, 1)");
    cfg.buck = p;
  }
  if (root.contains("matrices")) {
    const auto &m = root["matrices"];
    rd.only_keys(m, "matrices", {"A", "B", "c_on", "c_off", "fs", "D", "output_index"});
    for (const char *key : {"A", "B", "c_on", "c_off", "fs", "D"})
      if (!m.contains(key))
        rd.fail(std::string("matrices.") + key, "missing");
    RawMatrices raw;
    raw.A = rd.matrix(m["A"], "matrices.A");
    raw.B = rd.matrix(m["B"], "matrices.B");
    raw.c_on = rd.vector(m["c_on"], "matrices.c_on");
    raw.c_off = rd.vector(m["c_off"], "matrices.c_off");
    raw.fs = rd.positive(m["fs"], "matrices.fs");
    raw.duty = rd.number(m["D"], "matrices.D");
    if (!(raw.duty > 0.0 && raw.duty < 1.0))
      rd.fail("matrices.D", "must lie in (0, 1)");
    const auto n = raw.A.rows();
    if (raw.B.rows() != n)
      rd.fail("matrices.B", "size differs from A (" + std::to_string(n) + ")");
    if (raw.c_on.size() != n)
      rd.fail("matrices.c_on", "length differs from A (" + std::to_string(n) + ")");
    if (raw.c_off.size() != n)
      rd.fail("matrices.c_off", "length differs from A (" + std::to_string(n) + ")");
    if (m.contains("output_index")) {
      raw.output_index = rd.integer(m["output_index"], "matrices.output_index");
      if (raw.output_index < 0 || raw.output_index >= n)
        rd.fail("matrices.output_index", "out of range");
    }
    cfg.matrices = raw;
  }
  if (root.contains("x0")) {
    cfg.x0 = rd.vector(root["x0"], "x0");
    const auto n = cfg.matrices ? cfg.matrices->A.rows() : 2;
    if (cfg.x0->size() != n)
      rd.fail("x0", "length must equal the number of states (" +
                        std::to_string(n) + ")");
  }
  if (root.contains("t_end")) {
    cfg.t_end = rd.number(root["t_end"], "t_end");
    if (!(cfg.t_end >= 0.0))
      rd.fail("t_end", "must be >= 0");
  }
  if (root.contains("method")) {
    try {
      cfg.method = parse_method(rd.string(root["method"], "method"));
    } catch (const std::invalid_argument &e) {
      rd.fail("method", e.what());
    }
  }
  if (root.contains("Np")) {
    cfg.np = rd.integer(root["Np"], "Np");
    if (cfg.np < 1)
      rd.fail("Np", "must be >= 1");
  }
  if (root.contains("reltol")) cfg.reltol = rd.positive(root["reltol"], "reltol");
  if (root.contains("abstol")) cfg.abstol = rd.positive(root["abstol"], "abstol");
  if (root.contains("samples_per_period")) {
    cfg.samples_per_period = rd.integer(root["samples_per_period"], "samples_per_period");
    if (cfg.samples_per_period < 1)
      rd.fail("samples_per_period", "must be >= 1");
  }
  return cfg;
}

inline RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// %.17g formatting (round-trips doubles).
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<int> parse_int_list(const std::string &s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception &) {
      throw ConfigError("invalid integer list entry '" + item + "'");
    }
    if (used != item.size())
      throw ConfigError("invalid integer list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError("empty integer list");
  return out;
}

inline std::vector<double> parse_double_list(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception &) {
      throw ConfigError("invalid number list entry '" + item + "'");
    }
    if (used != item.size())
      throw ConfigError("invalid number list entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw ConfigError("empty number list");
  return out;
}

inline BasisFamily parse_family(const std::string &s) {
  if (s == "pwm" || s == "mpde-pwm")
    return BasisFamily::pwm;
  if (s == "fe" || s == "mpde-fe")
    return BasisFamily::fe_nodal;
  throw ConfigError("unknown basis family '" + s + "' (expected pwm or fe)");
}

inline void write_stats(std::ostream &out, const std::map<std::string, std::string> &kv) {
  for (const auto &[k, v] : kv)
    out << "# " << k << '=' << v << '\n';
}

// ---------------------------------------------------------------- commands

struct SimulateOptions {
  std::string surface_out;
  int surface_t1 = 101;
  int surface_t2 = 101;
  std::string coeff_out;
  /// Receives warnings (continuous-conduction violation); may be null.
  std::ostream *warnings = nullptr;
};

inline void cmd_simulate(const RunConfig &cfg, const SimulateOptions &opt,
                         std::ostream &out) {
  const CircuitModel circuit = cfg.circuit();
  circuit.validate();
  const auto names = cfg.state_names();
  out << 't';
  for (const auto &n : names)
    out << ',' << n;
  out << '\n';

  std::map<std::string, std::string> stats{
      {"method", to_string(cfg.method)},
      {"n_steps", "0"},
      {"n_rejected", "0"},
      {"n_rhs_evaluations", "0"},
      {"wall_time", fmt(0.0)}};
  if (cfg.method == Method::mpde_pwm || cfg.method == Method::mpde_fe)
    stats["Np"] = std::to_string(cfg.np);

  if (cfg.t_end == 0.0) {
    // Still validates the basis so a bad Np is reported.
    if (cfg.method == Method::mpde_pwm || cfg.method == Method::mpde_fe)
      (void)build_basis(cfg.method == Method::mpde_pwm ? BasisFamily::pwm
                                                       : BasisFamily::fe_nodal,
                        cfg.np, circuit.duty);
    write_stats(out, stats);
    return;
  }

  const RunResult run = run_method(circuit, cfg.method, cfg.np, cfg.settings());
  for (std::size_t i = 0; i < run.series.size(); ++i) {
    out << fmt(run.series.t[i]);
    for (Eigen::Index j = 0; j < run.series.x[i].size(); ++j)
      out << ',' << fmt(run.series.x[i](j));
    out << '\n';
  }
  stats["n_steps"] = std::to_string(run.stats.n_steps);
  stats["n_rejected"] = std::to_string(run.stats.n_rejected);
  stats["n_rhs_evaluations"] = std::to_string(run.stats.n_rhs_evaluations);
  stats["wall_time"] = fmt(run.solve_time);
  stats["wall_time_reconstruct"] = fmt(run.reconstruct_time);
  if (run.conduction_violated) {
    stats["conduction_violated"] = "1";
    if (opt.warnings)
      *opt.warnings << "warning: inductor current crosses zero; the continuous-"
                       "conduction model is invalid for these parameters\n";
  }
  write_stats(out, stats);

  if (!run.multirate)
    return;
  const MultirateSolution &sol = *run.multirate;
  if (!opt.surface_out.empty()) {
    std::ofstream s(opt.surface_out);
    if (!s)
      throw ConfigError("cannot write '" + opt.surface_out + "'");
    s << "t1,t2";
    for (const auto &n : names)
      s << ',' << n;
    s << '\n';
    const double ts = circuit.period();
    const int n1 = std::max(2, opt.surface_t1), n2 = std::max(2, opt.surface_t2);
    for (int a = 0; a < n1; ++a) {
      const double t1 = cfg.t_end * a / (n1 - 1);
      const DenseVector w = sol.coefficients()(t1);
      for (int b = 0; b < n2; ++b) {
        const double tau = static_cast<double>(b) / (n2 - 1);
        const DenseVector x = sol.combine(w, eval(sol.basis(), tau));
        s << fmt(t1) << ',' << fmt(tau * ts);
        for (Eigen::Index j = 0; j < x.size(); ++j)
          s << ',' << fmt(x(j));
        s << '\n';
      }
    }
  }
  if (!opt.coeff_out.empty()) {
    std::ofstream c(opt.coeff_out);
    if (!c)
      throw ConfigError("cannot write '" + opt.coeff_out + "'");
    const auto nb = static_cast<int>(sol.basis().size());
    c << "t1";
    for (const auto &n : names)
      for (int k = 0; k < nb; ++k)
        c << ",w_" << n << '_' << sol.basis().retained[static_cast<std::size_t>(k)];
    c << '\n';
    const auto &traj = sol.coefficients();
    for (std::size_t i = 0; i < traj.times().size(); ++i) {
      c << fmt(traj.times()[i]);
      const DenseVector &w = traj.state(i);
      for (Eigen::Index k = 0; k < w.size(); ++k)
        c << ',' << fmt(w(k));
      c << '\n';
    }
  }
}

inline std::vector<int> default_np_list(BasisFamily f) {
  if (f == BasisFamily::pwm)
    return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  return {11, 21, 41, 81, 131};
}

inline void cmd_convergence(const RunConfig &cfg, BasisFamily family,
                            const std::vector<int> &np_list, int parallel,
                            std::ostream &out) {
  const CircuitModel circuit = cfg.circuit();
  const auto reports =
      convergence_study(circuit, family, np_list, cfg.settings(), parallel);
  out << "family,Np,reltol,epsilon,n_rhs,wall_time\n";
  for (const auto &r : reports)
    out << to_string(family) << ',' << r.np << ',' << fmt(r.reltol) << ','
        << fmt(r.epsilon) << ',' << r.n_rhs_evaluations << ','
        << fmt(r.wall_time_solve) << '\n';
}

struct EfficiencyOptions {
  std::vector<double> baseline_reltols{1e-2, 1e-3, 1e-4, 1e-5, 1e-6,
                                       1e-7, 1e-8, 1e-9, 1e-10};
  std::vector<int> pwm_np{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<int> fe_np{11, 21, 41, 81, 131};
  int repeats = 3;
  int parallel = 1;
};

inline void cmd_efficiency(const RunConfig &cfg, const EfficiencyOptions &opt,
                           std::ostream &out) {
  const CircuitModel circuit = cfg.circuit();
  for (int np : opt.fe_np)
    (void)build_fe_nodal(np, circuit.duty);
  for (int np : opt.pwm_np)
    (void)build_pwm(np, circuit.duty);
  RunSettings s = cfg.settings();
  s.timing_repeats = opt.repeats;
  const auto cases =
      efficiency_protocol(opt.baseline_reltols, opt.pwm_np, opt.fe_np, cfg.reltol);
  const auto reports = efficiency_study(circuit, cases, s, opt.parallel);
  out << "method,Np,reltol,epsilon,n_rhs,n_steps,n_rejected,wall_time,"
         "wall_time_reconstruct,time_per_evaluation\n";
  for (const auto &r : reports)
    out << to_string(r.method) << ',' << r.np << ',' << fmt(r.reltol) << ','
        << fmt(r.epsilon) << ',' << r.n_rhs_evaluations << ',' << r.n_steps << ','
        << r.n_rejected << ',' << fmt(r.wall_time_solve) << ','
        << fmt(r.wall_time_reconstruct) << ',' << fmt(r.time_per_evaluation())
        << '\n';
}

inline void cmd_project(const std::vector<int> &np_list, int profile_np,
                        const std::string &profile_out, std::ostream &out) {
  out << "Np,residual\n";
  for (int np : np_list) {
    const Projection p = l2_project(ThreeLevelSignal{}, build_pwm(np, 0.5));
    out << np << ',' << fmt(p.residual) << '\n';
  }
  if (profile_out.empty())
    return;
  std::ofstream s(profile_out);
  if (!s)
    throw ConfigError("cannot write '" + profile_out + "'");
  const Projection p = l2_project(ThreeLevelSignal{}, build_pwm(profile_np, 0.5));
  const ThreeLevelSignal g;
  s << "tau,g,g_h\n";
  constexpr int samples = 1001;
  for (int i = 0; i < samples; ++i) {
    const double tau = static_cast<double>(i) / (samples - 1);
    s << fmt(tau) << ',' << fmt(g(tau)) << ',' << fmt(p.approximation(tau)) << '\n';
  }
}

inline void cmd_basis(BasisFamily family, int np, double duty, std::ostream &out) {
  const BasisSet b = build_basis(family, np, duty);
  out << "tau";
  for (std::size_t k = 0; k < b.functions.size(); ++k)
    out << ",p" << k;
  out << '\n';
  constexpr int samples = 1001;
  for (int i = 0; i < samples; ++i) {
    const double tau = static_cast<double>(i) / (samples - 1);
    out << fmt(tau);
    for (const auto &f : b.functions)
      out << ',' << fmt(f(tau));
    out << '\n';
  }
}

// ---------------------------------------------------------------- driver

namespace detail {
inline std::ostream &open_output(const std::string &path, std::ofstream &file,
                                 std::ostream &fallback) {
  if (path.empty() || path == "-")
    return fallback;
  file.open(path);
  if (!file)
    throw ConfigError("cannot write '" + path + "'");
  return file;
}
} // namespace detail

/// Runs the tool with argv-style arguments (args[0] is the program name).
inline int run(const std::vector<std::string> &args, std::ostream &out,
               std::ostream &err) {
  CLI::App app{"Multirate PDE simulation of PWM-driven linear circuits"};
  app.require_subcommand(1);

  std::string config_path, method, np_list, out_path, family = "pwm";
  std::optional<int> np, samples;
  std::optional<double> reltol, abstol, fs, duty, t_end;
  int parallel = 1;

  const auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "JSON run config");
    sub->add_option("--reltol", reltol, "relative tolerance");
    sub->add_option("--abstol", abstol, "absolute tolerance");
    sub->add_option("--samples", samples, "samples per switching period");
    sub->add_option("--t-end", t_end, "end time [s]");
    sub->add_option("--fs", fs, "switching frequency [Hz] (overrides config)");
    sub->add_option("--duty", duty, "duty cycle (overrides config)");
    sub->add_option("--out", out_path, "output CSV (default stdout)");
  };

  SimulateOptions sim;
  auto *simulate = app.add_subcommand("simulate", "simulate one circuit");
  add_common(simulate);
  simulate->add_option("--method", method, "mpde-pwm, mpde-fe, timestep or analytic");
  simulate->add_option("--np", np, "basis size Np");
  simulate->add_option("--surface-out", sim.surface_out,
                       "write the multivariate surface x(t1, t2) as CSV");
  simulate->add_option("--surface-t1", sim.surface_t1, "surface samples in t1");
  simulate->add_option("--surface-t2", sim.surface_t2, "surface samples in t2");
  simulate->add_option("--coeff-out", sim.coeff_out,
                       "write coefficient trajectories at accepted steps");

  auto *convergence = app.add_subcommand("convergence", "error versus Np");
  add_common(convergence);
  convergence->add_option("--method", family, "pwm or fe (also mpde-pwm, mpde-fe)");
  convergence->add_option("--np-list", np_list, "comma-separated Np values");
  convergence->add_option("--parallel", parallel, "worker threads");

  EfficiencyOptions eff;
  std::string baseline_reltols, pwm_list, fe_list;
  auto *efficiency = app.add_subcommand("efficiency", "work-precision study");
  add_common(efficiency);
  efficiency->add_option("--baseline-reltols", baseline_reltols,
                         "comma-separated reltol values for time stepping");
  efficiency->add_option("--pwm-np-list", pwm_list, "PWM Np values");
  efficiency->add_option("--fe-np-list", fe_list, "FE Np values (empty string: none)");
  efficiency->add_option("--repeats", eff.repeats, "timing repeats (median kept)");
  efficiency->add_option("--parallel", parallel, "worker threads");

  int profile_np = 10;
  std::string profile_out;
  auto *project = app.add_subcommand("project", "three-level signal projection");
  project->add_option("--np-list", np_list, "comma-separated Np values (default 1..12)");
  project->add_option("--np", profile_np, "Np of the sampled profile");
  project->add_option("--profile-out", profile_out, "write tau,g,g_h samples");
  project->add_option("--out", out_path, "output CSV (default stdout)");

  double basis_duty = 0.7;
  int basis_np = 8;
  auto *basis = app.add_subcommand("basis", "sample a basis on 1001 points");
  basis->add_option("--method", family, "pwm or fe");
  basis->add_option("--np", basis_np, "basis size Np");
  basis->add_option("--duty", basis_duty, "duty cycle");
  basis->add_option("--out", out_path, "output CSV (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty())
      cfg = load_config(config_path);
    const bool from_matrices = cfg.matrices.has_value();
    if (fs) {
      if (!(*fs > 0.0))
        throw ConfigError("--fs must be > 0");
      if (from_matrices)
        cfg.matrices->fs = *fs;
      else {
        BuckParameters p = cfg.buck.value_or(BuckParameters{});
        p.fs = *fs;
        cfg.buck = p;
      }
    }
    if (duty && !basis->parsed()) {
      if (!(*duty > 0.0 && *duty < 1.0))
        throw ConfigError("--duty must lie in (0, 1)");
      if (from_matrices)
        cfg.matrices->duty = *duty;
      else {
        BuckParameters p = cfg.buck.value_or(BuckParameters{});
        p.duty = *duty;
        cfg.buck = p;
      }
    }
    if (!method.empty()) {
      try {
        cfg.method = parse_method(method);
      } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
      }
    }
    if (np) {
      if (*np < 1)
        throw ConfigError("--np must be >= 1");
      cfg.np = *np;
    }
    if (reltol) {
      if (!(*reltol > 0.0))
        throw ConfigError("--reltol must be > 0");
      cfg.reltol = *reltol;
    }
    if (abstol) {
      if (!(*abstol > 0.0))
        throw ConfigError("--abstol must be > 0");
      cfg.abstol = *abstol;
    }
    if (samples) {
      if (*samples < 1)
        throw ConfigError("--samples must be >= 1");
      cfg.samples_per_period = *samples;
    }
    if (t_end) {
      if (!(*t_end >= 0.0))
        throw ConfigError("--t-end must be >= 0");
      cfg.t_end = *t_end;
    }
    if (parallel < 1)
      throw ConfigError("--parallel must be >= 1");
    cfg.circuit().validate();

    std::ofstream file;
    std::ostream &dst = detail::open_output(out_path, file, out);
    if (simulate->parsed()) {
      sim.warnings = &err;
      cmd_simulate(cfg, sim, dst);
    } else if (convergence->parsed()) {
      const BasisFamily f = parse_family(family);
      const auto list = np_list.empty() ? default_np_list(f) : parse_int_list(np_list);
      cmd_convergence(cfg, f, list, parallel, dst);
    } else if (efficiency->parsed()) {
      if (!baseline_reltols.empty())
        eff.baseline_reltols = parse_double_list(baseline_reltols);
      if (!pwm_list.empty())
        eff.pwm_np = parse_int_list(pwm_list);
      if (efficiency->count("--fe-np-list") > 0)
        eff.fe_np = fe_list.empty() ? std::vector<int>{} : parse_int_list(fe_list);
      eff.parallel = parallel;
      cmd_efficiency(cfg, eff, dst);
    } else if (project->parsed()) {
      const auto list = np_list.empty() ? default_np_list(BasisFamily::pwm)
                                        : parse_int_list(np_list);
      cmd_project(list, profile_np, profile_out, dst);
    } else if (basis->parsed()) {
      cmd_basis(parse_family(family), basis_np, basis_duty, dst);
    }
    return ok;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const InvalidDutyAlignment &e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::invalid_argument &e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception &e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  }
}

inline int run(int argc, char **argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace mpde::cli
