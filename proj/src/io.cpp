#include "nlkg/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nlkg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  auto& v = c.values_;
  v["grid.r_max"] = "360";
  v["grid.n"] = "2048";
  v["potential.kind"] = "gaussian";
  v["potential.depth"] = "4.0";
  v["potential.radius"] = "1.0";
  v["potential.amplitude"] = "3.4";
  v["potential.width"] = "1.7";
  v["potential.table"] = "";
  v["potential.mass"] = "1.0";
  v["normalform.N"] = "0";  // 0: classify from the spectrum
  v["normalform.d_max"] = "0";
  v["normalform.tol_res"] = "1e-6";
  v["normalform.remainder_budget"] = "1e300";
  v["simulate.lambda"] = "-1";
  v["simulate.dt"] = "0.04";
  v["simulate.T"] = "340";
  v["simulate.scheme"] = "strang";
  v["simulate.stride"] = "25";
  v["simulate.a0"] = "0.82";
  v["simulate.c0"] = "0.0";
  v["simulate.C0"] = "1.0";
  v["simulate.seed_width"] = "2.0";
  v["simulate.blowup_sup"] = "50";
  v["fgr.kernel_ladder"] = "8,4,2";
  v["fgr.eps_ladder"] = "8,4,2";
  v["fit.sigma"] = "3.0";
  v["fit.delta0"] = "0.05";
  v["seed.seed"] = "1";
  return c;
}

Config Config::parse_file(const std::string& path) {
  Config c = defaults();
  std::ifstream in(path);
  require(in.good(), "io-error", "cannot open config: " + path);
  std::string line, section;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    require(eq != std::string::npos, "io-error", "bad config line: " + line);
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    c.values_[key] = val;
  }
  return c;
}

double Config::get_double(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), "io-error", "missing config key: " + key);
  return std::stod(it->second);
}

int Config::get_int(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), "io-error", "missing config key: " + key);
  return std::stoi(it->second);
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), "io-error", "missing config key: " + key);
  return it->second;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

namespace {

std::vector<double> parse_ladder(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  require(!out.empty(), "io-error", "empty ladder specification");
  return out;
}

}  // namespace

RunConfig make_run_config(const Config& c) {
  RunConfig rc;
  rc.grid = build_grid(c.get_double("grid.r_max"), c.get_int("grid.n"));
  std::string kind = c.get_string("potential.kind");
  if (kind == "square-well") {
    rc.potential.kind = PotentialKind::SquareWell;
  } else if (kind == "gaussian") {
    rc.potential.kind = PotentialKind::Gaussian;
  } else if (kind == "tabulated") {
    rc.potential = load_potential_table(c.get_string("potential.table"),
                                        c.get_double("potential.mass"));
  } else {
    require(false, "io-error", "unknown potential kind: " + kind);
  }
  if (rc.potential.kind != PotentialKind::Tabulated) {
    rc.potential.depth = c.get_double("potential.depth");
    rc.potential.radius = c.get_double("potential.radius");
    rc.potential.amplitude = c.get_double("potential.amplitude");
    rc.potential.width = c.get_double("potential.width");
    rc.potential.mass = c.get_double("potential.mass");
  }
  rc.n_requested = c.get_int("normalform.N");
  rc.nf.d_max = c.get_int("normalform.d_max");
  rc.nf.tol_res = c.get_double("normalform.tol_res");
  rc.nf.remainder_budget = c.get_double("normalform.remainder_budget");
  rc.nf.delta.sigma_over_spacing = parse_ladder(c.get_string("fgr.kernel_ladder"));
  rc.nf.delta.eps_over_spacing = parse_ladder(c.get_string("fgr.eps_ladder"));
  rc.sim.lambda = c.get_double("simulate.lambda");
  rc.sim.dt = c.get_double("simulate.dt");
  rc.sim.horizon = c.get_double("simulate.T");
  rc.sim.scheme =
      (c.get_string("simulate.scheme") == "leapfrog") ? Scheme::Leapfrog : Scheme::Strang;
  rc.sim.stride = c.get_int("simulate.stride");
  rc.sim.a0 = c.get_double("simulate.a0");
  rc.sim.c0 = c.get_double("simulate.c0");
  rc.sim.C0 = c.get_double("simulate.C0");
  rc.sim.seed_width = c.get_double("simulate.seed_width");
  rc.sim.blowup_sup = c.get_double("simulate.blowup_sup");
  rc.fit_sigma = c.get_double("fit.sigma");
  rc.delta0 = c.get_double("fit.delta0");
  rc.seed = static_cast<uint64_t>(c.get_double("seed.seed"));
  return rc;
}

int classify_window(double omega, double m, double tol_res) {
  require(omega > 0.0 && omega < m, "frequency-window", "need 0 < omega < m");
  int N = static_cast<int>(std::floor((m / omega + 1.0) / 2.0));
  N = std::max(N, 1);
  require(std::abs(m - (2 * N + 1) * omega) >= tol_res * m, "borderline-resonance",
          "m = (2N+1) omega is outside the theory's scope");
  require((2 * N - 1) * omega < m && m < (2 * N + 1) * omega, "frequency-window",
          "no integer window contains m/omega");
  return N;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_complex(Complex v) {
  std::string s = format_double(v.real());
  if (v.imag() >= 0.0 || std::isnan(v.imag()))
    s += "+" + format_double(v.imag()) + "i";
  else
    s += "-" + format_double(-v.imag()) + "i";
  return s;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "io-error", "cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    require(out.good(), "io-error", "write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string config_echo(const Config& c) {
  std::ostringstream out;
  for (const auto& [k, v] : c.items()) out << "# " << k << " = " << v << "\n";
  return out.str();
}

std::string spectrum_csv(const Config& c, const SpectralData& sd) {
  std::ostringstream out;
  out << config_echo(c);
  out << "k,E_k,is_discrete\n";
  for (int k = 0; k < sd.grid.n; ++k)
    out << (k + 1) << ',' << format_double(sd.eigenvalues[k]) << ','
        << (sd.is_discrete(k) ? 1 : 0) << "\n";
  return out.str();
}

std::string golden_rule_csv(const Config& c, const GoldenRuleReport& rep) {
  std::ostringstream out;
  out << config_echo(c);
  out << "N,omega,m,Lambda,gamma_kernel,gamma_resolvent,gamma,spread\n";
  out << rep.N << ',' << format_double(rep.omega) << ',' << format_double(rep.m) << ','
      << format_double(rep.lambda_res) << ',' << format_double(rep.gamma_kernel) << ','
      << format_double(rep.gamma_resolvent) << ',' << format_double(rep.gamma) << ','
      << format_double(rep.spread) << "\n";
  return out.str();
}

std::string z_terms_csv(const Config& c, const NormalFormResult& nf) {
  std::ostringstream out;
  out << config_echo(c);
  // d: 0 scalar action term, +1 pairs with f, -1 pairs with conj(f)
  out << "mu,nu,d,abs_coeff,arg_coeff,divisor\n";
  const double omega = nf.golden.omega;
  for (const auto& t : nf.z.terms) {
    int d = 0;
    if (t.linear.size() == 1) d = t.linear[0].conjugated ? -1 : 1;
    double divisor = omega * (t.mu - t.nu);
    out << t.mu << ',' << t.nu << ',' << d << ',' << format_double(std::abs(t.coeff)) << ','
        << format_double(std::arg(t.coeff)) << ',' << format_double(divisor) << "\n";
  }
  return out.str();
}

std::string phi_res_text(const NormalFormResult& nf, const SpectralData& sd) {
  std::ostringstream out;
  for (int i = 0; i < sd.grid.n; ++i)
    out << format_double(sd.grid.r[i]) << ',' << format_complex(nf.phi_res[i]) << "\n";
  return out.str();
}

std::string trajectory_csv(const Config& c, const EnvelopeSeries& s) {
  std::ostringstream out;
  out << config_echo(c);
  out << "t,abs_xi,theta,eta_L8,energy,Pc_L2\n";
  for (size_t j = 0; j < s.times.size(); ++j)
    out << format_double(s.times[j]) << ',' << format_double(s.abs_xi[j]) << ','
        << format_double(s.theta[j]) << ',' << format_double(s.eta_l8[j]) << ','
        << format_double(s.energy[j]) << ',' << format_double(s.pc_l2[j]) << "\n";
  return out.str();
}

std::string snapshot_text(const SimState& st, const SpectralData& sd) {
  std::ostringstream out;
  for (int i = 0; i < sd.grid.n; ++i)
    out << format_double(sd.grid.r[i]) << ' ' << format_double(st.w[i]) << "\n";
  return out.str();
}

std::string fit_report_csv(const Config& c, const std::vector<FitReportRow>& rows) {
  std::ostringstream out;
  out << config_echo(c);
  out << "quantity,t0,t1,slope,stderr,predicted,ratio\n";
  for (const auto& r : rows)
    out << r.quantity << ',' << format_double(r.t0) << ',' << format_double(r.t1) << ','
        << format_double(r.slope) << ',' << format_double(r.stderr_slope) << ','
        << format_double(r.predicted) << ',' << format_double(r.ratio) << "\n";
  return out.str();
}

std::map<std::string, std::vector<double>> read_csv_columns(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "missing-file", "cannot open: " + path);
  std::map<std::string, std::vector<double>> cols;
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (names.empty()) {
      names = cells;
      for (const auto& nm : names) cols[nm] = {};
      continue;
    }
    for (size_t j = 0; j < cells.size() && j < names.size(); ++j) {
      try {
        cols[names[j]].push_back(std::stod(cells[j]));
      } catch (...) {
        cols[names[j]].push_back(std::nan(""));
      }
    }
  }
  require(!names.empty(), "missing-file", "no header row in: " + path);
  return cols;
}

}  // namespace nlkg
