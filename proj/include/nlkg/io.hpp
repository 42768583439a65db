#pragma once

#include <map>
#include <string>
#include <vector>

#include "nlkg/dynamics.hpp"
#include "nlkg/envelope.hpp"
#include "nlkg/fgr.hpp"
#include "nlkg/normal_form.hpp"

namespace nlkg {

// Sectioned key=value configuration.  Keys are stored as "section.key"; all
// defaults are embedded and echoed into every emitted file for provenance.
class Config {
 public:
  static Config defaults();
  static Config parse_file(const std::string& path);  // overlays the defaults

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Typed run parameters assembled from a Config.
struct RunConfig {
  RadialGrid grid;
  PotentialSpec potential;
  int n_requested = 0;  // 0: classify from the spectrum
  NormalFormOptions nf;
  SimConfig sim;
  double fit_sigma = 3.0;
  double delta0 = 0.05;  // transient split exponent for the theta window
  uint64_t seed = 1;
};

RunConfig make_run_config(const Config& c);

// Frequency-window classification: the N with (2N-1) omega < m < (2N+1) omega.
// Throws borderline-resonance when m sits within tol_res * m of (2N+1) omega.
int classify_window(double omega, double m, double tol_res);

// deterministic float formatting for reproducible CSVs
std::string format_double(double v);
std::string format_complex(Complex v);

// write-to-temp + rename; no partial files on error
void atomic_write(const std::string& path, const std::string& content);

std::string config_echo(const Config& c);  // "# key = value" lines

std::string spectrum_csv(const Config& c, const SpectralData& sd);
std::string golden_rule_csv(const Config& c, const GoldenRuleReport& rep);
std::string z_terms_csv(const Config& c, const NormalFormResult& nf);
std::string phi_res_text(const NormalFormResult& nf, const SpectralData& sd);
std::string trajectory_csv(const Config& c, const EnvelopeSeries& s);
std::string snapshot_text(const SimState& st, const SpectralData& sd);

struct FitReportRow {
  std::string quantity;
  double t0 = 0, t1 = 0, slope = 0, stderr_slope = 0, predicted = 0, ratio = 0;
};
std::string fit_report_csv(const Config& c, const std::vector<FitReportRow>& rows);

// tolerant trajectory reader (skips # lines); returns columns by header name
std::map<std::string, std::vector<double>> read_csv_columns(const std::string& path);

}  // namespace nlkg
