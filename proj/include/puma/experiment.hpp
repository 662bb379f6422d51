#pragma once
// Experiment drivers behind the CLI presets and their CSV output.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "puma/analysis.hpp"
#include "puma/config.hpp"
#include "puma/montecarlo.hpp"

namespace puma {

inline constexpr const char* version = "1.0.0";

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of everything that determines the numbers (not the output path).
inline std::uint64_t spec_hash(const RunConfig& c) {
  RunConfig canonical = c;
  canonical.output_path.clear();
  return fnv1a(serialize_config(canonical));
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

struct ExperimentResult {
  ResultTable table;
  std::string header;  // comment lines
  std::string body;    // column names and data rows
  std::string csv() const { return header + body; }
};

namespace experiment_detail {

struct Column {
  std::string metric;
  bool with_stderr;
};

inline const std::vector<Column>& rate_columns() {
  static const std::vector<Column> c{{"ber", true}, {"rate_per_ue", false}, {"rate_network", true}};
  return c;
}

/// One CSV row per (series, sweep value) in order of first appearance, one
/// column per metric. Missing metrics are left empty.
inline std::string table_body(const ResultTable& t, const std::vector<Column>& columns) {
  std::string out = "series,sweep,value";
  for (const auto& c : columns) out += "," + c.metric + (c.with_stderr ? "," + c.metric + "_stderr" : "");
  out += ",trials\n";
  std::vector<bool> done(t.rows.size(), false);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (done[i]) continue;
    const auto& key = t.rows[i];
    std::vector<const ResultRow*> group;
    long long trials = 0;
    for (std::size_t j = i; j < t.rows.size(); ++j) {
      const auto& r = t.rows[j];
      if (r.series != key.series || r.sweep_name != key.sweep_name || r.sweep_value != key.sweep_value) continue;
      done[j] = true;
      group.push_back(&r);
      trials = std::max(trials, r.trials);
    }
    out += key.series + "," + key.sweep_name + "," + format_number(key.sweep_value);
    for (const auto& c : columns) {
      const auto it = std::find_if(group.begin(), group.end(), [&](const ResultRow* r) { return r->metric == c.metric; });
      out += "," + (it != group.end() ? format_number((*it)->estimate) : std::string());
      if (c.with_stderr) out += "," + (it != group.end() ? format_number((*it)->std_error) : std::string());
    }
    out += "," + std::to_string(trials) + "\n";
  }
  return out;
}

inline void log_rate_rows(std::ostream* log, const ResultTable& t, std::size_t from) {
  if (!log) return;
  for (std::size_t i = from; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (r.metric != "rate_network") continue;
    *log << r.series << " " << r.sweep_name << "=" << format_number(r.sweep_value)
         << " rate_network=" << format_number(r.estimate) << " +- " << format_number(r.std_error) << "\n";
  }
}

inline void append(ResultTable& to, const ResultTable& from) {
  to.rows.insert(to.rows.end(), from.rows.begin(), from.rows.end());
}

inline ExperimentResult pdf_z(const RunConfig& c, int workers, std::ostream* log) {
  ExperimentResult out;
  const SirRun run = run_sir_samples(c.spec, workers);
  const int users = c.spec.n_users;
  const TabulatedZCdf cdf(run.moments, users);
  const auto [mn, mx] = std::minmax_element(run.z.begin(), run.z.end());
  const auto edges = log_edges(*mn, *mx * (1.0 + 1e-12), c.bins);
  const Histogram h = histogram(run.z, edges);
  out.body = "z,empirical_density,analytic_density\n";
  for (int i = 0; i < c.bins; ++i) {
    const double a = h.edges[i], b = h.edges[i + 1];
    const double centre = std::sqrt(a * b);
    const double analytic = (cdf(b) - cdf(a)) / (b - a);
    out.body += format_number(centre) + "," + format_number(h.density[i]) + "," + format_number(analytic) + "\n";
    out.table.rows.push_back({"empirical", "z", centre, "density", h.density[i], 0.0, c.spec.trials});
    out.table.rows.push_back({"analytic", "z", centre, "density", analytic, 0.0, c.spec.trials});
  }
  const double ks = ks_distance(run.z, cdf);
  out.table.rows.push_back({"empirical", "n_users", double(users), "ks_distance", ks, 0.0, c.spec.trials});
  if (log)
    *log << "pdf-z n_users=" << users << " trials=" << c.spec.trials << " ks=" << format_number(ks)
         << " rejected=" << run.rejected << "\n";
  return out;
}

inline ExperimentResult rate_vs_users(const RunConfig& c, int workers, std::ostream* log) {
  ExperimentResult out;
  for (Scheme s : c.schemes) {
    ExperimentSpec spec = c.spec;
    spec.receiver.scheme = s;
    spec.receiver.n_rf = 1;
    const std::size_t from = out.table.rows.size();
    append(out.table, rate_sweep(spec, c.users, workers));
    log_rate_rows(log, out.table, from);
  }
  out.body = table_body(out.table, rate_columns());
  return out;
}

inline std::vector<int> n_max_grid(const RunConfig& c) {
  if (!c.n_max_values.empty()) return c.n_max_values;
  const int n = geometry_of(c.spec.channel).size();
  std::vector<int> v{std::max(1, n / 4), std::max(1, n / 2), n};
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline ExperimentResult rho_nmax_sweep(const RunConfig& c, int workers, std::ostream* log) {
  ExperimentResult out;
  const int bits = c.spec.modulation.bits_per_symbol();
  const int users = c.spec.n_users;
  for (double rho : c.rho_values) {
    const std::string series = "rho=" + format_number(rho);
    for (int cap : n_max_grid(c)) {
      ExperimentSpec spec = c.spec;
      spec.receiver.rho = rho;
      spec.receiver.n_max = cap;
      const std::size_t from = out.table.rows.size();
      append_rate_rows(out.table, series, "n_max", cap, run_ber_trials(spec, workers), users, bits);
      log_rate_rows(log, out.table, from);
    }
  }
  out.body = table_body(out.table, rate_columns());
  return out;
}

inline ExperimentResult nrf_compare(const RunConfig& c, int workers, std::ostream* log) {
  ExperimentResult out;
  const int bits = c.spec.modulation.bits_per_symbol();
  const int users = c.spec.n_users;
  for (Scheme s : c.schemes) {
    for (int n_rf : c.n_rf_values) {
      if ((s == Scheme::sfama && n_rf != 1) || (s == Scheme::cuma && n_rf > 2)) continue;
      ExperimentSpec spec = c.spec;
      spec.receiver.scheme = s;
      spec.receiver.n_rf = n_rf;
      const std::size_t from = out.table.rows.size();
      append_rate_rows(out.table, scheme_name(s), "n_rf", n_rf, run_ber_trials(spec, workers), users, bits);
      log_rate_rows(log, out.table, from);
    }
  }
  out.body = table_body(out.table, rate_columns());
  return out;
}

/// One Monte Carlo point; in the analysis regime the closed-form BER,
/// ergodic and outage rates are added as an "analytic" row.
inline ExperimentResult custom(const RunConfig& c, int workers, std::ostream* log) {
  ExperimentResult out;
  out.table = rate_sweep(c.spec, {c.spec.n_users}, workers);
  log_rate_rows(log, out.table, 0);
  std::vector<Column> columns = rate_columns();
  bool analytic = true;
  try {
    require_analysis_regime(c.spec);
  } catch (const DomainError&) {
    analytic = false;
  }
  if (analytic) {
    const int u = c.spec.n_users;
    const RateReport r =
        rate_report(c.spec.modulation, compute_moments(std::get<RichScatteringModel>(c.spec.channel)), u, c.epsilon);
    const double value = u;
    out.table.rows.push_back({"analytic", "n_users", value, "ber", r.per_ue_ber, 0.0, 0});
    out.table.rows.push_back({"analytic", "n_users", value, "rate_per_ue", r.bsc_rate / u, 0.0, 0});
    out.table.rows.push_back({"analytic", "n_users", value, "rate_network", r.bsc_rate, 0.0, 0});
    out.table.rows.push_back({"analytic", "n_users", value, "ergodic_rate", r.ergodic_rate, 0.0, 0});
    out.table.rows.push_back({"analytic", "n_users", value, "outage_rate", r.outage_rate, 0.0, 0});
    columns.push_back({"ergodic_rate", false});
    columns.push_back({"outage_rate", false});
    if (log)
      *log << "analytic n_users=" << u << " ber=" << format_number(r.per_ue_ber)
           << " rate_network=" << format_number(r.bsc_rate) << " ergodic=" << format_number(r.ergodic_rate)
           << " outage=" << format_number(r.outage_rate) << "\n";
  }
  out.body = table_body(out.table, columns);
  return out;
}

}  // namespace experiment_detail

/// Runs the configured experiment; writes the CSV when output_path is set.
inline ExperimentResult run_experiment(const RunConfig& c, int workers = 0, std::ostream* log = nullptr) {
  validate_config(c);
  ExperimentResult out;
  switch (c.experiment) {
    case ExperimentKind::pdf_z: out = experiment_detail::pdf_z(c, workers, log); break;
    case ExperimentKind::rate_vs_users: out = experiment_detail::rate_vs_users(c, workers, log); break;
    case ExperimentKind::rho_nmax_sweep: out = experiment_detail::rho_nmax_sweep(c, workers, log); break;
    case ExperimentKind::nrf_compare: out = experiment_detail::nrf_compare(c, workers, log); break;
    case ExperimentKind::custom: out = experiment_detail::custom(c, workers, log); break;
  }
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(spec_hash(c)));
  out.header = std::string("# puma-fas ") + version + "\n# experiment: " + experiment_name(c.experiment) +
               "\n# seed: " + std::to_string(c.spec.master_seed) + "\n# spec_hash: " + hash + "\n";
  if (!c.output_path.empty()) {
    std::ofstream f(c.output_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + c.output_path + "' for writing");
    f << out.csv();
    if (!f) throw IoError("failed writing '" + c.output_path + "'");
  }
  return out;
}

}  // namespace puma
