#pragma once
// Run configuration: "key = value" lines under [channel], [receiver] and
// [run] headers. Every key has a default; unknown keys are rejected.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "puma/error.hpp"
#include "puma/montecarlo.hpp"

namespace puma {

enum class ExperimentKind { pdf_z, rate_vs_users, rho_nmax_sweep, nrf_compare, custom };

inline std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::pdf_z: return "pdf-z";
    case ExperimentKind::rate_vs_users: return "rate-vs-users";
    case ExperimentKind::rho_nmax_sweep: return "rho-nmax-sweep";
    case ExperimentKind::nrf_compare: return "nrf-compare";
    case ExperimentKind::custom: return "custom";
  }
  return "custom";
}

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::custom;
  ExperimentSpec spec{
      .channel = RichScatteringModel{FasGeometry{4, 4, 3.0, 1.6}, 1.0}, .coupling = {}, .receiver = {}, .n_users = 4};
  std::vector<int> users{4, 8};
  std::vector<Scheme> schemes{Scheme::puma, Scheme::cuma, Scheme::sfama};
  std::vector<double> rho_values{0.2, 0.6};
  std::vector<int> n_max_values;  // empty: {N/4, N/2, N}
  std::vector<int> n_rf_values{1, 2};
  int bins = 60;
  double epsilon = 0.1;
  std::string output_path;

  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// shortest form that parses back to the same double
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v, std::function<std::string(const T&)> f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + f(v[i]);
  return out;
}

[[noreturn]] inline void invalid(const std::string& key, const std::string& value, const std::string& rule) {
  throw ConfigError(key + " = '" + value + "': " + rule);
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(out)) invalid(key, v, "expected a finite number");
  return out;
}

inline long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) invalid(key, v, "expected an integer");
  return out;
}

inline std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) invalid(key, v, "expected an unsigned 64-bit integer");
  return out;
}

inline int positive_int(const std::string& key, const std::string& v) {
  const long long n = to_integer(key, v);
  if (n < 1 || n > 1'000'000'000) invalid(key, v, "must be a positive integer");
  return static_cast<int>(n);
}

inline Scheme to_scheme(const std::string& key, const std::string& v) {
  if (v == "puma") return Scheme::puma;
  if (v == "cuma") return Scheme::cuma;
  if (v == "sfama") return Scheme::sfama;
  invalid(key, v, "must be one of puma, cuma, sfama");
}

inline Modulation to_modulation(const std::string& key, const std::string& v) {
  if (v == "bpsk") return Modulation::bpsk();
  if (v == "qpsk" || v == "4qam") return Modulation::qam(4);
  if (v == "16qam") return Modulation::qam(16);
  if (v == "64qam") return Modulation::qam(64);
  invalid(key, v, "must be one of bpsk, qpsk, 16qam, 64qam");
}

inline std::string modulation_key(const Modulation& m) {
  if (m.kind == Modulation::Kind::bpsk) return "bpsk";
  return m.order == 4 ? "qpsk" : std::to_string(m.order) + "qam";
}

inline std::string coupling_key(CouplingKind k) {
  switch (k) {
    case CouplingKind::identity: return "identity";
    case CouplingKind::from_file: return "from-file";
    case CouplingKind::dipole_emf: return "dipole-emf";
  }
  return "identity";
}

// Model-independent view so [channel] keys can be set in any order.
struct ChannelFields {
  std::string model = "rich";
  FasGeometry geometry{4, 4, 3.0, 1.6};
  double sigma_g = 1.0;
  double rice_k = 0.0;
  int n_paths = 50;
};

inline ChannelFields channel_fields(const ChannelModel& m) {
  ChannelFields f;
  if (const auto* r = std::get_if<RichScatteringModel>(&m)) {
    f.geometry = r->geometry;
    f.sigma_g = r->sigma_g;
  } else {
    const auto& s = std::get<FiniteScatteringModel>(m);
    f.model = "finite";
    f.geometry = s.geometry;
    f.sigma_g = s.sigma_g;
    f.rice_k = s.rice_k;
    f.n_paths = s.n_paths;
  }
  return f;
}

inline ChannelModel channel_model(const ChannelFields& f) {
  if (f.model == "rich") return RichScatteringModel{f.geometry, f.sigma_g};
  return FiniteScatteringModel{f.geometry, f.sigma_g, f.rice_k, f.n_paths, AngleLaw::uniform_azimuth_elevation};
}

/// Applies one "section.key" assignment.
inline void assign(RunConfig& c, const std::string& key, const std::string& v) {
  ChannelFields ch = channel_fields(c.spec.channel);
  auto& rx = c.spec.receiver;
  auto& cp = c.spec.coupling;
  bool channel_changed = true;

  if (key == "channel.model") {
    if (v != "rich" && v != "finite") invalid(key, v, "must be rich or finite");
    ch.model = v;
  } else if (key == "channel.n1") {
    ch.geometry.n1 = positive_int(key, v);
  } else if (key == "channel.n2") {
    ch.geometry.n2 = positive_int(key, v);
  } else if (key == "channel.w1" || key == "channel.w2") {
    const double w = to_double(key, v);
    if (w < 0.0) invalid(key, v, "must be >= 0 wavelengths");
    (key == "channel.w1" ? ch.geometry.w1 : ch.geometry.w2) = w;
  } else if (key == "channel.sigma_g") {
    ch.sigma_g = to_double(key, v);
    if (!(ch.sigma_g > 0.0)) invalid(key, v, "must be > 0");
  } else if ((key == "channel.rice_k" || key == "channel.n_paths") && ch.model != "finite") {
    invalid(key, v, "only applies to model = finite");
  } else if (key == "channel.rice_k") {
    ch.rice_k = to_double(key, v);
    if (ch.rice_k < 0.0) invalid(key, v, "must be >= 0");
  } else if (key == "channel.n_paths") {
    ch.n_paths = positive_int(key, v);
  } else {
    channel_changed = false;
  }
  if (channel_changed) {
    c.spec.channel = channel_model(ch);
    return;
  }

  if (key == "channel.coupling") {
    if (v == "identity") cp.kind = CouplingKind::identity;
    else if (v == "from-file") cp.kind = CouplingKind::from_file;
    else if (v == "dipole-emf") cp.kind = CouplingKind::dipole_emf;
    else invalid(key, v, "must be identity, from-file or dipole-emf");
  } else if (key == "channel.z_termination") {
    cp.z_termination = to_double(key, v);
    if (!(cp.z_termination > 0.0)) invalid(key, v, "must be > 0 ohms");
  } else if (key == "channel.dipole_length") {
    cp.dipole_length = to_double(key, v);
    if (!(cp.dipole_length > 0.0)) invalid(key, v, "must be > 0 wavelengths");
  } else if (key == "channel.dipole_width") {
    cp.dipole_width = to_double(key, v);
    if (!(cp.dipole_width > 0.0)) invalid(key, v, "must be > 0 wavelengths");
  } else if (key == "channel.impedance_file") {
    cp.impedance_file = v;
  } else if (key == "receiver.scheme") {
    rx.scheme = to_scheme(key, v);
  } else if (key == "receiver.n_rf") {
    rx.n_rf = positive_int(key, v);
  } else if (key == "receiver.rho") {
    rx.rho = to_double(key, v);
    if (!(rx.rho >= 0.0 && rx.rho <= 1.0)) invalid(key, v, "rho must lie in [0, 1]");
  } else if (key == "receiver.n_max") {
    if (v == "all") rx.n_max.reset();
    else rx.n_max = positive_int(key, v);
  } else if (key == "run.experiment") {
    if (v == "pdf-z") c.experiment = ExperimentKind::pdf_z;
    else if (v == "rate-vs-users") c.experiment = ExperimentKind::rate_vs_users;
    else if (v == "rho-nmax-sweep") c.experiment = ExperimentKind::rho_nmax_sweep;
    else if (v == "nrf-compare") c.experiment = ExperimentKind::nrf_compare;
    else if (v == "custom") c.experiment = ExperimentKind::custom;
    else invalid(key, v, "must be pdf-z, rate-vs-users, rho-nmax-sweep, nrf-compare or custom");
  } else if (key == "run.n_users") {
    c.spec.n_users = positive_int(key, v);
  } else if (key == "run.users") {
    c.users.clear();
    for (const auto& s : split_list(v)) c.users.push_back(positive_int(key, s));
    if (c.users.empty()) invalid(key, v, "needs at least one value");
  } else if (key == "run.schemes") {
    c.schemes.clear();
    for (const auto& s : split_list(v)) c.schemes.push_back(to_scheme(key, s));
    if (c.schemes.empty()) invalid(key, v, "needs at least one value");
  } else if (key == "run.rho_values") {
    c.rho_values.clear();
    for (const auto& s : split_list(v)) {
      const double r = to_double(key, s);
      if (!(r >= 0.0 && r <= 1.0)) invalid(key, s, "rho must lie in [0, 1]");
      c.rho_values.push_back(r);
    }
    if (c.rho_values.empty()) invalid(key, v, "needs at least one value");
  } else if (key == "run.n_max_values") {
    c.n_max_values.clear();
    if (v != "auto")
      for (const auto& s : split_list(v)) c.n_max_values.push_back(positive_int(key, s));
  } else if (key == "run.n_rf_values") {
    c.n_rf_values.clear();
    for (const auto& s : split_list(v)) c.n_rf_values.push_back(positive_int(key, s));
    if (c.n_rf_values.empty()) invalid(key, v, "needs at least one value");
  } else if (key == "run.snr_db") {
    c.spec.snr_db = to_double(key, v);
  } else if (key == "run.modulation") {
    c.spec.modulation = to_modulation(key, v);
  } else if (key == "run.trials") {
    const long long t = to_integer(key, v);
    if (t < 1) invalid(key, v, "must be >= 1");
    c.spec.trials = t;
  } else if (key == "run.seed") {
    c.spec.master_seed = to_seed(key, v);
  } else if (key == "run.bins") {
    c.bins = positive_int(key, v);
  } else if (key == "run.epsilon") {
    c.epsilon = to_double(key, v);
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) invalid(key, v, "must lie in (0, 1)");
  } else if (key == "run.output") {
    c.output_path = v;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

}  // namespace config_detail

/// Cross-field checks, run after every key has been applied.
inline void validate_config(const RunConfig& c) {
  auto check = [](auto&& fn, const std::string& field) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(field + ": " + e.what());
    }
  };
  check([&] { std::visit([](const auto& m) { m.validate(); }, c.spec.channel); }, "channel");
  check([&] { c.spec.coupling.validate(); }, "channel.coupling");
  check([&] { c.spec.receiver.validate(); }, "receiver");
  const int n = geometry_of(c.spec.channel).size();
  if (n > 4096) throw ConfigError("channel: n1*n2 = " + std::to_string(n) + " exceeds 4096 ports");
  for (int v : c.n_max_values)
    if (v > n) throw ConfigError("run.n_max_values: " + std::to_string(v) + " exceeds the " + std::to_string(n) + " ports");
  if (c.experiment == ExperimentKind::pdf_z) {
    if (c.spec.n_users < 2) throw ConfigError("run.n_users: pdf-z needs n_users >= 2");
    check([&] { require_analysis_regime(c.spec); }, "pdf-z");
  }
}

inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = config_detail::trim(std::string_view(assignment).substr(0, eq));
  const std::string value = config_detail::trim(std::string_view(assignment).substr(eq + 1));
  if (key.find('.') == std::string::npos)
    throw ConfigError("override key '" + key + "' must be qualified as section.key");
  config_detail::assign(c, key, value);
}

/// Parses and validates a configuration document, starting from `base`.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  RunConfig c = std::move(base);
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  struct Pending {
    std::string key, value;
    int line;
  };
  std::vector<Pending> pending;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    const std::string line = config_detail::trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = config_detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "channel" && section != "receiver" && section != "run")
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = config_detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    pending.push_back({section + "." + key, value, line_no});
  }
  // The channel model decides which other channel keys are meaningful, so
  // it is applied first.
  std::stable_partition(pending.begin(), pending.end(),
                        [](const Pending& p) { return p.key == "channel.model"; });
  for (const auto& p : pending) {
    try {
      config_detail::assign(c, p.key, p.value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(p.line) + ": " + e.what());
    }
  }
  validate_config(c);
  return c;
}

/// Canonical document; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using config_detail::fmt;
  const auto ch = config_detail::channel_fields(c.spec.channel);
  const auto& cp = c.spec.coupling;
  const auto& rx = c.spec.receiver;
  std::ostringstream o;
  o << "[channel]\n"
    << "model = " << ch.model << "\n"
    << "n1 = " << ch.geometry.n1 << "\n"
    << "n2 = " << ch.geometry.n2 << "\n"
    << "w1 = " << fmt(ch.geometry.w1) << "\n"
    << "w2 = " << fmt(ch.geometry.w2) << "\n"
    << "sigma_g = " << fmt(ch.sigma_g) << "\n";
  if (ch.model == "finite") o << "rice_k = " << fmt(ch.rice_k) << "\n" << "n_paths = " << ch.n_paths << "\n";
  o << "coupling = " << config_detail::coupling_key(cp.kind) << "\n"
    << "z_termination = " << fmt(cp.z_termination) << "\n"
    << "dipole_length = " << fmt(cp.dipole_length) << "\n"
    << "dipole_width = " << fmt(cp.dipole_width) << "\n";
  if (!cp.impedance_file.empty()) o << "impedance_file = " << cp.impedance_file << "\n";
  o << "\n[receiver]\n"
    << "scheme = " << scheme_name(rx.scheme) << "\n"
    << "n_rf = " << rx.n_rf << "\n"
    << "rho = " << fmt(rx.rho) << "\n"
    << "n_max = " << (rx.n_max ? std::to_string(*rx.n_max) : std::string("all")) << "\n";
  o << "\n[run]\n"
    << "experiment = " << experiment_name(c.experiment) << "\n"
    << "n_users = " << c.spec.n_users << "\n"
    << "users = " << config_detail::join<int>(c.users, [](const int& v) { return std::to_string(v); }) << "\n"
    << "schemes = " << config_detail::join<Scheme>(c.schemes, [](const Scheme& s) { return scheme_name(s); }) << "\n"
    << "rho_values = " << config_detail::join<double>(c.rho_values, [](const double& v) { return fmt(v); }) << "\n"
    << "n_max_values = "
    << (c.n_max_values.empty() ? std::string("auto")
                               : config_detail::join<int>(c.n_max_values, [](const int& v) { return std::to_string(v); }))
    << "\n"
    << "n_rf_values = " << config_detail::join<int>(c.n_rf_values, [](const int& v) { return std::to_string(v); })
    << "\n"
    << "snr_db = " << fmt(c.spec.snr_db) << "\n"
    << "modulation = " << config_detail::modulation_key(c.spec.modulation) << "\n"
    << "trials = " << c.spec.trials << "\n"
    << "seed = " << c.spec.master_seed << "\n"
    << "bins = " << c.bins << "\n"
    << "epsilon = " << fmt(c.epsilon) << "\n";
  if (!c.output_path.empty()) o << "output = " << c.output_path << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Presets

inline const std::map<std::string, std::string>& preset_documents() {
  static const std::map<std::string, std::string> presets = {
      {"pdf-z",
       "[channel]\nmodel = rich\nn1 = 4\nn2 = 4\nw1 = 3\nw2 = 1.6\n"
       "[receiver]\nscheme = puma\nn_rf = 1\nrho = 0\nn_max = all\n"
       "[run]\nexperiment = pdf-z\nn_users = 5\ntrials = 100000\nseed = 7\nbins = 60\n"},
      {"rate-vs-users",
       "[channel]\nmodel = rich\nn1 = 14\nn2 = 15\nw1 = 13\nw2 = 7\n"
       "[receiver]\nn_rf = 1\nrho = 0\nn_max = all\n"
       "[run]\nexperiment = rate-vs-users\nusers = 10, 20, 40\nschemes = puma, cuma, sfama\n"
       "modulation = qpsk\nsnr_db = 50\ntrials = 10000\nseed = 11\n"},
      {"rho-nmax-sweep",
       "[channel]\nmodel = finite\nn1 = 16\nn2 = 4\nw1 = 3\nw2 = 1.6\nrice_k = 0\nn_paths = 50\n"
       "coupling = dipole-emf\n"
       "[receiver]\nscheme = puma\nn_rf = 1\n"
       "[run]\nexperiment = rho-nmax-sweep\nn_users = 6\nrho_values = 0.2, 0.6\nn_max_values = auto\n"
       "modulation = qpsk\nsnr_db = 50\ntrials = 4000\nseed = 3\n"},
      {"nrf-compare",
       "[channel]\nmodel = rich\nn1 = 14\nn2 = 15\nw1 = 13\nw2 = 7\n"
       "[receiver]\nrho = 0\nn_max = all\n"
       "[run]\nexperiment = nrf-compare\nn_users = 20\nschemes = puma, cuma\nn_rf_values = 1, 2\n"
       "modulation = qpsk\nsnr_db = 50\ntrials = 5000\nseed = 5\n"},
      {"custom",
       "[channel]\nmodel = rich\nn1 = 4\nn2 = 4\nw1 = 3\nw2 = 1.6\n"
       "[receiver]\nscheme = puma\n"
       "[run]\nexperiment = custom\nn_users = 4\nmodulation = qpsk\ntrials = 10000\nseed = 1\n"},
  };
  return presets;
}

inline RunConfig preset(const std::string& name) {
  const auto& p = preset_documents();
  const auto it = p.find(name);
  if (it == p.end()) {
    std::string names;
    for (const auto& [k, _] : p) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
  }
  return parse_config(it->second);
}

}  // namespace puma
