#pragma once
// Trial engine: SIR samples, end-to-end BER and rate sweeps. Trial t always
// draws from Rng::stream(master_seed, t, attempt) and results are reduced in
// trial order, so output does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "puma/analysis.hpp"
#include "puma/channel.hpp"
#include "puma/coupling.hpp"
#include "puma/modulation.hpp"
#include "puma/random.hpp"
#include "puma/receiver.hpp"

namespace puma {

struct ExperimentSpec {
  ChannelModel channel = RichScatteringModel{};
  CouplingModel coupling;
  ReceiverConfig receiver;
  int n_users = 2;
  double snr_db = 50.0;
  Modulation modulation = Modulation::qam(4);
  long long trials = 10000;
  std::uint64_t master_seed = 1;

  double sigma_s2() const { return 1.0; }
  double sigma_eta2() const {
    const double sg = sigma_g_of(channel);
    return sg * sg * sigma_s2() / std::pow(10.0, snr_db / 10.0);
  }

  void validate() const {
    std::visit([](const auto& c) { c.validate(); }, channel);
    coupling.validate();
    receiver.validate();
    modulation.validate();
    if (n_users < 1) throw DomainError("n_users must be >= 1");
    if (trials < 1) throw DomainError("trials must be >= 1");
    if (!std::isfinite(snr_db)) throw DomainError("snr_db must be finite");
  }

  bool operator==(const ExperimentSpec&) const = default;
};

/// Runs fn(t) for t in [0, n) on `workers` threads (0: hardware count) and
/// returns the results in index order.
template <class R, class F>
std::vector<R> parallel_map(long long n, int workers, F&& fn) {
  std::vector<R> out(static_cast<std::size_t>(std::max(0LL, n)));
  if (n <= 0) return out;
  int w = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  w = static_cast<int>(std::min<long long>(w, n));
  if (w == 1) {
    for (long long t = 0; t < n; ++t) out[t] = fn(t);
    return out;
  }
  constexpr long long chunk = 64;
  std::atomic<long long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const long long start = next.fetch_add(chunk);
        if (start >= n) break;
        const long long stop = std::min(n, start + chunk);
        for (long long t = start; t < stop; ++t) out[t] = fn(t);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int i = 0; i < w; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline constexpr int max_redraws = 1000;

/// Calls body(rng) with fresh streams until it stops throwing
/// DegenerateError. Returns the number of rejected attempts.
template <class Body>
int with_redraws(std::uint64_t seed, long long trial, Body&& body) {
  for (int attempt = 0; attempt < max_redraws; ++attempt) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(attempt));
    try {
      body(rng);
      return attempt;
    } catch (const DegenerateError&) {
    }
  }
  throw NumericError("trial " + std::to_string(trial) + ": every redraw was degenerate");
}

// ---------------------------------------------------------------------------
// SIR samples

struct SirRun {
  std::vector<double> z;
  SirMoments moments;
  long long rejected = 0;
};

inline void require_analysis_regime(const ExperimentSpec& spec) {
  const int n = geometry_of(spec.channel).size();
  if (!std::holds_alternative<RichScatteringModel>(spec.channel))
    throw DomainError("SIR sampling needs the rich-scattering model");
  if (spec.receiver.scheme != Scheme::puma || spec.receiver.n_rf != 1 || spec.receiver.rho != 0.0 ||
      spec.receiver.cap(n) != n)
    throw DomainError("SIR sampling needs puma with n_rf = 1, rho = 0 and no port cap");
  if (spec.coupling.kind != CouplingKind::identity) throw DomainError("SIR sampling needs identity coupling");
  if (spec.n_users < 2) throw DomainError("SIR sampling needs n_users >= 2");
}

inline SirRun run_sir_samples(const ExperimentSpec& spec, int workers = 0) {
  spec.validate();
  require_analysis_regime(spec);
  const ChannelSampler sampler(spec.channel);
  SirRun out;
  out.moments = compute_moments(std::get<RichScatteringModel>(spec.channel));
  const double s2 = out.moments.sigma2_sq;
  struct Item {
    double z = 0.0;
    int rejected = 0;
  };
  const auto items = parallel_map<Item>(spec.trials, workers, [&](long long t) {
    Item it;
    it.rejected = with_redraws(spec.master_seed, t, [&](Rng& rng) {
      it.z = instantaneous_sir(sampler.draw(spec.n_users, rng)).z(s2);
    });
    return it;
  });
  out.z.reserve(items.size());
  for (const auto& it : items) {
    out.z.push_back(it.z);
    out.rejected += it.rejected;
  }
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end BER

struct BerEstimate {
  double ber = 0.0;
  double std_error = 0.0;
  long long trials = 0;
  long long bit_errors = 0;
  long long rejected = 0;
};

/// Bit errors of the desired stream in one trial. Stream order: channels,
/// receiver randomness, symbols, noise.
struct TrialContext {
  const ExperimentSpec& spec;
  const ChannelSampler& sampler;
  const CouplingFrontEnd& front;

  int operator()(Rng& rng) const {
    const int users = spec.n_users;
    const ChannelRealization ch = sampler.draw(users, rng);
    const PortPlan plan = build_plan(spec.receiver, ch, spec.sigma_s2(), spec.sigma_eta2(), rng);
    const CouplingMatrix gamma = front.build(plan.activated());
    std::vector<unsigned> labels(users);
    CVector symbols(users);
    for (int u = 0; u < users; ++u) {
      labels[u] = static_cast<unsigned>(rng.below(static_cast<std::uint64_t>(spec.modulation.order)));
      symbols[u] = modulate(spec.modulation, labels[u]);
    }
    const double noise_sd = std::sqrt(spec.sigma_eta2());
    CVector noise(ch.n_ports());
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise[k] = noise_sd * rng.complex_normal();
    const CVector y = aggregate(plan, gamma, ch, symbols, noise);
    const Combined c = digital_combine(plan, gamma, ch.desired, y);
    return bit_errors(labels[0], demodulate(spec.modulation, c.estimate / c.gain));
  }
};

inline BerEstimate run_ber_trials(const ExperimentSpec& spec, int workers = 0) {
  spec.validate();
  const ChannelSampler sampler(spec.channel);
  const CouplingFrontEnd front(spec.coupling, geometry_of(spec.channel));
  const TrialContext ctx{spec, sampler, front};
  struct Item {
    int errors = 0;
    int rejected = 0;
  };
  const auto items = parallel_map<Item>(spec.trials, workers, [&](long long t) {
    Item it;
    it.rejected = with_redraws(spec.master_seed, t, [&](Rng& rng) { it.errors = ctx(rng); });
    return it;
  });
  const double bits = spec.modulation.bits_per_symbol();
  BerEstimate out;
  out.trials = spec.trials;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& it : items) {
    const double e = it.errors / bits;
    sum += e;
    sum_sq += e * e;
    out.bit_errors += it.errors;
    out.rejected += it.rejected;
  }
  const double n = static_cast<double>(spec.trials);
  out.ber = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * out.ber * out.ber) / (n - 1)) : 0.0;
  out.std_error = std::sqrt(var / n);
  return out;
}

// ---------------------------------------------------------------------------
// Result tables

struct ResultRow {
  std::string series;     // e.g. scheme name
  std::string sweep_name; // e.g. "n_users"
  double sweep_value = 0.0;
  std::string metric;
  double estimate = 0.0;
  double std_error = 0.0;
  long long trials = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  const ResultRow* find(const std::string& series, double sweep_value, const std::string& metric) const {
    for (const auto& r : rows)
      if (r.series == series && r.sweep_value == sweep_value && r.metric == metric) return &r;
    return nullptr;
  }
};

/// Delta-method standard error of U m (1 - H2(pe)).
inline double bsc_rate_stderr(double pe, double pe_stderr, int n_users, int bits) {
  if (pe <= 0.0 || pe >= 1.0) return 0.0;
  return std::fabs(n_users * bits * (std::log2(pe) - std::log2(1.0 - pe))) * pe_stderr;
}

/// ber, rate_per_ue and rate_network rows for one sweep point.
inline void append_rate_rows(ResultTable& table, const std::string& series, const std::string& sweep_name,
                             double sweep_value, const BerEstimate& b, int n_users, int bits) {
  const double net = bsc_rate(b.ber, n_users, bits);
  const double net_se = bsc_rate_stderr(b.ber, b.std_error, n_users, bits);
  table.rows.push_back({series, sweep_name, sweep_value, "ber", b.ber, b.std_error, b.trials});
  table.rows.push_back({series, sweep_name, sweep_value, "rate_per_ue", net / n_users, net_se / n_users, b.trials});
  table.rows.push_back({series, sweep_name, sweep_value, "rate_network", net, net_se, b.trials});
}

/// BER, per-UE and network BSC rate for every U in the sweep. Each point
/// reuses the master seed, so points share random numbers where possible.
inline ResultTable rate_sweep(const ExperimentSpec& spec, const std::vector<int>& users, int workers = 0,
                              const std::string& series = "") {
  ResultTable table;
  const std::string label = series.empty() ? scheme_name(spec.receiver.scheme) : series;
  for (int u : users) {
    ExperimentSpec point = spec;
    point.n_users = u;
    append_rate_rows(table, label, "n_users", u, run_ber_trials(point, workers), u,
                     spec.modulation.bits_per_symbol());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Histograms and goodness of fit

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // bins
  long long counted = 0;        // samples inside [edges.front(), edges.back()]
};

/// Density histogram on explicit increasing edges; samples outside the
/// edges are dropped and the rest normalised to unit area.
inline Histogram histogram(const std::vector<double>& samples, std::vector<double> edges) {
  if (samples.empty()) throw DomainError("histogram: no samples");
  if (edges.size() < 2) throw DomainError("histogram: need at least one bin");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i + 1] > edges[i])) throw DomainError("histogram: edges must increase");
  const std::size_t bins = edges.size() - 1;
  std::vector<long long> counts(bins, 0);
  Histogram h;
  for (double v : samples) {
    if (!(v >= edges.front() && v <= edges.back())) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t i = static_cast<std::size_t>(it - edges.begin());
    i = i == 0 ? 0 : std::min(bins - 1, i - 1);
    ++counts[i];
    ++h.counted;
  }
  h.density.assign(bins, 0.0);
  if (h.counted > 0)
    for (std::size_t i = 0; i < bins; ++i)
      h.density[i] = counts[i] / (static_cast<double>(h.counted) * (edges[i + 1] - edges[i]));
  h.edges = std::move(edges);
  return h;
}

/// Uniform bins over `range`, or over the sample range when unset. A
/// constant sample widens to [v - 1/2, v + 1/2].
inline Histogram histogram(const std::vector<double>& samples, int bins,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
  if (samples.empty()) throw DomainError("histogram: no samples");
  if (bins < 1) throw DomainError("histogram: bins must be >= 1");
  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
  } else {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
  edges.back() = hi;
  return histogram(samples, std::move(edges));
}

inline std::vector<double> log_edges(double lo, double hi, int bins) {
  if (!(lo > 0.0 && hi > lo) || bins < 1) throw DomainError("log_edges: need 0 < lo < hi and bins >= 1");
  std::vector<double> e(bins + 1);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i <= bins; ++i) e[i] = std::exp(a + (b - a) * i / bins);
  e.front() = lo;
  e.back() = hi;
  return e;
}

/// sup |F_n - F| over the sample.
template <class Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw DomainError("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

}  // namespace puma
