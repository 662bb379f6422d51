#pragma once
// Port activation, analog weights and digital combining for the PUMA, CUMA
// and sFAMA receivers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "puma/channel.hpp"
#include "puma/coupling.hpp"
#include "puma/error.hpp"
#include "puma/random.hpp"

namespace puma {

enum class Scheme { puma, cuma, sfama };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::puma: return "puma";
    case Scheme::cuma: return "cuma";
    case Scheme::sfama: return "sfama";
  }
  return "unknown";
}

struct ReceiverConfig {
  Scheme scheme = Scheme::puma;
  int n_rf = 1;
  double rho = 0.0;
  std::optional<int> n_max;  // unset: no cap

  int cap(int n_ports) const { return n_max ? std::min(*n_max, n_ports) : n_ports; }

  void validate() const {
    if (n_rf < 1) throw DomainError("n_rf must be >= 1");
    if (scheme == Scheme::sfama && n_rf != 1) throw DomainError("sfama supports n_rf = 1 only");
    if (scheme == Scheme::cuma && n_rf > 2) throw DomainError("cuma supports n_rf <= 2");
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
    if (n_max && *n_max < 1) throw DomainError("n_max must be >= 1");
  }
  bool operator==(const ReceiverConfig&) const = default;
};

/// Activated port sets K_i and the N x n_rf analog weight matrix W.
struct PortPlan {
  std::vector<std::vector<int>> chains;
  CMatrix weights;

  int n_rf() const { return static_cast<int>(chains.size()); }

  /// Sorted union of all chains.
  std::vector<int> activated() const {
    std::vector<int> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
  }
};

inline int strongest_port(const CVector& g) {
  int best = 0;
  double best_mag = -1.0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double m = std::abs(g[k]);
    if (m > best_mag) {
      best_mag = m;
      best = static_cast<int>(k);
    }
  }
  return best;
}

/// {k : |g_k| >= rho max|g|}, sorted.
inline std::vector<int> shortlist_ports(const CVector& g, double rho) {
  if (g.size() == 0) throw DomainError("shortlist: empty channel");
  const double peak = g.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw DegenerateError("shortlist: all-zero channel");
  const double threshold = rho * peak;
  std::vector<int> out;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (std::abs(g[k]) >= threshold) out.push_back(static_cast<int>(k));
  return out;
}

/// Uniform subset of `size` elements (partial Fisher-Yates), sorted. Draws
/// nothing when no reduction is needed.
inline std::vector<int> uniform_subset(std::vector<int> pool, int size, Rng& rng) {
  const auto n = static_cast<int>(pool.size());
  if (size >= n) return pool;
  for (int i = 0; i < size; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Each chain is an independent uniform subset of the shortlist of size
/// min(n_max, |shortlist|); chains may overlap.
inline std::vector<std::vector<int>> assign_chains(const std::vector<int>& shortlist, int n_rf, int n_max, Rng& rng) {
  if (shortlist.empty()) throw DomainError("assign_chains: empty shortlist");
  if (n_rf < 1 || n_max < 1) throw DomainError("assign_chains: n_rf and n_max must be >= 1");
  std::vector<std::vector<int>> chains;
  chains.reserve(n_rf);
  for (int i = 0; i < n_rf; ++i) chains.push_back(uniform_subset(shortlist, n_max, rng));
  return chains;
}

/// Unit-modulus co-phasing weight; a zero coefficient gets weight 1.
inline cplx unit_phase(cplx g) {
  const double m = std::abs(g);
  return m > 0.0 ? g / m : cplx(1.0, 0.0);
}

inline PortPlan puma_weights(const CVector& g, std::vector<std::vector<int>> chains) {
  PortPlan plan;
  plan.weights = CMatrix::Zero(g.size(), static_cast<Eigen::Index>(chains.size()));
  for (std::size_t i = 0; i < chains.size(); ++i)
    for (int k : chains[i]) {
      if (k < 0 || k >= g.size()) throw DomainError("puma_weights: port index out of range");
      plan.weights(k, static_cast<Eigen::Index>(i)) = unit_phase(g[k]);
    }
  plan.chains = std::move(chains);
  return plan;
}

/// In-phase (chain 1) and quadrature (chain 2) activation after rotating by
/// the strongest port's phase; weights are 1.
inline PortPlan cuma_weights(const CVector& g, const ReceiverConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.scheme != Scheme::cuma) throw DomainError("cuma_weights: scheme must be cuma");
  const auto shortlist = shortlist_ports(g, cfg.rho);
  const int peak = strongest_port(g);
  const cplx rotation = std::conj(unit_phase(g[peak]));
  const int cap = cfg.cap(static_cast<int>(g.size()));

  PortPlan plan;
  plan.weights = CMatrix::Zero(g.size(), cfg.n_rf);
  for (int i = 0; i < cfg.n_rf; ++i) {
    std::vector<int> chain;
    for (int k : shortlist) {
      // the reference port rotates onto the real axis exactly
      const cplx r = k == peak ? cplx(std::abs(g[k]), 0.0) : g[k] * rotation;
      if ((i == 0 ? r.real() : r.imag()) > 0.0) chain.push_back(k);
    }
    chain = uniform_subset(std::move(chain), cap, rng);
    for (int k : chain) plan.weights(k, i) = 1.0;
    plan.chains.push_back(std::move(chain));
  }
  return plan;
}

/// Single port maximising the per-port SINR; lowest index wins ties.
inline PortPlan sfama_select(const ChannelRealization& ch, double sigma_s2, double sigma_eta2) {
  const Eigen::Index n = ch.n_ports();
  int best = 0;
  double best_sinr = -1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double interference = 0.0;
    for (const auto& gi : ch.interferers) interference += std::norm(gi[k]);
    const double num = sigma_s2 * std::norm(ch.desired[k]);
    const double den = sigma_s2 * interference + sigma_eta2;
    const double sinr = den > 0.0 ? num / den : (num > 0.0 ? HUGE_VAL : 0.0);
    if (sinr > best_sinr) {
      best_sinr = sinr;
      best = static_cast<int>(k);
    }
  }
  PortPlan plan;
  plan.chains = {{best}};
  plan.weights = CMatrix::Zero(n, 1);
  plan.weights(best, 0) = 1.0;
  return plan;
}

/// Port plan for one realization. Randomness is drawn only for CUMA/PUMA
/// subsampling when the cap binds.
inline PortPlan build_plan(const ReceiverConfig& cfg, const ChannelRealization& ch, double sigma_s2, double sigma_eta2,
                           Rng& rng) {
  switch (cfg.scheme) {
    case Scheme::puma: {
      const auto shortlist = shortlist_ports(ch.desired, cfg.rho);
      return puma_weights(ch.desired,
                          assign_chains(shortlist, cfg.n_rf, cfg.cap(static_cast<int>(ch.n_ports())), rng));
    }
    case Scheme::cuma: return cuma_weights(ch.desired, cfg, rng);
    case Scheme::sfama: return sfama_select(ch, sigma_s2, sigma_eta2);
  }
  throw DomainError("unknown scheme");
}

inline CVector select_ports(const CVector& r, const std::vector<int>& activated) {
  CVector out = CVector::Zero(r.size());
  for (int k : activated) out[k] = r[k];
  return out;
}

/// y = W^H Gamma S_K r with r = sum_u g_u s_u + eta; symbols[0] is the
/// desired stream.
inline CVector aggregate(const PortPlan& plan, const CouplingMatrix& gamma, const ChannelRealization& ch,
                         const CVector& symbols, const CVector& noise) {
  const Eigen::Index n = ch.n_ports();
  if (symbols.size() != ch.n_users()) throw DomainError("aggregate: one symbol per user required");
  if (noise.size() != n || plan.weights.rows() != n || gamma.size() != n)
    throw DomainError("aggregate: dimension mismatch");
  CVector r = noise + ch.desired * symbols[0];
  for (std::size_t u = 0; u < ch.interferers.size(); ++u) r += ch.interferers[u] * symbols[u + 1];
  return plan.weights.adjoint() * gamma.apply(select_ports(r, plan.activated()));
}

struct Combined {
  cplx estimate;   // v^H y
  double gain;     // v^H h = ||h||
  CVector v;
};

/// Matched digital combiner v = h/||h|| on the effective channel
/// h = W^H Gamma g.
inline Combined digital_combine(const PortPlan& plan, const CouplingMatrix& gamma, const CVector& g_des,
                                const CVector& y) {
  const CVector h = plan.weights.adjoint() * gamma.apply(select_ports(g_des, plan.activated()));
  const double norm = h.norm();
  if (!(norm > 0.0)) throw DegenerateError("digital_combine: zero effective channel");
  if (y.size() != h.size()) throw DomainError("digital_combine: y has wrong length");
  Combined out;
  out.v = h / norm;
  out.estimate = out.v.dot(y);  // dot conjugates the first argument
  out.gain = norm;
  return out;
}

struct LinkSample {
  cplx effective_gain;
  double interference_power = 0.0;
  double noise_power = 0.0;
  double sinr = 0.0;
};

/// Post-combining signal, interference and noise powers for a plan.
inline LinkSample link_sample(const PortPlan& plan, const CouplingMatrix& gamma, const ChannelRealization& ch,
                              double sigma_s2, double sigma_eta2) {
  const auto act = plan.activated();
  const CVector h = plan.weights.adjoint() * gamma.apply(select_ports(ch.desired, act));
  const double norm = h.norm();
  if (!(norm > 0.0)) throw DegenerateError("link_sample: zero effective channel");
  const CVector v = h / norm;
  LinkSample out;
  out.effective_gain = v.dot(h);
  for (const auto& gi : ch.interferers) {
    const cplx s = v.dot(plan.weights.adjoint() * gamma.apply(select_ports(gi, act)));
    out.interference_power += sigma_s2 * std::norm(s);
  }
  // Noise filter c^H = v^H W^H Gamma S, so the post-combining noise power is
  // sigma_eta2 ||c||^2. Gamma acts block-wise, hence c = S Gamma^H W v.
  const CVector wv = plan.weights * v;
  CVector c = wv;
  if (!gamma.is_identity()) {
    const auto& ports = gamma.ports();
    CVector sub(static_cast<Eigen::Index>(ports.size()));
    for (std::size_t i = 0; i < ports.size(); ++i) sub[i] = wv[ports[i]];
    const CVector mixed = gamma.block().adjoint() * sub;
    for (std::size_t i = 0; i < ports.size(); ++i) c[ports[i]] = mixed[i];
  }
  out.noise_power = sigma_eta2 * select_ports(c, act).squaredNorm();
  const double den = out.interference_power + out.noise_power;
  out.sinr = den > 0.0 ? std::norm(out.effective_gain) * sigma_s2 / den : HUGE_VAL;
  return out;
}

struct SirSample {
  double x = 0.0;  // (sum_k |g_k|)^2
  double y = 0.0;  // sum_u |S_u|^2
  double sir() const { return x / y; }
  /// Z = X / (Y / sigma2_sq).
  double z(double sigma2_sq) const { return x * sigma2_sq / y; }
};

/// X and Y for a single chain with every port co-phased and no coupling.
inline SirSample instantaneous_sir(const ChannelRealization& ch) {
  SirSample out;
  const Eigen::Index n = ch.n_ports();
  CVector phase(n);
  double amp = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    amp += std::abs(ch.desired[k]);
    phase[k] = unit_phase(ch.desired[k]);
  }
  out.x = amp * amp;
  for (const auto& gi : ch.interferers) out.y += std::norm(phase.dot(gi));
  if (!ch.interferers.empty() && !(out.y > 0.0)) throw DegenerateError("instantaneous_sir: zero interference");
  return out;
}

}  // namespace puma
