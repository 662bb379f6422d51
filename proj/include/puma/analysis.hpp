#pragma once
// Closed-form SIR statistics of the single-chain, fully activated PUMA
// receiver under rich scattering, with quadrature cross-checks and the
// BER / rate functionals built on top of them.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "puma/channel.hpp"
#include "puma/error.hpp"
#include "puma/modulation.hpp"
#include "puma/quadrature.hpp"
#include "puma/specfun.hpp"

namespace puma {

struct SirMoments {
  double mu1 = 0.0;        // E[sqrt X]
  double sigma1_sq = 0.0;  // var[sqrt X]
  double sigma2_sq = 0.0;  // E|S_u|^2
  int n_ports = 0;
  double sigma_g = 1.0;
};

/// Which sigma2^2 expression to use. `printed` drops the rho^2 factor in
/// front of 2F1(1/2,1/2;2;rho^2); `derived` keeps it.
enum class Sigma2Form { derived, printed };

inline SirMoments compute_moments(const Eigen::MatrixXd& sigma, double sigma_g,
                                  Sigma2Form form = Sigma2Form::derived) {
  const auto n = static_cast<int>(sigma.rows());
  if (n < 1 || sigma.cols() != n) throw DomainError("compute_moments: covariance must be square");
  if (!(sigma_g > 0.0)) throw DomainError("compute_moments: sigma_g must be > 0");
  const double s2 = sigma_g * sigma_g;
  const double pi = std::numbers::pi;
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const double r2 = std::min(1.0, sigma(k, l) * sigma(k, l));
      sum1 += specfun::gauss_2f1(-0.5, -0.5, 1.0, r2) - 1.0;
      const double f = specfun::gauss_2f1(0.5, 0.5, 2.0, r2);
      sum2 += form == Sigma2Form::derived ? r2 * f : f;
    }
  SirMoments m;
  m.n_ports = n;
  m.sigma_g = sigma_g;
  m.mu1 = n * std::sqrt(pi) * sigma_g / 2.0;
  m.sigma1_sq = n * (1.0 - pi / 4.0) * s2 + pi * s2 / 2.0 * sum1;
  m.sigma2_sq = n * s2 + pi * s2 / 2.0 * sum2;
  return m;
}

inline SirMoments compute_moments(const RichScatteringModel& model, Sigma2Form form = Sigma2Form::derived) {
  model.validate();
  return compute_moments(spatial_covariance(model), model.sigma_g, form);
}

// ---------------------------------------------------------------------------
// Densities

inline double log_pdf_x(double x, const SirMoments& m) {
  if (x < 0.0) return -HUGE_VAL;
  if (x == 0.0) return HUGE_VAL;
  const double s2 = m.sigma1_sq;
  const double u = m.mu1 * std::sqrt(x) / s2;
  return -std::log(2.0 * s2) - 0.25 * std::log(x) + 0.5 * std::log(m.mu1) - (x + m.mu1 * m.mu1) / (2.0 * s2) +
         specfun::log_bessel_i_neg_half(u);
}

/// Density of X = (sqrt X)^2 with sqrt X ~ N(mu1, sigma1^2). Diverges like
/// x^(-1/2) at the origin, where +inf is returned.
inline double pdf_x(double x, const SirMoments& m) {
  if (x < 0.0) return 0.0;
  return std::exp(log_pdf_x(x, m));
}

inline void require_users(int n_users, const char* fn) {
  if (n_users < 2) throw DomainError(std::string(fn) + ": needs n_users >= 2");
}

inline double log_pdf_y_tilde(double y, int n_users) {
  require_users(n_users, "pdf_y_tilde");
  if (y < 0.0) return -HUGE_VAL;
  const double shape = n_users - 1.0;
  if (y == 0.0) return n_users == 2 ? 0.0 : -HUGE_VAL;
  return (shape - 1.0) * std::log(y) - y - specfun::ln_gamma(shape);
}

/// Gamma(U-1, 1) density of the normalised interference.
inline double pdf_y_tilde(double y, int n_users) { return std::exp(log_pdf_y_tilde(y, n_users)); }

inline double log_pdf_z(double z, const SirMoments& m, int n_users) {
  require_users(n_users, "pdf_z");
  if (z < 0.0) return -HUGE_VAL;
  if (z == 0.0) return HUGE_VAL;
  const double u = n_users;
  const double mu = m.mu1;
  const double s2 = m.sigma1_sq;
  const double t = mu * mu * z / (2.0 * s2 * (2.0 * s2 + z));
  const double prefactor = specfun::ln_gamma(u - 0.5) - specfun::ln_gamma(u - 1.0) - specfun::ln_gamma(0.5);
  const double expo = -mu * mu * (4.0 * s2 + z) / (4.0 * s2 * (2.0 * s2 + z));
  const auto whittaker = specfun::log_whittaker_m(-u + 0.75, -0.25, t);
  if (whittaker.sign <= 0) throw AccuracyError("pdf_z: Whittaker factor is not positive at z=" + std::to_string(z));
  const double out = prefactor - 0.75 * std::log(z) - 0.5 * std::log(mu) + expo +
                     (-u + 0.75) * std::log1p(z / (2.0 * s2)) + whittaker.log_abs;
  if (!std::isfinite(out))
    throw AccuracyError("pdf_z: non-finite log density at z=" + std::to_string(z) + ", U=" + std::to_string(n_users));
  return out;
}

/// Closed-form density of Z = X / Y~ through the Whittaker M function.
/// Like pdf_x it diverges as z^(-1/2) at the origin.
inline double pdf_z(double z, const SirMoments& m, int n_users) {
  if (z < 0.0) return 0.0;
  return std::exp(log_pdf_z(z, m, n_users));
}

/// The same expression with the exponent numerator (4 sigma1^2 + 4) in
/// place of (4 sigma1^2 + z). Kept only to show that it fails the
/// quadrature cross-check.
inline double pdf_z_misprinted(double z, const SirMoments& m, int n_users) {
  if (z <= 0.0) return z == 0.0 ? HUGE_VAL : 0.0;
  const double s2 = m.sigma1_sq;
  const double mu = m.mu1;
  const double wrong = -mu * mu * (4.0 * s2 + 4.0) / (4.0 * s2 * (2.0 * s2 + z));
  const double right = -mu * mu * (4.0 * s2 + z) / (4.0 * s2 * (2.0 * s2 + z));
  return std::exp(log_pdf_z(z, m, n_users) - right + wrong);
}

/// Points that split [0, inf) around the bulk of f_Z.
inline std::vector<double> z_breakpoints(const SirMoments& m, int n_users) {
  const double centre = m.mu1 * m.mu1 / std::max(1.0, n_users - 2.0);
  const double spread =
      std::min(0.9, std::max(1.0 / std::sqrt(n_users - 1.0), 2.0 * std::sqrt(m.sigma1_sq) / m.mu1));
  std::vector<double> pts;
  for (double f : {1e-4, 1e-2, 0.1, 0.3}) pts.push_back(centre * f);
  for (int k = -3; k <= 3; ++k) pts.push_back(centre * std::exp(k * spread));
  for (double f : {10.0, 100.0}) pts.push_back(centre * f);
  return pts;
}

/// f_Z(z) = int_0^inf y f_X(z y) f_Y~(y) dy by adaptive quadrature; an
/// independent route to the closed form above.
inline double pdf_z_oracle(double z, const SirMoments& m, int n_users, double rel_tol = 1e-11) {
  require_users(n_users, "pdf_z_oracle");
  if (z < 0.0) return 0.0;
  if (z == 0.0) return HUGE_VAL;
  auto integrand = [&](double y) {
    if (!(y > 0.0) || !std::isfinite(y)) return 0.0;
    const double v = std::log(y) + log_pdf_x(z * y, m) + log_pdf_y_tilde(y, n_users);
    return std::exp(v);
  };
  const double shape = n_users - 1.0;
  const double peak = m.mu1 * m.mu1 / z;                         // where f_X(z y) peaks
  const double width = 2.0 * m.mu1 * std::sqrt(m.sigma1_sq) / z;  // its spread in y
  std::vector<double> pts;
  for (int k = -8; k <= 8; k += 2) pts.push_back(peak + k * width);
  const double gw = std::sqrt(shape);
  for (int k = -4; k <= 10; k += 2) pts.push_back(std::max(shape - 1.0, 0.0) + k * gw);
  quad::QuadOptions opt;
  opt.rel_tol = rel_tol;
  opt.max_subdivisions = 2000;
  return quad::value_or_throw(quad::integrate_half_line(integrand, pts, opt), "pdf_z_oracle");
}

/// Expectation of phi(Z) under f_Z.
template <class F>
double expect_z(F&& phi, const SirMoments& m, int n_users, double rel_tol, const char* what) {
  require_users(n_users, what);
  auto integrand = [&](double z) {
    if (!(z > 0.0) || !std::isfinite(z)) return 0.0;
    const double w = phi(z);
    return w == 0.0 ? 0.0 : w * pdf_z(z, m, n_users);
  };
  quad::QuadOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = 1e-300;
  const auto pts = z_breakpoints(m, n_users);
  return quad::value_or_throw(quad::integrate_half_line(integrand, pts, opt), what);
}

/// P(Z <= z) by quadrature of the closed-form density in s = sqrt z.
inline double cdf_z(double z, const SirMoments& m, int n_users) {
  require_users(n_users, "cdf_z");
  if (z <= 0.0) return 0.0;
  if (!std::isfinite(z)) return 1.0;
  auto integrand = [&](double s) {
    if (!(s > 0.0)) {
      // 2 s f(s^2) -> 2 lim sqrt(z) f(z) as s -> 0; evaluate just inside.
      s = 1e-300;
    }
    return 2.0 * s * pdf_z(s * s, m, n_users);
  };
  const double top = std::sqrt(z);
  std::vector<double> cuts{0.0};
  for (double p : z_breakpoints(m, n_users))
    if (p < z) cuts.push_back(std::sqrt(p));
  cuts.push_back(top);
  quad::QuadOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14 / static_cast<double>(cuts.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += quad::value_or_throw(quad::integrate(integrand, cuts[i], cuts[i + 1], opt), "cdf_z");
  return std::min(1.0, total);
}

/// Piecewise cubic Hermite table of the Z CDF. Nodes are uniform in
/// u = s/(s+s0), s = sqrt z, so the whole half line is covered; node slopes
/// come from the density itself.
class TabulatedZCdf {
 public:
  TabulatedZCdf(const SirMoments& m, int n_users, int nodes = 4000) : m_(m), users_(n_users) {
    require_users(n_users, "TabulatedZCdf");
    if (nodes < 16) throw DomainError("TabulatedZCdf: need at least 16 nodes");
    s0_ = std::sqrt(m.mu1 * m.mu1 / (n_users - 1.0));
    u_.resize(nodes + 1);
    f_.resize(nodes + 1);
    d_.resize(nodes + 1);
    for (int i = 0; i <= nodes; ++i) u_[i] = static_cast<double>(i) / nodes;
    for (int i = 0; i <= nodes; ++i) d_[i] = density_u(u_[i]);
    f_[0] = 0.0;
    quad::QuadOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-16;
    auto g = [&](double u) { return density_u(u); };
    for (int i = 0; i < nodes; ++i)
      f_[i + 1] = f_[i] + quad::value_or_throw(quad::integrate(g, u_[i], u_[i + 1], opt), "TabulatedZCdf");
  }

  double operator()(double z) const {
    if (!(z > 0.0)) return 0.0;
    if (!std::isfinite(z)) return f_.back();
    const double s = std::sqrt(z);
    const double u = s / (s + s0_);
    const auto n = static_cast<int>(u_.size()) - 1;
    const int i = std::min(n - 1, static_cast<int>(u * n));
    const double h = u_[i + 1] - u_[i];
    const double t = (u - u_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * f_[i + 1] +
           (t3 - t2) * h * d_[i + 1];
  }

  /// Total mass captured by the table (should be 1).
  double total() const { return f_.back(); }

 private:
  // dF/du with z = (s0 u / (1-u))^2.
  double density_u(double u) const {
    if (u <= 0.0) {
      // 2 s f(s^2) ds/du with f ~ c/s near 0: finite limit, approximated
      // by evaluating just inside the interval.
      u = 1e-12;
    }
    if (u >= 1.0) return 0.0;
    const double one_minus = 1.0 - u;
    const double s = s0_ * u / one_minus;
    const double ds = s0_ / (one_minus * one_minus);
    const double v = 2.0 * s * pdf_z(s * s, m_, users_) * ds;
    return std::isfinite(v) ? v : 0.0;
  }

  SirMoments m_;
  int users_;
  double s0_ = 1.0;
  std::vector<double> u_, f_, d_;
};

// ---------------------------------------------------------------------------
// Error probability and rates

/// Average BER over f_Z: Q(sqrt(2z/sigma2^2)) for BPSK, the Gray square-QAM
/// approximation (4/m)(1-1/sqrt M) Q(sqrt(3z/((M-1) sigma2^2))) otherwise.
inline double avg_ber(const Modulation& mod, const SirMoments& m, int n_users) {
  mod.validate();
  double scale = 0.0;
  double factor = 1.0;
  if (mod.kind == Modulation::Kind::bpsk) {
    scale = 2.0 / m.sigma2_sq;
  } else {
    const double M = mod.order;
    scale = 3.0 / ((M - 1.0) * m.sigma2_sq);
    factor = 4.0 / mod.bits_per_symbol() * (1.0 - 1.0 / std::sqrt(M));
  }
  const double ber =
      factor * expect_z([&](double z) { return specfun::q_function(std::sqrt(scale * z)); }, m, n_users, 1e-9,
                        "avg_ber");
  return std::clamp(ber, 0.0, 1.0);
}

/// 1 - H2(pe) with 0 log 0 = 0.
inline double bsc_capacity(double pe) {
  if (!(pe >= 0.0 && pe <= 1.0)) throw DomainError("bsc_capacity: pe must lie in [0, 1]");
  auto xlog = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
  return 1.0 + xlog(pe) + xlog(1.0 - pe);
}

/// Network rate U m (1 - H2(pe)); m = 1 gives the plain binary form.
inline double bsc_rate(double pe, int n_users, int bits_per_symbol = 1) {
  if (n_users < 1) throw DomainError("bsc_rate: n_users must be >= 1");
  if (bits_per_symbol < 1) throw DomainError("bsc_rate: bits_per_symbol must be >= 1");
  return n_users * bits_per_symbol * bsc_capacity(pe);
}

/// U E[log2(1 + Z / sigma2^2)].
inline double ergodic_rate(const SirMoments& m, int n_users) {
  return n_users * expect_z([&](double z) { return std::log1p(z / m.sigma2_sq) / std::numbers::ln2; }, m, n_users, 1e-9,
                            "ergodic_rate");
}

/// eps-quantile of Z by bisection on cdf_z, to 1e-8 relative in CDF value.
inline double z_quantile(const SirMoments& m, int n_users, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("outage: epsilon must lie in (0, 1)");
  double lo = 0.0;
  double hi = std::max(1e-6, m.mu1 * m.mu1 / std::max(1.0, n_users - 1.0));
  int grow = 0;
  while (cdf_z(hi, m, n_users) < epsilon) {
    lo = hi;
    hi *= 4.0;
    if (++grow > 200) throw NumericError("outage: could not bracket the quantile");
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double c = cdf_z(mid, m, n_users);
    if (std::fabs(c - epsilon) < 1e-8 * std::min(epsilon, 1.0 - epsilon)) return mid;
    (c < epsilon ? lo : hi) = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return 0.5 * (lo + hi);
  }
  throw NumericError("outage: bisection did not converge");
}

/// SIR threshold gamma_th with P(Z <= sigma2^2 gamma_th) = eps.
inline double outage_threshold(const SirMoments& m, int n_users, double epsilon) {
  return z_quantile(m, n_users, epsilon) / m.sigma2_sq;
}

inline double outage_rate(const SirMoments& m, int n_users, double epsilon) {
  return n_users * std::log1p(outage_threshold(m, n_users, epsilon)) / std::numbers::ln2;
}

struct RateReport {
  double per_ue_ber = 0.0;
  double bsc_rate = 0.0;
  double ergodic_rate = 0.0;
  double outage_rate = 0.0;
  double epsilon = 0.1;
};

inline RateReport rate_report(const Modulation& mod, const SirMoments& m, int n_users, double epsilon = 0.1) {
  RateReport r;
  r.epsilon = epsilon;
  r.per_ue_ber = avg_ber(mod, m, n_users);
  r.bsc_rate = puma::bsc_rate(r.per_ue_ber, n_users, mod.bits_per_symbol());
  r.ergodic_rate = puma::ergodic_rate(m, n_users);
  r.outage_rate = puma::outage_rate(m, n_users, epsilon);
  return r;
}

}  // namespace puma
