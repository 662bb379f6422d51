#pragma once
// Real special functions used by the SIR analysis and the dipole coupling
// model. Everything here is a pure function of its arguments.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "puma/error.hpp"

namespace puma::specfun {

/// Series truncation control. A series stops once |term| < rel_tol * |sum|
/// (or |term| < abs_tol) and the term ratio has dropped below one.
struct FnAccuracy {
  double abs_tol = 1e-300;
  double rel_tol = 1e-16;
  std::int64_t max_terms = 1'000'000;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_terms < 1)
      throw DomainError("FnAccuracy requires abs_tol > 0, rel_tol > 0, max_terms >= 1");
  }
};

/// Signed logarithmic representation of a real number: value = sign * exp(log_abs).
struct LogValue {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

namespace detail {

inline void require_finite(double x, const char* fn) {
  if (!std::isfinite(x)) throw DomainError(std::string(fn) + ": non-finite argument");
}

inline bool is_nonpositive_integer(double c) {
  return c <= 0.0 && c == std::floor(c);
}

}  // namespace detail

/// sin(x)/x with the removable singularity at 0.
inline double sph_bessel_j0(double x) {
  detail::require_finite(x, "sph_bessel_j0");
  const double ax = std::fabs(x);
  if (ax < 1e-4) {
    const double x2 = ax * ax;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
  }
  return std::sin(ax) / ax;
}

/// log Gamma(x) for x > 0.
inline double ln_gamma(double x) {
  detail::require_finite(x, "ln_gamma");
  if (!(x > 0.0)) throw DomainError("ln_gamma: argument must be > 0");
  return std::lgamma(x);
}

/// Digamma function. Reflection handles negative non-integer arguments.
inline double digamma(double x) {
  detail::require_finite(x, "digamma");
  if (detail::is_nonpositive_integer(x)) throw DomainError("digamma: pole at non-positive integer");
  if (x < 0.0) {
    return digamma(1.0 - x) - std::numbers::pi / std::tan(std::numbers::pi * x);
  }
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double tail =
      inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return acc + std::log(x) - 0.5 / x - tail;
}

namespace detail {

// Plain power series of 2F1 for 0 <= x < 1.
inline double gauss_2f1_series(double a, double b, double c, double x, const FnAccuracy& acc) {
  double term = 1.0;
  double sum = 1.0;
  for (std::int64_t k = 0; k < acc.max_terms; ++k) {
    const double kk = static_cast<double>(k);
    const double ratio = (a + kk) * (b + kk) / ((c + kk) * (kk + 1.0)) * x;
    term *= ratio;
    sum += term;
    if (term == 0.0) return sum;
    if (std::fabs(ratio) < 1.0 &&
        (std::fabs(term) < acc.rel_tol * std::fabs(sum) || std::fabs(term) < acc.abs_tol))
      return sum;
  }
  throw AccuracyError("gauss_2f1: series did not converge within " + std::to_string(acc.max_terms) +
                      " terms at x=" + std::to_string(x));
}

// Expansion about x = 1 for c = a + b + m with integer m >= 1 (logarithmic case).
inline double gauss_2f1_near_one(double a, double b, int m, double x, const FnAccuracy& acc) {
  const double c = a + b + m;
  const double w = 1.0 - x;  // small
  const double zm1 = -w;
  double finite = 0.0;
  {
    double poch = 1.0;  // (a)_k (b)_k / k!
    double pw = 1.0;
    for (int k = 0; k < m; ++k) {
      finite += poch * std::tgamma(static_cast<double>(m - k)) * pw;
      poch *= (a + k) * (b + k) / (k + 1.0);
      pw *= zm1;
    }
    finite /= std::tgamma(a + m) * std::tgamma(b + m);
  }
  const double log_w = std::log(w);
  double series = 0.0;
  double coef = 1.0 / std::tgamma(static_cast<double>(m + 1));  // (a+m)_k (b+m)_k / (k! (k+m)!)
  double pw = 1.0;
  for (std::int64_t k = 0; k < acc.max_terms; ++k) {
    const double kk = static_cast<double>(k);
    const double bracket =
        log_w - digamma(kk + 1.0) - digamma(kk + m + 1.0) + digamma(a + kk + m) + digamma(b + kk + m);
    const double term = coef * pw * bracket;
    series += term;
    if (k > 0 && std::fabs(term) < acc.rel_tol * std::fabs(series)) break;
    if (k + 1 == acc.max_terms) throw AccuracyError("gauss_2f1: near-one expansion did not converge");
    coef *= (a + m + kk) * (b + m + kk) / ((kk + 1.0) * (kk + m + 1.0));
    pw *= w;
  }
  const double regularized = finite - std::pow(zm1, m) / (std::tgamma(a) * std::tgamma(b)) * series;
  return std::tgamma(c) * regularized;
}

}  // namespace detail

/// Gauss hypergeometric 2F1(a,b;c;x) on x in [0,1].
///
/// x < 0.999 uses the power series. x = 1 uses the Gauss summation value,
/// which needs c - a - b > 0. On [0.999, 1) the logarithmic expansion about
/// x = 1 is used when c - a - b is a positive integer (both parameter sets
/// used by the SIR moments fall in this case); otherwise the value is
/// interpolated linearly between the series at 0.999 and the Gauss value.
inline double gauss_2f1(double a, double b, double c, double x, const FnAccuracy& acc = {}) {
  acc.validate();
  for (double v : {a, b, c, x}) detail::require_finite(v, "gauss_2f1");
  if (detail::is_nonpositive_integer(c)) throw DomainError("gauss_2f1: c must not be a non-positive integer");
  if (x < 0.0 || x > 1.0) throw DomainError("gauss_2f1: x must lie in [0,1]");
  if (x < 0.999) return detail::gauss_2f1_series(a, b, c, x, acc);

  const double excess = c - a - b;
  if (!(excess > 0.0)) throw DomainError("gauss_2f1: x = 1 requires c - a - b > 0");
  const auto gauss_value = [&] {
    if (c < 150.0 && excess < 150.0 && c > 0 && c - a > 0 && c - b > 0)
      return std::tgamma(c) * std::tgamma(excess) / (std::tgamma(c - a) * std::tgamma(c - b));
    if (c > 0 && c - a > 0 && c - b > 0)
      return std::exp(ln_gamma(c) + ln_gamma(excess) - ln_gamma(c - a) - ln_gamma(c - b));
    return std::tgamma(c) * std::tgamma(excess) / (std::tgamma(c - a) * std::tgamma(c - b));
  };
  if (x == 1.0) return gauss_value();
  const double m = std::round(excess);
  if (std::fabs(excess - m) < 1e-14 && m >= 1.0 && m <= 64.0 && !detail::is_nonpositive_integer(a) &&
      !detail::is_nonpositive_integer(b)) {
    return detail::gauss_2f1_near_one(a, b, static_cast<int>(m), x, acc);
  }
  const double lo = detail::gauss_2f1_series(a, b, c, 0.999, acc);
  const double hi = gauss_value();
  return lo + (hi - lo) * (x - 0.999) / 0.001;
}

/// log|1F1(a;b;z)| and its sign, summed with a running scale so that the
/// partial sums never overflow. Used directly by the Z density where the
/// value itself is far outside double range.
inline LogValue log_kummer_1f1(double a, double b, double z, const FnAccuracy& acc = {}) {
  acc.validate();
  for (double v : {a, b, z}) detail::require_finite(v, "kummer_1f1");
  if (detail::is_nonpositive_integer(b)) throw DomainError("kummer_1f1: b must not be a non-positive integer");
  if (z < 0.0) throw DomainError("kummer_1f1: z must be >= 0");
  if (z == 0.0 || a == 0.0) return {0.0, 1};

  // Terms are tracked as sign * exp(log_term); the sum is kept as
  // scaled_sum * exp(scale) with scale bumped whenever a term outgrows it.
  double log_term = 0.0;
  int term_sign = 1;
  double scale = 0.0;
  double scaled_sum = 1.0;
  const double log_z = std::log(z);
  for (std::int64_t k = 0; k < acc.max_terms; ++k) {
    const double kk = static_cast<double>(k);
    const double num = a + kk;
    if (num == 0.0) {
      // Polynomial case: the series terminates.
      break;
    }
    const double ratio_abs = std::fabs(num / ((b + kk) * (kk + 1.0))) * z;
    if ((num < 0) != (b + kk < 0)) term_sign = -term_sign;
    log_term += std::log(std::fabs(num)) - std::log(std::fabs(b + kk)) - std::log(kk + 1.0) + log_z;
    if (log_term > scale) {
      scaled_sum *= std::exp(scale - log_term);
      scale = log_term;
    }
    const double scaled_term = term_sign * std::exp(log_term - scale);
    scaled_sum += scaled_term;
    if (ratio_abs < 1.0 && std::fabs(scaled_term) < acc.rel_tol * std::fabs(scaled_sum)) {
      if (scaled_sum == 0.0) return {};
      return {scale + std::log(std::fabs(scaled_sum)), scaled_sum > 0 ? 1 : -1};
    }
    if (k + 1 == acc.max_terms) {
      throw AccuracyError("kummer_1f1: no convergence after " + std::to_string(acc.max_terms) +
                          " terms (a=" + std::to_string(a) + ", b=" + std::to_string(b) +
                          ", z=" + std::to_string(z) + ")");
    }
  }
  if (scaled_sum == 0.0) return {};
  return {scale + std::log(std::fabs(scaled_sum)), scaled_sum > 0 ? 1 : -1};
}

/// Confluent hypergeometric 1F1(a;b;z), z >= 0. The series is summed in
/// log space internally; an AccuracyError is raised if the value itself
/// cannot be represented as a double.
inline double kummer_1f1(double a, double b, double z, const FnAccuracy& acc = {}) {
  const LogValue lv = log_kummer_1f1(a, b, z, acc);
  if (lv.log_abs > 709.0) {
    throw AccuracyError("kummer_1f1: result overflows double (log|value| = " + std::to_string(lv.log_abs) +
                        "); use log_kummer_1f1");
  }
  return lv.value();
}

/// log of the Whittaker function M_{kappa,mu}(z) for z > 0.
inline LogValue log_whittaker_m(double kappa, double mu, double z, const FnAccuracy& acc = {}) {
  if (detail::is_nonpositive_integer(2.0 * mu + 1.0))
    throw DomainError("whittaker_m: 2*mu + 1 must not be a non-positive integer");
  if (!(z > 0.0)) throw DomainError("whittaker_m: log form requires z > 0");
  LogValue f = log_kummer_1f1(mu - kappa + 0.5, 2.0 * mu + 1.0, z, acc);
  f.log_abs += -0.5 * z + (mu + 0.5) * std::log(z);
  return f;
}

/// M_{kappa,mu}(z) = exp(-z/2) z^(mu+1/2) 1F1(mu-kappa+1/2; 2mu+1; z).
inline double whittaker_m(double kappa, double mu, double z, const FnAccuracy& acc = {}) {
  detail::require_finite(z, "whittaker_m");
  if (z < 0.0) throw DomainError("whittaker_m: z must be >= 0");
  if (detail::is_nonpositive_integer(2.0 * mu + 1.0))
    throw DomainError("whittaker_m: 2*mu + 1 must not be a non-positive integer");
  if (z == 0.0) {
    const double p = mu + 0.5;
    if (p > 0.0) return 0.0;
    if (p == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  const LogValue lv = log_whittaker_m(kappa, mu, z, acc);
  if (lv.log_abs > 709.0) throw AccuracyError("whittaker_m: result overflows double");
  return lv.value();
}

/// log I_{-1/2}(u) for u > 0.
inline double log_bessel_i_neg_half(double u) {
  detail::require_finite(u, "bessel_i_neg_half");
  if (!(u > 0.0)) throw DomainError("bessel_i_neg_half: u must be > 0");
  // log cosh(u) = u + log1p(exp(-2u)) - log 2
  return 0.5 * std::log(2.0 / (std::numbers::pi * u)) + u + std::log1p(std::exp(-2.0 * u)) -
         std::numbers::ln2;
}

/// I_{-1/2}(u) = sqrt(2/(pi u)) cosh(u).
inline double bessel_i_neg_half(double u) {
  detail::require_finite(u, "bessel_i_neg_half");
  if (!(u > 0.0)) throw DomainError("bessel_i_neg_half: u must be > 0");
  if (u < 700.0) return std::sqrt(2.0 / (std::numbers::pi * u)) * std::cosh(u);
  return std::exp(log_bessel_i_neg_half(u));
}

/// Gaussian tail probability Q(x) = erfc(x/sqrt 2)/2.
inline double q_function(double x) {
  if (std::isnan(x)) throw DomainError("q_function: NaN argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

struct SiCi {
  double si;
  double ci;
};

/// Sine and cosine integrals for x > 0. Power series below x = 2, complex
/// continued fraction for E1(ix) above.
inline SiCi sine_cosine_integrals(double x) {
  detail::require_finite(x, "sine_cosine_integrals");
  if (!(x > 0.0)) throw DomainError("sine_cosine_integrals: x must be > 0");
  constexpr double euler_gamma = 0.57721566490153286061;
  constexpr double eps = 1e-16;
  if (x <= 2.0) {
    // Si = sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    // Ci = gamma + ln x + sum_{k>=1} (-1)^k x^(2k) / (2k (2k)!)
    double si = 0.0;
    double ci = 0.0;
    double power = x;  // x^n / n!
    for (int n = 1; n < 200 && power > eps * 1e-3; ++n) {
      const double sign = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
      if (n % 2 == 1) {
        si += sign * power / n;
      } else {
        ci -= sign * power / n;
      }
      power *= x / (n + 1);
    }
    return {si, euler_gamma + std::log(x) + ci};
  }
  // Modified Lentz evaluation of E1(ix) = -Ci(x) + i (Si(x) - pi/2).
  using cd = std::complex<double>;
  constexpr double tiny = 1e-300;
  cd b(1.0, x);
  cd c(1.0 / tiny, 0.0);
  cd d = 1.0 / b;
  cd h = d;
  for (int i = 2; i < 100000; ++i) {
    const double a = -static_cast<double>((i - 1) * (i - 1));
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const cd del = c * d;
    h *= del;
    if (std::fabs(del.real() - 1.0) + std::fabs(del.imag()) < eps) break;
  }
  h *= cd(std::cos(x), -std::sin(x));
  return {std::numbers::pi / 2.0 + h.imag(), -h.real()};
}

}  // namespace puma::specfun
