#pragma once
// Globally adaptive 21-point Gauss-Kronrod quadrature with interval
// bisection, plus maps for semi-infinite ranges.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "puma/error.hpp"

namespace puma::quad {

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_subdivisions = 4000;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 11> kronrod_nodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

inline constexpr std::array<double, 11> kronrod_weights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452140, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// 10-point Gauss weights, attached to kronrod_nodes[1], [3], ..., [9].
inline constexpr std::array<double, 5> gauss_weights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f_center = f(center);
  double kronrod = f_center * kronrod_weights[10];
  double gauss = 0.0;
  std::array<double, 21> fv{};
  fv[20] = f_center;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kronrod_nodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv[2 * j] = f1;
    fv[2 * j + 1] = f2;
    kronrod += kronrod_weights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += gauss_weights[j / 2] * (f1 + f2);
  }
  // QUADPACK-style error scaling.
  const double mean = 0.5 * kronrod;
  double asc = kronrod_weights[10] * std::fabs(f_center - mean);
  for (int j = 0; j < 10; ++j)
    asc += kronrod_weights[j] * (std::fabs(fv[2 * j] - mean) + std::fabs(fv[2 * j + 1] - mean));
  asc *= std::fabs(half);
  const double value = kronrod * half;
  double error = std::fabs((kronrod - gauss) * half);
  if (asc != 0.0 && error != 0.0) error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
  return {a, b, value, error};
}

}  // namespace detail

/// Integrates f over [a, b]. The result reports convergence instead of
/// throwing; pair with value_or_throw for the strict variant.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gauss_kronrod_21(f, a, b));
  out.evaluations = 21;
  double total = heap.top().value;
  double error = heap.top().error;
  int subdivisions = 0;
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::fabs(total))) {
    if (subdivisions >= opt.max_subdivisions) break;
    const detail::Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    // Stop refining once the panel cannot be split in floating point.
    if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) break;
    heap.pop();
    const detail::Panel left = detail::gauss_kronrod_21(f, worst.a, mid);
    const detail::Panel right = detail::gauss_kronrod_21(f, mid, worst.b);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.abs_error = error;
  out.converged = error <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(total)) ||
                  error <= 50.0 * std::numeric_limits<double>::epsilon() * std::fabs(total);
  return out;
}

/// Integrates f over [a, inf) through x = a + s/(1-s), s in [0,1).
template <class F>
QuadResult integrate_to_infinity(F&& f, double a, const QuadOptions& opt = {}) {
  auto mapped = [&](double s) {
    const double one_minus = 1.0 - s;
    const double x = a + s / one_minus;
    const double jac = 1.0 / (one_minus * one_minus);
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * jac;
  };
  return integrate(mapped, 0.0, 1.0, opt);
}

/// Integrates a nonnegative-support function over [0, inf) split at the
/// given breakpoints. The first panel uses x = t^2 to absorb integrable
/// 1/sqrt(x) behaviour at the origin; the last panel [b_max, inf) uses a
/// scale-adapted rational map so algebraic tails are handled.
template <class F>
QuadResult integrate_half_line(F&& f, std::span<const double> breakpoints, const QuadOptions& opt = {}) {
  std::vector<double> pts;
  for (double p : breakpoints)
    if (p > 0.0 && std::isfinite(p)) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) pts.push_back(1.0);

  QuadOptions piece = opt;
  piece.abs_tol = opt.abs_tol / static_cast<double>(pts.size() + 1);
  QuadResult out;
  out.converged = true;
  auto accumulate = [&](const QuadResult& r) {
    out.value += r.value;
    out.abs_error += r.abs_error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  };

  const double first = pts.front();
  accumulate(integrate([&](double t) { return 2.0 * t * f(t * t); }, 0.0, std::sqrt(first), piece));
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) accumulate(integrate(f, pts[i], pts[i + 1], piece));
  const double last = pts.back();
  // x = last / (1 - s)^2 keeps x^(-3/2) tails bounded at s = 1
  accumulate(integrate(
      [&](double s) {
        const double one_minus = 1.0 - s;
        const double x = last / (one_minus * one_minus);
        const double v = f(x);
        return v == 0.0 ? 0.0 : v * 2.0 * last / (one_minus * one_minus * one_minus);
      },
      0.0, 1.0, piece));
  // Pieces converge individually against their own magnitudes; judge the sum
  // against the global tolerance too.
  if (!out.converged && out.abs_error <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(out.value)))
    out.converged = true;
  return out;
}

inline double value_or_throw(const QuadResult& r, const char* what) {
  if (!r.converged || !std::isfinite(r.value)) {
    throw AccuracyError(std::string(what) + ": quadrature did not converge (estimate " +
                        std::to_string(r.value) + ", error " + std::to_string(r.abs_error) + ")");
  }
  return r.value;
}

}  // namespace puma::quad
