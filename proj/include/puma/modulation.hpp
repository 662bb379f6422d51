#pragma once
// BPSK and Gray-mapped square QAM with unit average symbol energy.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "puma/error.hpp"

namespace puma {

struct Modulation {
  enum class Kind { bpsk, qam };
  Kind kind = Kind::qam;
  int order = 4;  // M; 2 for BPSK

  static Modulation bpsk() { return {Kind::bpsk, 2}; }
  static Modulation qam(int m) {
    Modulation out{Kind::qam, m};
    out.validate();
    return out;
  }

  void validate() const {
    if (kind == Kind::bpsk) {
      if (order != 2) throw DomainError("bpsk has order 2");
      return;
    }
    if (order != 4 && order != 16 && order != 64)
      throw DomainError("qam order must be 4, 16 or 64 (got " + std::to_string(order) + ")");
  }

  int bits_per_symbol() const { return std::countr_zero(static_cast<unsigned>(order)); }

  std::string name() const { return kind == Kind::bpsk ? "bpsk" : std::to_string(order) + "qam"; }

  bool operator==(const Modulation&) const = default;
};

namespace detail {

inline unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

inline unsigned gray_decode(unsigned g) {
  unsigned v = 0;
  for (; g; g >>= 1) v ^= g;
  return v;
}

struct PamAxis {
  int levels;
  double scale;
};

inline PamAxis qam_axis(int order) {
  const int levels = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  return {levels, std::sqrt(3.0 / (2.0 * (order - 1)))};
}

}  // namespace detail

/// Maps the bit label `index` (0..M-1) to a constellation point. For QAM the
/// high half of the label drives the in-phase axis.
inline std::complex<double> modulate(const Modulation& mod, unsigned index) {
  if (mod.kind == Modulation::Kind::bpsk) return {index ? -1.0 : 1.0, 0.0};
  const auto axis = detail::qam_axis(mod.order);
  const int half = mod.bits_per_symbol() / 2;
  const unsigned mask = (1u << half) - 1u;
  const auto level = [&](unsigned bits) {
    const int l = static_cast<int>(detail::gray_decode(bits));
    return (2.0 * l - (axis.levels - 1)) * axis.scale;
  };
  return {level((index >> half) & mask), level(index & mask)};
}

/// Nearest-point hard decision, returning the bit label.
inline unsigned demodulate(const Modulation& mod, std::complex<double> y) {
  if (mod.kind == Modulation::Kind::bpsk) return y.real() < 0.0 ? 1u : 0u;
  const auto axis = detail::qam_axis(mod.order);
  const int half = mod.bits_per_symbol() / 2;
  const auto label = [&](double v) {
    double l = std::round((v / axis.scale + (axis.levels - 1)) / 2.0);
    l = std::fmin(std::fmax(l, 0.0), axis.levels - 1.0);
    return detail::gray_encode(static_cast<unsigned>(l));
  };
  return (label(y.real()) << half) | label(y.imag());
}

inline int bit_errors(unsigned sent, unsigned detected) { return std::popcount(sent ^ detected); }

}  // namespace puma
