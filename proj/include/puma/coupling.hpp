#pragma once
// Mutual-coupling front end Gamma = Z_T (Z + Z_T I)^-1 over the activated
// ports. Z comes from a file or from the induced-EMF model of parallel
// side-by-side thin dipoles.

#include <Eigen/Dense>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "puma/channel.hpp"
#include "puma/error.hpp"
#include "puma/specfun.hpp"

namespace puma {

enum class CouplingKind { identity, from_file, dipole_emf };

struct CouplingModel {
  CouplingKind kind = CouplingKind::identity;
  double z_termination = 50.0;  // ohms
  double dipole_length = 0.5;   // wavelengths
  double dipole_width = 0.005;  // wavelengths
  std::string impedance_file;

  void validate() const {
    if (!(z_termination > 0.0) || !std::isfinite(z_termination)) throw DomainError("z_termination must be > 0");
    if (kind == CouplingKind::dipole_emf) {
      if (!(dipole_length > 0.0)) throw DomainError("dipole_length must be > 0");
      if (!(dipole_width > 0.0)) throw DomainError("dipole_width must be > 0");
    }
    if (kind == CouplingKind::from_file && impedance_file.empty())
      throw DomainError("from-file coupling needs an impedance file");
  }
  bool operator==(const CouplingModel&) const = default;
};

inline constexpr double free_space_impedance = 120.0 * std::numbers::pi;

/// Input impedance of a thin centre-fed dipole (sinusoidal current),
/// lengths in wavelengths.
inline cplx dipole_self_impedance(double length, double width) {
  using specfun::sine_cosine_integrals;
  const double gamma = std::numbers::egamma;
  const double k = 2.0 * std::numbers::pi;
  const double kl = k * length;
  const double a = width / 2.0;
  const auto s1 = sine_cosine_integrals(kl);
  const auto s2 = sine_cosine_integrals(2.0 * kl);
  const auto sa = sine_cosine_integrals(2.0 * k * a * a / length);
  const double eta = free_space_impedance;
  const double r = eta / (2.0 * std::numbers::pi) *
                   (gamma + std::log(kl) - s1.ci + 0.5 * std::sin(kl) * (s2.si - 2.0 * s1.si) +
                    0.5 * std::cos(kl) * (gamma + std::log(kl / 2.0) + s2.ci - 2.0 * s1.ci));
  const double x = eta / (4.0 * std::numbers::pi) *
                   (2.0 * s1.si + std::cos(kl) * (2.0 * s1.si - s2.si) -
                    std::sin(kl) * (2.0 * s1.ci - s2.ci - sa.ci));
  return {r, x};
}

/// Mutual impedance between two parallel side-by-side dipoles of equal
/// length at horizontal separation d (wavelengths).
inline cplx dipole_mutual_impedance(double length, double d) {
  if (!(d > 0.0)) throw DomainError("dipole separation must be > 0");
  const double k = 2.0 * std::numbers::pi;
  const double root = std::sqrt(d * d + length * length);
  const auto c0 = specfun::sine_cosine_integrals(k * d);
  const auto c1 = specfun::sine_cosine_integrals(k * (root + length));
  const auto c2 = specfun::sine_cosine_integrals(k * (root - length));
  const double scale = free_space_impedance / (4.0 * std::numbers::pi);
  return {scale * (2.0 * c0.ci - c1.ci - c2.ci), -scale * (2.0 * c0.si - c1.si - c2.si)};
}

inline CMatrix dipole_impedance_matrix(const FasGeometry& g, double length, double width) {
  const auto pos = all_port_coordinates(g);
  const int n = g.size();
  CMatrix z(n, n);
  const cplx self = dipole_self_impedance(length, width);
  for (int k = 0; k < n; ++k) {
    z(k, k) = self;
    for (int l = k + 1; l < n; ++l) {
      const double d = port_distance(pos[k], pos[l]);
      if (!(d > 0.0))
        throw DomainError("dipole coupling needs distinct port positions (ports " + std::to_string(k) + ", " +
                          std::to_string(l) + " coincide)");
      const cplx m = dipole_mutual_impedance(length, d);
      z(k, l) = m;
      z(l, k) = m;
    }
  }
  return z;
}

/// Impedance file: first token N, then N*N "re im" pairs, row-major.
inline CMatrix parse_impedance(std::istream& in, const std::string& origin = "impedance file") {
  long long n = 0;
  if (!(in >> n) || n < 1) throw FormatError(origin + ": first entry must be a positive port count");
  CMatrix z(n, n);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im))
        throw FormatError(origin + ": expected " + std::to_string(n * n) + " complex entries, got " +
                          std::to_string(i * n + j));
      z(i, j) = {re, im};
    }
  std::string extra;
  if (in >> extra) throw FormatError(origin + ": trailing data after " + std::to_string(n * n) + " entries");
  return z;
}

inline CMatrix read_impedance_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open impedance file '" + path + "'");
  return parse_impedance(f, path);
}

/// Gamma restricted to a port subset; identity on every other port.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  CouplingMatrix(Eigen::Index n_ports, std::vector<int> ports, CMatrix block)
      : n_(n_ports), ports_(std::move(ports)), block_(std::move(block)) {}

  static CouplingMatrix identity(Eigen::Index n_ports) { return CouplingMatrix(n_ports, {}, CMatrix()); }

  bool is_identity() const { return ports_.empty(); }
  Eigen::Index size() const { return n_; }
  const std::vector<int>& ports() const { return ports_; }
  const CMatrix& block() const { return block_; }

  CVector apply(const CVector& r) const {
    if (r.size() != n_) throw DomainError("coupling: vector length mismatch");
    if (is_identity()) return r;
    CVector sub(static_cast<Eigen::Index>(ports_.size()));
    for (std::size_t i = 0; i < ports_.size(); ++i) sub[i] = r[ports_[i]];
    const CVector mixed = block_ * sub;
    CVector out = r;
    for (std::size_t i = 0; i < ports_.size(); ++i) out[ports_[i]] = mixed[i];
    return out;
  }

  CMatrix dense() const {
    CMatrix m = CMatrix::Identity(n_, n_);
    for (std::size_t i = 0; i < ports_.size(); ++i)
      for (std::size_t j = 0; j < ports_.size(); ++j) m(ports_[i], ports_[j]) = block_(i, j);
    return m;
  }

 private:
  Eigen::Index n_ = 0;
  std::vector<int> ports_;
  CMatrix block_;
};

/// Holds the full impedance matrix for a geometry and builds Gamma for any
/// activated port set.
class CouplingFrontEnd {
 public:
  CouplingFrontEnd(const CouplingModel& model, const FasGeometry& geometry) : model_(model), n_(geometry.size()) {
    model.validate();
    geometry.validate();
    switch (model.kind) {
      case CouplingKind::identity: break;
      case CouplingKind::from_file: {
        CMatrix z = read_impedance_file(model.impedance_file);
        if (z.rows() != n_)
          throw FormatError(model.impedance_file + ": impedance matrix is " + std::to_string(z.rows()) + "x" +
                            std::to_string(z.cols()) + " but the geometry has " + std::to_string(n_) + " ports");
        z_ = std::move(z);
        break;
      }
      case CouplingKind::dipole_emf: z_ = dipole_impedance_matrix(geometry, model.dipole_length, model.dipole_width); break;
    }
    cache_full();
  }

  CouplingFrontEnd(const CouplingModel& model, CMatrix impedance) : model_(model), n_(impedance.rows()) {
    if (impedance.rows() != impedance.cols()) throw FormatError("impedance matrix must be square");
    if (!(model.z_termination > 0.0)) throw DomainError("z_termination must be > 0");
    z_ = std::move(impedance);
    cache_full();
  }

  bool is_identity() const { return !z_.has_value(); }
  const std::optional<CMatrix>& impedance() const { return z_; }

  /// `activated` must be sorted and free of duplicates.
  CouplingMatrix build(const std::vector<int>& activated) const {
    if (!z_) return CouplingMatrix::identity(n_);
    const auto m = static_cast<Eigen::Index>(activated.size());
    if (m == 0) return CouplingMatrix::identity(n_);
    if (m == n_ && full_) return *full_;
    for (int k : activated)
      if (k < 0 || k >= n_) throw DomainError("coupling: activated port out of range");
    const double zt = model_.z_termination;
    CMatrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) = (*z_)(activated[i], activated[j]);
    a.diagonal().array() += zt;
    Eigen::PartialPivLU<CMatrix> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1e-13)) throw NumericError("coupling: Z + Z_T I is singular (rcond " + std::to_string(rc) + ")");
    CMatrix gamma = lu.solve(CMatrix::Identity(m, m) * cplx(zt, 0.0));
    return CouplingMatrix(n_, activated, std::move(gamma));
  }

 private:
  // Full activation is the common case; build it once.
  void cache_full() {
    if (!z_) return;
    std::vector<int> all(static_cast<std::size_t>(n_));
    for (Eigen::Index k = 0; k < n_; ++k) all[static_cast<std::size_t>(k)] = static_cast<int>(k);
    full_ = build(all);
  }

  CouplingModel model_;
  Eigen::Index n_;
  std::optional<CMatrix> z_;
  std::optional<CouplingMatrix> full_;
};

/// Dense N x N Gamma for the activated ports.
inline CMatrix coupling_matrix(const CouplingModel& model, const FasGeometry& geometry, std::vector<int> activated) {
  std::sort(activated.begin(), activated.end());
  activated.erase(std::unique(activated.begin(), activated.end()), activated.end());
  return CouplingFrontEnd(model, geometry).build(activated).dense();
}

}  // namespace puma
