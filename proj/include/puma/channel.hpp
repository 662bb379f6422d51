#pragma once
// Port-grid geometry, spatial covariance and channel sampling for the
// rich-scattering (correlated Rayleigh) and finite-scattering models.
//
// Port indices are zero-based throughout: port k sits at grid position
// (k / n2, k % n2).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "puma/error.hpp"
#include "puma/random.hpp"
#include "puma/specfun.hpp"

namespace puma {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct FasGeometry {
  int n1 = 1;
  int n2 = 1;
  double w1 = 0.0;  // wavelengths
  double w2 = 0.0;

  int size() const { return n1 * n2; }

  void validate() const {
    if (n1 < 1 || n2 < 1) throw DomainError("geometry: n1 and n2 must be >= 1");
    if (!std::isfinite(w1) || !std::isfinite(w2) || w1 < 0.0 || w2 < 0.0)
      throw DomainError("geometry: w1 and w2 must be finite and >= 0");
    if (n1 > 1 && w1 <= 0.0) throw DomainError("geometry: w1 must be > 0 when n1 > 1");
    if (n2 > 1 && w2 <= 0.0) throw DomainError("geometry: w2 must be > 0 when n2 > 1");
  }

  bool operator==(const FasGeometry&) const = default;
};

struct PortPosition {
  double x = 0.0;
  double y = 0.0;
};

inline PortPosition port_coordinates(const FasGeometry& g, int k) {
  if (k < 0 || k >= g.size())
    throw DomainError("port index " + std::to_string(k) + " outside [0, " + std::to_string(g.size()) + ")");
  const int k1 = k / g.n2;
  const int k2 = k % g.n2;
  return {g.n1 > 1 ? k1 * g.w1 / (g.n1 - 1) : 0.0, g.n2 > 1 ? k2 * g.w2 / (g.n2 - 1) : 0.0};
}

inline std::vector<PortPosition> all_port_coordinates(const FasGeometry& g) {
  g.validate();
  std::vector<PortPosition> out(g.size());
  for (int k = 0; k < g.size(); ++k) out[k] = port_coordinates(g, k);
  return out;
}

inline double port_distance(const PortPosition& a, const PortPosition& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct RichScatteringModel {
  FasGeometry geometry;
  double sigma_g = 1.0;

  void validate() const {
    geometry.validate();
    if (!(sigma_g > 0.0) || !std::isfinite(sigma_g)) throw DomainError("sigma_g must be > 0");
  }
  bool operator==(const RichScatteringModel&) const = default;
};

enum class AngleLaw { uniform_azimuth_elevation };

struct FiniteScatteringModel {
  FasGeometry geometry;
  double sigma_g = 1.0;
  double rice_k = 0.0;
  int n_paths = 1;
  AngleLaw angle_law = AngleLaw::uniform_azimuth_elevation;

  void validate() const {
    geometry.validate();
    if (!(sigma_g > 0.0) || !std::isfinite(sigma_g)) throw DomainError("sigma_g must be > 0");
    if (!(rice_k >= 0.0) || !std::isfinite(rice_k)) throw DomainError("rice_k must be finite and >= 0");
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
  }
  bool operator==(const FiniteScatteringModel&) const = default;
};

/// Sigma_kl = j0(2 pi d_kl), d in wavelengths. The diagonal is exactly 1.
inline Eigen::MatrixXd spatial_covariance(const FasGeometry& g) {
  const auto pos = all_port_coordinates(g);
  const int n = g.size();
  Eigen::MatrixXd s(n, n);
  for (int k = 0; k < n; ++k) {
    s(k, k) = 1.0;
    for (int l = k + 1; l < n; ++l) {
      const double v = specfun::sph_bessel_j0(2.0 * std::numbers::pi * port_distance(pos[k], pos[l]));
      s(k, l) = v;
      s(l, k) = v;
    }
  }
  return s;
}

inline Eigen::MatrixXd spatial_covariance(const RichScatteringModel& m) { return spatial_covariance(m.geometry); }

struct CovarianceFactor {
  Eigen::MatrixXd L;
  double reconstruction_error = 0.0;  // max |L L^T - Sigma|
  bool used_cholesky = false;
};

/// Cholesky when Sigma is numerically positive definite, otherwise a
/// symmetric eigendecomposition with negative eigenvalues clipped to 0.
inline CovarianceFactor covariance_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw DomainError("covariance must be square and nonempty");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw DomainError("covariance is not symmetric (max asymmetry " + std::to_string(asym) + ")");

  CovarianceFactor out;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    out.L = llt.matrixL();
    out.used_cholesky = true;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of covariance failed");
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    out.L = eig.eigenvectors() * root.asDiagonal();
  }
  out.reconstruction_error = (out.L * out.L.transpose() - sigma).cwiseAbs().maxCoeff();
  return out;
}

/// g = sigma_g L w with w ~ CN(0, I).
inline CVector sample_rich_channel(const Eigen::MatrixXd& L, double sigma_g, Rng& rng) {
  const Eigen::Index n = L.cols();
  Eigen::VectorXd re(n), im(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx w = rng.complex_normal();
    re[k] = w.real();
    im[k] = w.imag();
  }
  CVector g(L.rows());
  g.real() = sigma_g * (L * re);
  g.imag() = sigma_g * (L * im);
  return g;
}

/// a_k = exp(-j 2 pi (x_k sin(theta) cos(phi) + y_k cos(theta))).
inline CVector steering_vector(const std::vector<PortPosition>& pos, double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi)) throw DomainError("steering angles must be finite");
  const double cx = std::sin(theta) * std::cos(phi);
  const double cy = std::cos(theta);
  CVector a(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const double d = pos[k].x * cx + pos[k].y * cy;
    a[static_cast<Eigen::Index>(k)] = d == 0.0 ? cplx(1.0, 0.0) : std::polar(1.0, -2.0 * std::numbers::pi * d);
  }
  return a;
}

inline CVector steering_vector(const FasGeometry& g, double theta, double phi) {
  return steering_vector(all_port_coordinates(g), theta, phi);
}

namespace detail {

// Draw order: LoS phase and angles, then per path (theta, phi, alpha).
inline CVector sample_finite_channel(const FiniteScatteringModel& m, const std::vector<PortPosition>& pos, Rng& rng) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double k = m.rice_k;
  const double s2 = m.sigma_g * m.sigma_g;
  CVector g = CVector::Zero(static_cast<Eigen::Index>(pos.size()));
  if (k > 0.0) {
    const double delta = rng.uniform(0.0, two_pi);
    const double theta0 = rng.uniform(0.0, two_pi);
    const double phi0 = rng.uniform(0.0, std::numbers::pi);
    g += std::sqrt(k * s2 / (k + 1.0)) * std::polar(1.0, delta) * steering_vector(pos, theta0, phi0);
  }
  const double scatter = std::sqrt(s2 / (m.n_paths * (k + 1.0)));
  for (int l = 0; l < m.n_paths; ++l) {
    const double theta = rng.uniform(0.0, two_pi);
    const double phi = rng.uniform(0.0, std::numbers::pi);
    const cplx alpha = rng.complex_normal();
    g += (scatter * alpha) * steering_vector(pos, theta, phi);
  }
  return g;
}

}  // namespace detail

inline CVector sample_finite_channel(const FiniteScatteringModel& m, Rng& rng) {
  m.validate();
  return detail::sample_finite_channel(m, all_port_coordinates(m.geometry), rng);
}

/// Desired channel g^(u,u) and the U-1 interferer channels g^(u~,u).
struct ChannelRealization {
  CVector desired;
  std::vector<CVector> interferers;

  int n_users() const { return 1 + static_cast<int>(interferers.size()); }
  Eigen::Index n_ports() const { return desired.size(); }
};

using ChannelModel = std::variant<RichScatteringModel, FiniteScatteringModel>;

inline const FasGeometry& geometry_of(const ChannelModel& m) {
  return std::visit([](const auto& v) -> const FasGeometry& { return v.geometry; }, m);
}

inline double sigma_g_of(const ChannelModel& m) {
  return std::visit([](const auto& v) { return v.sigma_g; }, m);
}

/// Precomputes the covariance factor or port coordinates once and then
/// draws independent realizations. Immutable after construction.
class ChannelSampler {
 public:
  explicit ChannelSampler(ChannelModel model) : model_(std::move(model)) {
    std::visit([](const auto& v) { v.validate(); }, model_);
    if (const auto* rich = std::get_if<RichScatteringModel>(&model_)) {
      factor_ = covariance_factor(spatial_covariance(*rich));
    } else {
      positions_ = all_port_coordinates(geometry_of(model_));
    }
  }

  const ChannelModel& model() const { return model_; }
  const CovarianceFactor& factor() const { return factor_; }
  int n_ports() const { return geometry_of(model_).size(); }

  CVector draw_one(Rng& rng) const {
    if (const auto* rich = std::get_if<RichScatteringModel>(&model_))
      return sample_rich_channel(factor_.L, rich->sigma_g, rng);
    return detail::sample_finite_channel(std::get<FiniteScatteringModel>(model_), positions_, rng);
  }

  /// Desired channel first, then interferers 1..U-1. The rich model uses a
  /// single matrix product but consumes the stream in the same order as
  /// repeated draw_one calls.
  ChannelRealization draw(int n_users, Rng& rng) const {
    if (n_users < 1) throw DomainError("n_users must be >= 1");
    ChannelRealization out;
    if (const auto* rich = std::get_if<RichScatteringModel>(&model_)) {
      const Eigen::Index n = factor_.L.cols();
      Eigen::MatrixXd re(n, n_users), im(n, n_users);
      for (int u = 0; u < n_users; ++u)
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx w = rng.complex_normal();
          re(k, u) = w.real();
          im(k, u) = w.imag();
        }
      const Eigen::MatrixXd gr = rich->sigma_g * (factor_.L * re);
      const Eigen::MatrixXd gi = rich->sigma_g * (factor_.L * im);
      auto column = [&](int u) {
        CVector g(gr.rows());
        g.real() = gr.col(u);
        g.imag() = gi.col(u);
        return g;
      };
      out.desired = column(0);
      out.interferers.reserve(n_users - 1);
      for (int u = 1; u < n_users; ++u) out.interferers.push_back(column(u));
      return out;
    }
    out.desired = draw_one(rng);
    out.interferers.reserve(n_users - 1);
    for (int u = 1; u < n_users; ++u) out.interferers.push_back(draw_one(rng));
    return out;
  }

 private:
  ChannelModel model_;
  CovarianceFactor factor_;
  std::vector<PortPosition> positions_;
};

}  // namespace puma
