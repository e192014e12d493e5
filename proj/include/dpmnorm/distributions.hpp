#pragma once

// Densities and samplers for the normal / matrix-beta base measure model.
// Every density is returned on the log scale.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "dpmnorm/linalg.hpp"
#include "dpmnorm/random.hpp"

namespace dpmnorm {

// N(mu, lam * lam^T) with lam lower triangular, positive diagonal.
struct NormalParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd lam;

  Eigen::Index dim() const { return mu.size(); }
  bool valid() const { return lam.rows() == mu.size() && is_lower_positive(lam); }
};

// Parameters of Be_p(omega1, omega2) on the matrices with spectrum in (0, 1).
struct BaseMeasureParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  int p = 1;

  bool valid() const {
    const double floor = 0.5 * (p - 1);
    return p >= 1 && omega1 > floor && omega2 > floor && std::isfinite(omega1) &&
           std::isfinite(omega2);
  }
};

// One atom (U, V) of the base measure; v_complement holds I - V computed
// without cancellation, which matters when V is close to the identity.
struct ShiftVolumeDraw {
  Eigen::VectorXd u;
  Eigen::MatrixXd v;
  Eigen::MatrixXd v_complement;
};

// V = basis * diag(eig) * basis^T, I - V = basis * diag(comp) * basis^T.
template <int Dim>
struct SpectralVolume {
  Mat<Dim> basis;
  Vec<Dim> eig;
  Vec<Dim> comp;

  Mat<Dim> matrix() const { return basis * eig.asDiagonal() * basis.transpose(); }
  Mat<Dim> complement() const { return basis * comp.asDiagonal() * basis.transpose(); }
};

// Draws with an eigenvalue of V or I - V at or below this are redrawn.
inline constexpr double kSpectrumFloor = 1e-12;

// omega1 = (p+1)/2 + alpha^{-(p+1)/2}, omega2 = (p+1)/2 + alpha^{(p+1)/2}.
BaseMeasureParams omega_from_alpha(double alpha, int p);

// log Gamma_p(a) = p(p-1)/4 log(pi) + sum_{i<p} lgamma(a - i/2).
double log_mvgamma(int p, double a);

template <class DX, class DM, class DL>
double mvn_logpdf(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DM>& mu,
                  const Eigen::MatrixBase<DL>& lam) {
  if (x.size() != mu.size() || lam.rows() != x.size() || lam.cols() != x.size())
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  using Vector = Eigen::Matrix<double, DX::SizeAtCompileTime, 1>;
  const typename DL::PlainObject l = lam;
  const Vector z = l.template triangularView<Eigen::Lower>().solve(x - mu);
  return -0.5 * static_cast<double>(x.size()) * kLogTwoPi - log_abs_det_triangular(l) -
         0.5 * z.squaredNorm();
}

inline double mvn_logpdf(const Eigen::VectorXd& x, const NormalParams& params) {
  return mvn_logpdf(x, params.mu, params.lam);
}

double mbeta_log_normalizer(const BaseMeasureParams& bm);

// Log density of Be_p(omega1, omega2) at v; throws std::domain_error when
// v is not symmetric with spectrum strictly inside (0, 1).
double mbeta_logpdf(const Eigen::MatrixXd& v, const BaseMeasureParams& bm);

// Lower Bartlett factor L with L L^T ~ Wishart_p(df, I). Real df > p - 1.
template <int Dim, class Engine>
Mat<Dim> bartlett_factor(double df, int p, Engine& rng) {
  Mat<Dim> l = Mat<Dim>::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    l(i, i) = std::sqrt(chi_square(df - i, rng));
    for (int j = 0; j < i; ++j) l(i, j) = standard_normal(rng);
  }
  return l;
}

// Matrix beta draw through the Wishart ratio T^{-1} A T^{-T}, T T^T = A + B,
// A ~ W(2 omega1, I), B ~ W(2 omega2, I). Returns V in spectral form.
template <int Dim, class Engine>
SpectralVolume<Dim> sample_mbeta_spectral(const BaseMeasureParams& bm, Engine& rng) {
  const int p = bm.p;
  SpectralVolume<Dim> out;
  for (;;) {
    if constexpr (Dim == 1) {
      const double a = chi_square(2.0 * bm.omega1, rng);
      const double b = chi_square(2.0 * bm.omega2, rng);
      out.basis.setOnes();
      out.eig(0) = a / (a + b);
      out.comp(0) = b / (a + b);
    } else {
      const Mat<Dim> la = bartlett_factor<Dim>(2.0 * bm.omega1, p, rng);
      const Mat<Dim> lb = bartlett_factor<Dim>(2.0 * bm.omega2, p, rng);
      const Mat<Dim> total = la * la.transpose() + lb * lb.transpose();
      const Eigen::LLT<Mat<Dim>> chol(total);
      if (chol.info() != Eigen::Success) continue;
      const Mat<Dim> ma = chol.matrixL().solve(la);
      const Mat<Dim> mb = chol.matrixL().solve(lb);
      Mat<Dim> v = ma * ma.transpose();
      v = 0.5 * (v + v.transpose()).eval();
      Mat<Dim> w = mb * mb.transpose();
      w = 0.5 * (w + w.transpose()).eval();
      const Eigen::SelfAdjointEigenSolver<Mat<Dim>> es(v);
      out.basis = es.eigenvectors();
      out.eig = es.eigenvalues();
      out.comp.resize(p);
      for (int k = 0; k < p; ++k)
        out.comp(k) = out.basis.col(k).dot(w * out.basis.col(k));
    }
    if ((out.eig.array() > kSpectrumFloor).all() && (out.comp.array() > kSpectrumFloor).all())
      return out;
  }
}

Eigen::MatrixXd sample_mbeta(const BaseMeasureParams& bm, Rng& rng);

// (U, V): V ~ Be_p(omega1, omega2), U | V ~ N(0, I - V).
ShiftVolumeDraw sample_base_measure(const BaseMeasureParams& bm, Rng& rng);

// Standard Student-t density with df degrees of freedom.
double student_t_logpdf(double x, double df);

// Burr-type density (1/scale) (1 + x/scale)^{-2} on x > 0.
double burr_logpdf(double x, double scale);
double sample_burr(double scale, Rng& rng);

double inv_wishart_logpdf(const Eigen::MatrixXd& sigma, double df, const Eigen::MatrixXd& scale);
Eigen::MatrixXd sample_inv_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng);

}  // namespace dpmnorm
