#include "dpmnorm/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace dpmnorm {

BaseMeasureParams omega_from_alpha(double alpha, int p) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("omega_from_alpha: alpha must be positive and finite");
  if (p < 1) throw std::invalid_argument("omega_from_alpha: p must be positive");
  const double c = 0.5 * (p + 1);
  return {c + std::pow(alpha, -c), c + std::pow(alpha, c), p};
}

double log_mvgamma(int p, double a) {
  if (p < 1) throw std::domain_error("log_mvgamma: p must be positive");
  if (!(a > 0.5 * (p - 1))) throw std::domain_error("log_mvgamma: a must exceed (p-1)/2");
  double s = 0.25 * p * (p - 1) * kLogPi;
  for (int i = 0; i < p; ++i) s += std::lgamma(a - 0.5 * i);
  return s;
}

double mbeta_log_normalizer(const BaseMeasureParams& bm) {
  if (!bm.valid()) throw std::domain_error("mbeta: omega must exceed (p-1)/2");
  return log_mvgamma(bm.p, bm.omega1 + bm.omega2) - log_mvgamma(bm.p, bm.omega1) -
         log_mvgamma(bm.p, bm.omega2);
}

double mbeta_logpdf(const Eigen::MatrixXd& v, const BaseMeasureParams& bm) {
  if (v.rows() != bm.p || v.cols() != bm.p)
    throw std::invalid_argument("mbeta_logpdf: dimension mismatch");
  if (!v.isApprox(v.transpose(), 1e-12))
    throw std::domain_error("mbeta_logpdf: v is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lam = es.eigenvalues();
  if ((lam.array() <= 0.0).any() || (lam.array() >= 1.0).any())
    throw std::domain_error("mbeta_logpdf: spectrum of v outside (0, 1)");
  const double h = 0.5 * (bm.p + 1);
  return mbeta_log_normalizer(bm) + (bm.omega1 - h) * lam.array().log().sum() +
         (bm.omega2 - h) * (1.0 - lam.array()).log().sum();
}

Eigen::MatrixXd sample_mbeta(const BaseMeasureParams& bm, Rng& rng) {
  if (!bm.valid()) throw std::domain_error("sample_mbeta: invalid base measure");
  return sample_mbeta_spectral<Eigen::Dynamic>(bm, rng).matrix();
}

ShiftVolumeDraw sample_base_measure(const BaseMeasureParams& bm, Rng& rng) {
  if (!bm.valid()) throw std::domain_error("sample_base_measure: invalid base measure");
  if (bm.p == 1) {
    const auto v1 = sample_mbeta_spectral<1>(bm, rng);
    const double u = std::sqrt(v1.comp(0)) * standard_normal(rng);
    return {Eigen::VectorXd::Constant(1, u), Eigen::MatrixXd::Constant(1, 1, v1.eig(0)),
            Eigen::MatrixXd::Constant(1, 1, v1.comp(0))};
  }
  const auto vol = sample_mbeta_spectral<Eigen::Dynamic>(bm, rng);
  Eigen::VectorXd e(bm.p);
  for (int k = 0; k < bm.p; ++k) e(k) = std::sqrt(vol.comp(k)) * standard_normal(rng);
  return {vol.basis * e, vol.matrix(), vol.complement()};
}

double student_t_logpdf(double x, double df) {
  if (!(df > 0.0)) throw std::domain_error("student_t_logpdf: df must be positive");
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * M_PI) -
         0.5 * (df + 1.0) * std::log1p(x * x / df);
}

double burr_logpdf(double x, double scale) {
  if (!(scale > 0.0)) throw std::domain_error("burr_logpdf: scale must be positive");
  if (!(x >= 0.0)) throw std::domain_error("burr_logpdf: x must be non-negative");
  return -std::log(scale) - 2.0 * std::log1p(x / scale);
}

double sample_burr(double scale, Rng& rng) {
  if (!(scale > 0.0)) throw std::domain_error("sample_burr: scale must be positive");
  const double u = uniform_open(rng);
  return scale * u / (1.0 - u);
}

double inv_wishart_logpdf(const Eigen::MatrixXd& sigma, double df, const Eigen::MatrixXd& scale) {
  const auto p = sigma.rows();
  if (sigma.cols() != p || scale.rows() != p || scale.cols() != p)
    throw std::invalid_argument("inv_wishart_logpdf: dimension mismatch");
  if (!(df > p - 1.0)) throw std::domain_error("inv_wishart_logpdf: df must exceed p - 1");
  const Eigen::LLT<Eigen::MatrixXd> cs(sigma);
  const Eigen::LLT<Eigen::MatrixXd> cp(scale);
  if (cs.info() != Eigen::Success || cp.info() != Eigen::Success)
    throw std::domain_error("inv_wishart_logpdf: matrix not positive definite");
  const Eigen::MatrixXd ls = cs.matrixL();
  const Eigen::MatrixXd lp = cp.matrixL();
  const double logdet_sigma = 2.0 * log_abs_det_triangular(ls);
  const double logdet_scale = 2.0 * log_abs_det_triangular(lp);
  // tr(scale * sigma^{-1}) = ||ls^{-1} lp||_F^2
  const Eigen::MatrixXd m = ls.triangularView<Eigen::Lower>().solve(lp);
  const int pi = static_cast<int>(p);
  return 0.5 * df * logdet_scale - 0.5 * df * pi * std::log(2.0) - log_mvgamma(pi, 0.5 * df) -
         0.5 * (df + pi + 1.0) * logdet_sigma - 0.5 * m.squaredNorm();
}

Eigen::MatrixXd sample_inv_wishart(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const int p = static_cast<int>(scale.rows());
  if (!(df > p - 1.0)) throw std::domain_error("sample_inv_wishart: df must exceed p - 1");
  const Eigen::LLT<Eigen::MatrixXd> cp(scale);
  if (cp.info() != Eigen::Success)
    throw std::domain_error("sample_inv_wishart: scale not positive definite");
  // sigma^{-1} = R^{-T} B B^T R^{-1} with scale = R R^T, so sigma = (R B^{-T})(R B^{-T})^T.
  const Eigen::MatrixXd b = bartlett_factor<Eigen::Dynamic>(df, p, rng);
  const Eigen::MatrixXd binv_t =
      b.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p)).transpose();
  const Eigen::MatrixXd f = Eigen::MatrixXd(cp.matrixL()) * binv_t;
  Eigen::MatrixXd sigma = f * f.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace dpmnorm
