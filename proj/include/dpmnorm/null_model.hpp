#pragma once

// The normal model under the invariant prior
//   pi_H(mu, Lambda) = prod_j Lambda_jj^{-j} dmu dLambda
// (equivalently 2^{-p} |Sigma|^{-(p+1)/2} dmu dSigma): its marginal,
// posterior ordinate and the minimal-sample predictive.

#include <Eigen/Dense>

#include "dpmnorm/distributions.hpp"
#include "dpmnorm/linalg.hpp"

namespace dpmnorm {

// Sufficient statistics of the null posterior, with the Cholesky factor of
// the scatter matrix and the log marginal cached.
struct HaarPosterior {
  Eigen::VectorXd xbar;
  Eigen::MatrixXd scatter;
  Eigen::Index n = 0;
  Eigen::MatrixXd scatter_chol;
  double log_marginal = 0.0;

  Eigen::Index dim() const { return xbar.size(); }
};

// Throws PreconditionError when n < p + 1, DegenerateDataError when the
// scatter matrix is numerically singular.
HaarPosterior make_haar_posterior(const DataMatrix& data);

// Sample mean and Cholesky factor of scatter / n.
NormalParams mle(const DataMatrix& data);

// log f_H0(X) = log Gamma_p((n-1)/2) - p log 2 - (n-1)p/2 log pi
//               - p/2 log n - (n-1)/2 log det S.
double null_log_marginal(const DataMatrix& data);

// log pi_H(mu, Lambda) up to the Lebesgue measure: -sum_j j log Lambda_jj.
double log_haar_prior(const Eigen::MatrixXd& lam);

// Exact posterior log density of (mu, Lambda) under H0, in the Cholesky
// parameterization (integrates to one over R^p x lower-triangular).
double haar_posterior_logpdf(const NormalParams& params, const HaarPosterior& post);

// sum_i log N(x_i | mu, Lambda Lambda^T) from sufficient statistics.
double normal_loglik(const NormalParams& params, const HaarPosterior& post);

// log of c_p^{-1} |det x~|^{-p}, c_p = 2^p pi^{p^2/2} / Gamma_p(p/2), for a
// (p+1) x p matrix of points. Throws DegenerateDataError if x~ is singular.
double log_min_sample_predictive(const DataMatrix& points);
double min_sample_predictive(const DataMatrix& points);

// An affine-invariant copy of the data: y_i = F^{-1}(x_i - xbar) with F the
// whitening Cholesky factor followed by a rotation fixed by the data
// themselves, so that y is the same for X and a + S X for any nonsingular S.
// The columns of y are observations (p x n).
struct CanonicalFrame {
  Eigen::MatrixXd y;
  Eigen::VectorXd shift;
  Eigen::MatrixXd transform;
  double log_abs_det = 0.0;
};

CanonicalFrame canonical_frame(const DataMatrix& data);

}  // namespace dpmnorm
