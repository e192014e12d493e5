#include "dpmnorm/null_model.hpp"

#include <cmath>
#include <string>

#include "dpmnorm/errors.hpp"

namespace dpmnorm {

namespace {

// Relative size of a Cholesky pivot below which the scatter is singular.
constexpr double kPivotTolerance = 1e-9;

void check_sample_size(const DataMatrix& data) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (p < 1) throw PreconditionError("data must have at least one column");
  if (n < p + 1)
    throw PreconditionError("need n >= p + 1 observations (n = " + std::to_string(n) +
                            ", p = " + std::to_string(p) + ")");
  if (!data.allFinite()) throw PreconditionError("data contain non-finite values");
}

Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& scatter) {
  const Eigen::LLT<Eigen::MatrixXd> llt(scatter);
  if (llt.info() != Eigen::Success)
    throw DegenerateDataError("scatter matrix is singular (data not in general position)");
  Eigen::MatrixXd l = llt.matrixL();
  for (Eigen::Index j = 0; j < l.rows(); ++j) {
    if (!(l(j, j) > kPivotTolerance * std::sqrt(scatter(j, j))))
      throw DegenerateDataError("scatter matrix is singular (data not in general position)");
  }
  return l;
}

}  // namespace

HaarPosterior make_haar_posterior(const DataMatrix& data) {
  check_sample_size(data);
  HaarPosterior post;
  post.n = data.rows();
  post.xbar = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - post.xbar.transpose();
  post.scatter = centered.transpose() * centered;
  post.scatter_chol = checked_cholesky(post.scatter);

  const double n = static_cast<double>(post.n);
  const int p = static_cast<int>(data.cols());
  const double logdet_s = 2.0 * log_abs_det_triangular(post.scatter_chol);
  post.log_marginal = log_mvgamma(p, 0.5 * (n - 1.0)) - p * std::log(2.0) -
                      0.5 * (n - 1.0) * p * kLogPi - 0.5 * p * std::log(n) -
                      0.5 * (n - 1.0) * logdet_s;
  return post;
}

NormalParams mle(const DataMatrix& data) {
  const HaarPosterior post = make_haar_posterior(data);
  return {post.xbar, post.scatter_chol / std::sqrt(static_cast<double>(post.n))};
}

double null_log_marginal(const DataMatrix& data) { return make_haar_posterior(data).log_marginal; }

double log_haar_prior(const Eigen::MatrixXd& lam) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < lam.rows(); ++j) s -= static_cast<double>(j + 1) * std::log(lam(j, j));
  return s;
}

double normal_loglik(const NormalParams& params, const HaarPosterior& post) {
  const auto p = post.dim();
  if (params.mu.size() != p || params.lam.rows() != p || params.lam.cols() != p)
    throw std::invalid_argument("normal_loglik: dimension mismatch");
  const auto tri = params.lam.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd a = tri.solve(post.scatter_chol);
  const Eigen::VectorXd b = tri.solve(post.xbar - params.mu);
  const double n = static_cast<double>(post.n);
  return -0.5 * n * p * kLogTwoPi - n * log_abs_det_triangular(params.lam) -
         0.5 * (a.squaredNorm() + n * b.squaredNorm());
}

double haar_posterior_logpdf(const NormalParams& params, const HaarPosterior& post) {
  if (!params.valid())
    throw std::domain_error("haar_posterior_logpdf: lam must be lower triangular, positive diagonal");
  return normal_loglik(params, post) + log_haar_prior(params.lam) - post.log_marginal;
}

double log_min_sample_predictive(const DataMatrix& points) {
  const auto p = points.cols();
  if (points.rows() != p + 1)
    throw std::invalid_argument("min_sample_predictive: need exactly p + 1 points");
  Eigen::MatrixXd diff(p, p);
  for (Eigen::Index j = 0; j < p; ++j) diff.col(j) = (points.row(j) - points.row(p)).transpose();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(diff);
  if (!lu.isInvertible()) throw DegenerateDataError("min_sample_predictive: differences are singular");
  const double log_abs_det = std::log(std::abs(lu.determinant()));
  const int pi = static_cast<int>(p);
  const double log_cp = pi * std::log(2.0) + 0.5 * pi * pi * kLogPi - log_mvgamma(pi, 0.5 * pi);
  return -log_cp - pi * log_abs_det;
}

double min_sample_predictive(const DataMatrix& points) {
  return std::exp(log_min_sample_predictive(points));
}

CanonicalFrame canonical_frame(const DataMatrix& data) {
  const HaarPosterior post = make_haar_posterior(data);
  const auto n = data.rows();
  const auto p = data.cols();
  const auto chol = post.scatter_chol.triangularView<Eigen::Lower>();
  const Eigen::MatrixXd w = chol.solve((data.rowwise() - post.xbar.transpose()).transpose());

  // Whitened points are fixed up to a rotation; Gram-Schmidt on the first
  // points that add a new direction pins that rotation down.
  Eigen::MatrixXd basis(p, p);
  Eigen::Index found = 0;
  const double tol = 1e-6 * static_cast<double>(p) / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n && found < p; ++i) {
    Eigen::VectorXd r = w.col(i);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < found; ++k) r -= basis.col(k).dot(r) * basis.col(k);
    if (r.squaredNorm() > tol) basis.col(found++) = r.normalized();
  }
  if (found < p) throw DegenerateDataError("canonical_frame: data do not span R^p");

  CanonicalFrame frame;
  frame.y = basis.transpose() * w;
  frame.shift = post.xbar;
  frame.transform = post.scatter_chol * basis;
  frame.log_abs_det = log_abs_det_triangular(post.scatter_chol);
  return frame;
}

}  // namespace dpmnorm
