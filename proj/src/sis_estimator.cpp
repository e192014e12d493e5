#include "dpmnorm/sis_estimator.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dpmnorm/detail/parallel.hpp"
#include "dpmnorm/errors.hpp"

namespace dpmnorm {

namespace {

constexpr double kImportanceTDf = 3.0;

template <class Engine>
void shuffle_order(std::vector<int>& order, Engine& rng) {
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(k));
    std::swap(order[k - 1], order[std::min(j, k - 1)]);
  }
}

// Sum of the log brackets along one random processing order of the
// columns of y, with anchor (mu, lam).
template <int Dim, class Engine>
double rollout(const Eigen::MatrixXd& y, const Vec<Dim>& mu, const Mat<Dim>& lam,
               const BaseMeasureParams& bm, double alpha, std::vector<int>& order, Engine& rng) {
  std::iota(order.begin(), order.end(), 0);
  shuffle_order(order, rng);
  ReplicateState<Dim> rep(mu, lam, bm, alpha);
  for (int i : order) {
    const Vec<Dim> x = y.col(i);
    rep.step(rep.standardize(x), rng);
  }
  return rep.log_weight_running;
}

template <int Dim>
std::vector<double> run_replicates(const Eigen::MatrixXd& y, const HaarPosterior& post,
                                   const SisOptions& opt) {
  const auto p = static_cast<int>(y.rows());
  const BaseMeasureParams bm = omega_from_alpha(opt.alpha, p);
  const AnchorProposal proposal(post);
  std::vector<double> log_w(static_cast<std::size_t>(opt.replicates));
  detail::parallel_for(log_w.size(), opt.parallelism, [&](std::size_t m) {
    Rng rng = substream(opt.seed, Stream::kReplicate, m);
    const AnchorDraw anchor = proposal.sample(rng);
    std::vector<int> order(static_cast<std::size_t>(y.cols()));
    const Vec<Dim> mu = anchor.params.mu;
    const Mat<Dim> lam = anchor.params.lam;
    const double lb = rollout<Dim>(y, mu, lam, bm, opt.alpha, order, rng);
    const double lw = haar_posterior_logpdf(anchor.params, post) - anchor.logpdf + lb;
    if (!std::isfinite(lw))
      throw NumericError("non-finite importance weight in replicate " + std::to_string(m));
    log_w[m] = lw;
  });
  return log_w;
}

template <int Dim>
std::vector<double> run_conditional(const Eigen::MatrixXd& z, double alpha, int replicates,
                                    std::uint64_t seed, int parallelism) {
  const auto p = static_cast<int>(z.rows());
  const BaseMeasureParams bm = omega_from_alpha(alpha, p);
  const Vec<Dim> mu = Vec<Dim>::Zero(p);
  const Mat<Dim> lam = Mat<Dim>::Identity(p, p);
  std::vector<double> out(static_cast<std::size_t>(replicates));
  detail::parallel_for(out.size(), parallelism, [&](std::size_t m) {
    Rng rng = substream(seed, Stream::kReplicate, m);
    std::vector<int> order(static_cast<std::size_t>(z.cols()));
    out[m] = rollout<Dim>(z, mu, lam, bm, alpha, order, rng);
    if (!std::isfinite(out[m]))
      throw NumericError("non-finite conditional weight in replicate " + std::to_string(m));
  });
  return out;
}

}  // namespace

double importance_iw_df(Eigen::Index n, Eigen::Index p) {
  const double pd = static_cast<double>(p);
  return std::max(pd, static_cast<double>(n) - pd * std::sqrt(static_cast<double>(n)));
}

AnchorProposal::AnchorProposal(const HaarPosterior& post)
    : xbar_(post.xbar),
      scatter_(post.scatter),
      scatter_chol_(post.scatter_chol),
      n_(static_cast<double>(post.n)),
      iw_df_(importance_iw_df(post.n, post.dim())),
      lam_hat_(post.scatter_chol(0, 0) / std::sqrt(static_cast<double>(post.n))) {}

AnchorDraw AnchorProposal::sample(Rng& rng) const {
  const auto p = dim();
  AnchorDraw out;
  if (p == 1) {
    const double lam = sample_burr(lam_hat_, rng);
    const double t = standard_normal(rng) / std::sqrt(chi_square(kImportanceTDf, rng) / kImportanceTDf);
    out.params.mu = Eigen::VectorXd::Constant(1, xbar_(0) + lam / std::sqrt(n_) * t);
    out.params.lam = Eigen::MatrixXd::Constant(1, 1, lam);
  } else {
    const Eigen::MatrixXd sigma = sample_inv_wishart(iw_df_, scatter_, rng);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericError("importance draw: covariance not positive definite");
    out.params.lam = llt.matrixL();
    Eigen::VectorXd e(p);
    for (Eigen::Index j = 0; j < p; ++j) e(j) = standard_normal(rng);
    out.params.mu = xbar_ + out.params.lam * e;
  }
  out.logpdf = logpdf(out.params);
  return out;
}

double AnchorProposal::logpdf(const NormalParams& params) const {
  const auto p = dim();
  if (!params.valid() || params.dim() != p)
    throw std::domain_error("AnchorProposal::logpdf: invalid parameters");
  if (p == 1) {
    const double lam = params.lam(0, 0);
    const double scale = lam / std::sqrt(n_);
    return burr_logpdf(lam, lam_hat_) + student_t_logpdf((params.mu(0) - xbar_(0)) / scale, kImportanceTDf) -
           std::log(scale);
  }
  const Eigen::MatrixXd sigma = params.lam * params.lam.transpose();
  double log_jac = p * std::log(2.0);
  for (Eigen::Index j = 0; j < p; ++j) log_jac += static_cast<double>(p - j) * std::log(params.lam(j, j));
  return inv_wishart_logpdf(sigma, iw_df_, scatter_) + mvn_logpdf(params.mu, xbar_, params.lam) + log_jac;
}

AnchorDraw sample_importance_anchor_univariate(const NormalParams& mle_params, Eigen::Index n, Rng& rng) {
  if (mle_params.dim() != 1) throw std::invalid_argument("univariate anchor requires p = 1");
  HaarPosterior post;
  post.n = n;
  post.xbar = mle_params.mu;
  post.scatter_chol = mle_params.lam * std::sqrt(static_cast<double>(n));
  post.scatter = post.scatter_chol * post.scatter_chol.transpose();
  return AnchorProposal(post).sample(rng);
}

double importance_anchor_univariate_logpdf(const NormalParams& params, const NormalParams& mle_params,
                                           Eigen::Index n) {
  HaarPosterior post;
  post.n = n;
  post.xbar = mle_params.mu;
  post.scatter_chol = mle_params.lam * std::sqrt(static_cast<double>(n));
  post.scatter = post.scatter_chol * post.scatter_chol.transpose();
  return AnchorProposal(post).logpdf(params);
}

AnchorDraw sample_importance_anchor_multivariate(const DataMatrix& data, Rng& rng) {
  if (data.cols() < 2) throw std::invalid_argument("multivariate anchor requires p > 1");
  return AnchorProposal(make_haar_posterior(data)).sample(rng);
}

WeightSummary summarize_log_weights(std::span<const double> log_w) {
  WeightSummary s;
  const double m = static_cast<double>(log_w.size());
  if (log_w.empty()) throw std::invalid_argument("summarize_log_weights: no weights");
  const double lse = log_sum_exp(log_w);
  s.log_mean = lse - std::log(m);
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - mx);
    sum += w;
    sum_sq += w * w;
  }
  s.ess = sum * sum / sum_sq;
  if (log_w.size() > 1) {
    const double mean = sum / m;
    const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
    s.se_log = std::sqrt(var / m) / mean;
  } else {
    s.se_log = std::numeric_limits<double>::infinity();
  }
  return s;
}

LogBfEstimate estimate_log_bf(const DataMatrix& data, const SisOptions& options) {
  if (options.replicates < 1) throw PreconditionError("replicates must be at least 1");
  if (!(options.alpha > 0.0) || !std::isfinite(options.alpha))
    throw PreconditionError("alpha must be positive and finite");
  const HaarPosterior original = make_haar_posterior(data);
  const CanonicalFrame frame = canonical_frame(data);
  const HaarPosterior post = make_haar_posterior(frame.y.transpose());

  std::vector<double> log_w;
  switch (frame.y.rows()) {
    case 1: log_w = run_replicates<1>(frame.y, post, options); break;
    case 2: log_w = run_replicates<2>(frame.y, post, options); break;
    case 3: log_w = run_replicates<3>(frame.y, post, options); break;
    default: log_w = run_replicates<Eigen::Dynamic>(frame.y, post, options); break;
  }

  const WeightSummary s = summarize_log_weights(log_w);
  LogBfEstimate out;
  out.log_bf = -s.log_mean;
  out.mc_se_log = s.se_log;
  out.replicates = options.replicates;
  out.ess = s.ess;
  out.log_marginal_null = original.log_marginal;
  out.log_marginal_alt = original.log_marginal - out.log_bf;
  out.log_weights = std::move(log_w);
  return out;
}

std::vector<double> conditional_log_brackets(const Eigen::MatrixXd& z_cols, double alpha, int replicates,
                                             std::uint64_t seed, int parallelism) {
  if (replicates < 1) throw PreconditionError("replicates must be at least 1");
  switch (z_cols.rows()) {
    case 1: return run_conditional<1>(z_cols, alpha, replicates, seed, parallelism);
    case 2: return run_conditional<2>(z_cols, alpha, replicates, seed, parallelism);
    case 3: return run_conditional<3>(z_cols, alpha, replicates, seed, parallelism);
    default: return run_conditional<Eigen::Dynamic>(z_cols, alpha, replicates, seed, parallelism);
  }
}

}  // namespace dpmnorm
