#pragma once

// Sequential imputation with importance sampling for the Bayes factor of
// the normal model against its Dirichlet process mixture alternative.
//
// All cluster computations run in standardized coordinates
// z = Lambda^{-1}(x - mu) of the replicate's anchor. A cluster with volume
// matrix V, K members and member sum s has the conjugate predictive
//   N(z | (I - V){V + K(I - V)}^{-1} s,  V{I + K(I - V)}{V + K(I - V)}^{-1}),
// which is diagonal in the eigenbasis of V, so each cluster keeps V in
// spectral form and the member sum rotated into that basis.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dpmnorm/distributions.hpp"
#include "dpmnorm/linalg.hpp"
#include "dpmnorm/null_model.hpp"
#include "dpmnorm/random.hpp"

namespace dpmnorm {

template <int Dim>
struct ClusterSuffStats {
  SpectralVolume<Dim> volume;
  int count = 0;
  Vec<Dim> zsum_rot;  // basis^T * sum of member z
  Vec<Dim> mean_rot;
  Vec<Dim> inv_var;
  double log_norm = 0.0;  // -1/2 sum log var
  double log_count = -std::numeric_limits<double>::infinity();

  static ClusterSuffStats empty(const SpectralVolume<Dim>& vol) {
    ClusterSuffStats c;
    c.volume = vol;
    c.zsum_rot = Vec<Dim>::Zero(vol.eig.size());
    c.refresh();
    return c;
  }

  Eigen::Index dim() const { return volume.eig.size(); }
  Vec<Dim> zsum() const { return volume.basis * zsum_rot; }

  void add(const Vec<Dim>& z) {
    ++count;
    zsum_rot.noalias() += volume.basis.transpose() * z;
    refresh();
  }

  void remove(const Vec<Dim>& z) {
    --count;
    zsum_rot.noalias() -= volume.basis.transpose() * z;
    refresh();
  }

  void set_volume(const SpectralVolume<Dim>& vol) {
    const Vec<Dim> s = zsum();
    volume = vol;
    zsum_rot = volume.basis.transpose() * s;
    refresh();
  }

  void refresh() {
    const double k = static_cast<double>(count);
    const auto d = volume.eig.array();
    const auto c = volume.comp.array();
    const auto denom = (d + k * c).eval();
    mean_rot = (c * zsum_rot.array() / denom).matrix();
    const auto var = (d * (1.0 + k * c) / denom).eval();
    inv_var = var.inverse().matrix();
    log_norm = -0.5 * var.log().sum();
    log_count = count > 0 ? std::log(k) : -std::numeric_limits<double>::infinity();
  }

  // Predictive mean and covariance of the next member, standardized scale.
  Vec<Dim> predictive_mean() const { return volume.basis * mean_rot; }
  Mat<Dim> predictive_cov() const {
    return volume.basis * inv_var.cwiseInverse().asDiagonal() * volume.basis.transpose();
  }

  // log N(z | predictive) - log N(z | 0, I); half_sq = |z|^2 / 2.
  double log_ratio(const Vec<Dim>& z, double half_sq) const {
    if constexpr (Dim == 1) {
      const double r = z(0) - mean_rot(0);
      return log_norm - 0.5 * r * r * inv_var(0) + half_sq;
    } else {
      const Vec<Dim> y = volume.basis.transpose() * z;
      return log_norm - 0.5 * ((y - mean_rot).array().square() * inv_var.array()).sum() + half_sq;
    }
  }
};

// Polya-urn rollout state of one importance replicate with anchor (mu, Lambda).
template <int Dim>
class ReplicateState {
 public:
  ReplicateState(const Vec<Dim>& mu, const Mat<Dim>& lam, const BaseMeasureParams& bm, double alpha)
      : mu_(mu), lam_(lam), bm_(bm), alpha_(alpha), log_alpha_(std::log(alpha)) {
    if (!(alpha > 0.0)) throw std::invalid_argument("ReplicateState: alpha must be positive");
    if (!bm.valid()) throw std::invalid_argument("ReplicateState: invalid base measure");
    if (mu.size() != bm.p || lam.rows() != bm.p || !is_lower_positive(lam))
      throw std::invalid_argument("ReplicateState: anchor does not match dimension");
    log_det_lam_ = log_abs_det_triangular(lam);
  }

  const Vec<Dim>& mu() const { return mu_; }
  const Mat<Dim>& lam() const { return lam_; }
  double alpha() const { return alpha_; }
  const BaseMeasureParams& base_measure() const { return bm_; }
  int observed() const { return static_cast<int>(labels_.size()); }
  const std::vector<ClusterSuffStats<Dim>>& clusters() const { return clusters_; }
  const std::vector<int>& labels() const { return labels_; }

  // Running sum of log brackets {alpha + sum_l K_l r_l} / (alpha + i).
  double log_weight_running = 0.0;

  Vec<Dim> standardize(const Vec<Dim>& x) const {
    return lam_.template triangularView<Eigen::Lower>().solve(x - mu_);
  }

  // log of {alpha + sum_l K_l r_l(z)} / (alpha + i); fills the unnormalized
  // label weights (existing clusters first, new cluster last) into scratch.
  double log_bracket(const Vec<Dim>& z) {
    const double half_sq = 0.5 * z.squaredNorm();
    const std::size_t nclust = clusters_.size();
    scratch_.resize(nclust + 1);
    double mx = log_alpha_;
    for (std::size_t l = 0; l < nclust; ++l) {
      const double v = clusters_[l].log_count + clusters_[l].log_ratio(z, half_sq);
      scratch_[l] = v;
      if (v > mx) mx = v;
    }
    scratch_[nclust] = log_alpha_;
    double total = 0.0;
    for (double& v : scratch_) {
      v = std::exp(v - mx);
      total += v;
    }
    scratch_total_ = total;
    return mx + std::log(total) - std::log(alpha_ + observed());
  }

  // Normalized label log-probabilities for the next observation.
  std::vector<double> label_logposterior(const Vec<Dim>& z) {
    log_bracket(z);
    std::vector<double> out(scratch_.size());
    const double log_total = std::log(scratch_total_);
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = std::log(scratch_[l]) - log_total;
    return out;
  }

  // Adds z to cluster `label` (label == clusters().size() opens a new
  // cluster whose volume is drawn from Be(omega1, omega2)).
  template <class Engine>
  void update(std::size_t label, const Vec<Dim>& z, Engine& rng) {
    if (label > clusters_.size()) throw std::out_of_range("ReplicateState::update: bad label");
    if (label == clusters_.size())
      clusters_.push_back(ClusterSuffStats<Dim>::empty(sample_mbeta_spectral<Dim>(bm_, rng)));
    clusters_[label].add(z);
    labels_.push_back(static_cast<int>(label));
  }

  // Same, with a given volume for a new cluster.
  void update_with_volume(std::size_t label, const Vec<Dim>& z, const SpectralVolume<Dim>& vol) {
    if (label > clusters_.size()) throw std::out_of_range("ReplicateState::update: bad label");
    if (label == clusters_.size()) clusters_.push_back(ClusterSuffStats<Dim>::empty(vol));
    clusters_[label].add(z);
    labels_.push_back(static_cast<int>(label));
  }

  // One sequential-imputation step: accumulate the log bracket, draw the
  // label from its partial conditional and update. Returns the log bracket.
  template <class Engine>
  double step(const Vec<Dim>& z, Engine& rng) {
    const double lb = log_bracket(z);
    double u = uniform_open(rng) * scratch_total_;
    std::size_t label = scratch_.size() - 1;
    for (std::size_t l = 0; l + 1 < scratch_.size(); ++l) {
      u -= scratch_[l];
      if (u <= 0.0) {
        label = l;
        break;
      }
    }
    update(label, z, rng);
    log_weight_running += lb;
    return lb;
  }

  double log_det_lam() const { return log_det_lam_; }

 private:
  Vec<Dim> mu_;
  Mat<Dim> lam_;
  BaseMeasureParams bm_;
  double alpha_;
  double log_alpha_;
  double log_det_lam_ = 0.0;
  std::vector<ClusterSuffStats<Dim>> clusters_;
  std::vector<int> labels_;
  std::vector<double> scratch_;
  double scratch_total_ = 0.0;
};

// log f^X_{i+1}(x | state): mixture of the anchor normal (weight alpha) and
// the cluster predictives (weights K_l), over alpha + i.
template <int Dim>
double predictive_logdensity(const Vec<Dim>& x, ReplicateState<Dim>& rep) {
  const Vec<Dim> z = rep.standardize(x);
  const double base = -0.5 * static_cast<double>(z.size()) * kLogTwoPi - rep.log_det_lam() -
                      0.5 * z.squaredNorm();
  return base + rep.log_bracket(z);
}

template <int Dim>
std::vector<double> label_logposterior(const Vec<Dim>& x, ReplicateState<Dim>& rep) {
  return rep.label_logposterior(rep.standardize(x));
}

template <int Dim, class Engine>
void update_cluster(ReplicateState<Dim>& rep, std::size_t label, const Vec<Dim>& x, Engine& rng) {
  rep.update(label, rep.standardize(x), rng);
}

// A draw of the anchor (mu, Lambda) with its importance log density.
struct AnchorDraw {
  NormalParams params;
  double logpdf = 0.0;
};

// Importance density for (mu, Lambda).
//  p = 1: Lambda ~ Burr(scale = mle Lambda), mu | Lambda = mu_hat + (Lambda / sqrt n) t_3.
//  p > 1: Sigma ~ InvWishart(max{p, n - p sqrt(n)}, scatter), mu | Sigma ~ N(xbar, Sigma),
//         reported in the Cholesky parameterization (Jacobian 2^p prod Lambda_jj^{p-j+1}).
class AnchorProposal {
 public:
  explicit AnchorProposal(const HaarPosterior& post);

  AnchorDraw sample(Rng& rng) const;
  double logpdf(const NormalParams& params) const;

  double inverse_wishart_df() const { return iw_df_; }
  Eigen::Index dim() const { return xbar_.size(); }

 private:
  Eigen::VectorXd xbar_;
  Eigen::MatrixXd scatter_;
  Eigen::MatrixXd scatter_chol_;
  double n_ = 0.0;
  double iw_df_ = 0.0;
  double lam_hat_ = 0.0;
};

// max{p, n - p sqrt(n)}
double importance_iw_df(Eigen::Index n, Eigen::Index p);

AnchorDraw sample_importance_anchor_univariate(const NormalParams& mle_params, Eigen::Index n, Rng& rng);
double importance_anchor_univariate_logpdf(const NormalParams& params, const NormalParams& mle_params,
                                           Eigen::Index n);
AnchorDraw sample_importance_anchor_multivariate(const DataMatrix& data, Rng& rng);

struct LogBfEstimate {
  double log_bf = 0.0;     // natural log of B = f_H0 / f_H1
  double mc_se_log = 0.0;  // delta-method standard error of log_bf
  int replicates = 0;
  double ess = 0.0;
  double log_marginal_null = 0.0;  // log f_H0(X), exact
  double log_marginal_alt = 0.0;   // log f_H1(X), Monte Carlo (product form)
  std::vector<double> log_weights;
};

struct WeightSummary {
  double log_mean = 0.0;
  double se_log = 0.0;
  double ess = 0.0;
};

WeightSummary summarize_log_weights(std::span<const double> log_w);

struct SisOptions {
  double alpha = 1.0;
  int replicates = 10000;
  std::uint64_t seed = 1;
  int parallelism = 1;
};

// Throws PreconditionError for n < p + 1 or bad options, DegenerateDataError
// for singular scatter and NumericError for a non-finite importance weight.
LogBfEstimate estimate_log_bf(const DataMatrix& data, const SisOptions& options);

inline LogBfEstimate estimate_log_bf(const DataMatrix& data, double alpha, int replicates,
                                     std::uint64_t seed, int parallelism = 1) {
  return estimate_log_bf(data, SisOptions{alpha, replicates, seed, parallelism});
}

// Sequential imputation with the anchor held fixed: returns the M log
// values of prod_i bracket_i, each replicate in a random processing order.
std::vector<double> conditional_log_brackets(const Eigen::MatrixXd& z_cols, double alpha, int replicates,
                                             std::uint64_t seed, int parallelism);

}  // namespace dpmnorm
