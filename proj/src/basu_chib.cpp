#include "dpmnorm/basu_chib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpmnorm/distributions.hpp"
#include "dpmnorm/errors.hpp"
#include "dpmnorm/null_model.hpp"

namespace dpmnorm {

namespace {

constexpr double kSliceWidth = 2.0;
constexpr int kSliceMaxSteps = 50;
constexpr int kOrdinateBatches = 20;

double draw_volume(const BaseMeasureParams& bm, Rng& rng) {
  for (;;) {
    const double a = chi_square(2.0 * bm.omega1, rng);
    const double b = chi_square(2.0 * bm.omega2, rng);
    const double v = a / (a + b);
    if (v > kSpectrumFloor && b / (a + b) > kSpectrumFloor) return v;
  }
}

double chi_square_logpdf(double y, double k) {
  return (0.5 * k - 1.0) * std::log(y) - 0.5 * y - 0.5 * k * std::log(2.0) - std::lgamma(0.5 * k);
}

void remove_cluster(GibbsState& s, int c) {
  const int last = s.clusters() - 1;
  if (c != last) {
    s.counts[c] = s.counts[last];
    s.sum[c] = s.sum[last];
    s.sum_sq[c] = s.sum_sq[last];
    s.v[c] = s.v[last];
    for (int& l : s.labels)
      if (l == last) l = c;
  }
  s.counts.pop_back();
  s.sum.pop_back();
  s.sum_sq.pop_back();
  s.v.pop_back();
}

struct AnchorConditional {
  double a = 0.0;
  double mu0 = 0.0;
  double qmin = 0.0;
  int n = 0;
};

AnchorConditional anchor_conditional(const GibbsState& s) {
  AnchorConditional out;
  double wx = 0.0;
  std::vector<double> w(s.counts.size());
  for (std::size_t c = 0; c < s.counts.size(); ++c) {
    const double k = s.counts[c];
    w[c] = k / (s.v[c] + k * (1.0 - s.v[c]));
    out.a += w[c];
    wx += w[c] * s.sum[c] / k;
    out.n += s.counts[c];
  }
  out.mu0 = wx / out.a;
  for (std::size_t c = 0; c < s.counts.size(); ++c) {
    const double k = s.counts[c];
    const double xbar = s.sum[c] / k;
    const double ss = std::max(0.0, s.sum_sq[c] - s.sum[c] * xbar);
    out.qmin += ss / s.v[c] + w[c] * (xbar - out.mu0) * (xbar - out.mu0);
  }
  return out;
}

// log of Be(v) N_K(z | 0, v I + (1 - v) 1 1^T) v (1 - v) at v = logistic(t),
// up to a constant; zbar and ss are the standardized cluster mean and
// within-cluster sum of squares.
double volume_log_target(double t, double k, double zbar, double ss, const BaseMeasureParams& bm) {
  const double log_v = -std::log1p(std::exp(-t));
  const double log_c = -std::log1p(std::exp(t));
  const double v = std::exp(log_v);
  const double c = std::exp(log_c);
  const double d = v + k * c;
  return bm.omega1 * log_v + bm.omega2 * log_c - 0.5 * ((k - 1.0) * log_v + std::log(d)) -
         0.5 * (ss / v + k * zbar * zbar / d);
}

template <class F>
double slice_sample(double x0, F&& logf, Rng& rng) {
  const double f0 = logf(x0);
  const double level = f0 + std::log(uniform_open(rng));
  double lo = x0 - kSliceWidth * uniform_open(rng);
  double hi = lo + kSliceWidth;
  for (int j = 0; j < kSliceMaxSteps && logf(lo) > level; ++j) lo -= kSliceWidth;
  for (int j = 0; j < kSliceMaxSteps && logf(hi) > level; ++j) hi += kSliceWidth;
  for (;;) {
    const double x1 = lo + uniform_open(rng) * (hi - lo);
    if (logf(x1) > level) return x1;
    if (x1 < x0) lo = x1;
    else hi = x1;
    if (hi - lo < 1e-14) return x0;
  }
}

double median(std::vector<double> v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double upper = v[m];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lower + upper);
}

}  // namespace

GibbsState gibbs_init(const Eigen::VectorXd& x, double alpha, GibbsInit mode, Rng& rng) {
  const BaseMeasureParams bm = omega_from_alpha(alpha, 1);
  const auto n = x.size();
  GibbsState s;
  s.mu = x.mean();
  s.lam = std::sqrt((x.array() - s.mu).square().sum() / static_cast<double>(n));
  if (!(s.lam > 0.0)) throw DegenerateDataError("gibbs_init: data have zero spread");
  if (mode == GibbsInit::kOneCluster) {
    s.labels.assign(static_cast<std::size_t>(n), 0);
    s.counts = {static_cast<int>(n)};
    s.sum = {x.sum()};
    s.sum_sq = {x.squaredNorm()};
    s.v = {draw_volume(bm, rng)};
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      s.labels.push_back(static_cast<int>(i));
      s.counts.push_back(1);
      s.sum.push_back(x(i));
      s.sum_sq.push_back(x(i) * x(i));
      s.v.push_back(draw_volume(bm, rng));
    }
  }
  return s;
}

void gibbs_sweep(GibbsState& s, const Eigen::VectorXd& x, double alpha, Rng& rng) {
  const BaseMeasureParams bm = omega_from_alpha(alpha, 1);
  const double log_alpha = std::log(alpha);
  std::vector<double> lw;

  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    int c = s.labels[static_cast<std::size_t>(i)];
    --s.counts[c];
    s.sum[c] -= xi;
    s.sum_sq[c] -= xi * xi;
    if (s.counts[c] == 0) remove_cluster(s, c);

    const double z = (xi - s.mu) / s.lam;
    const int nc = s.clusters();
    lw.resize(static_cast<std::size_t>(nc) + 1);
    for (int l = 0; l < nc; ++l) {
      const double k = s.counts[l];
      const double sz = (s.sum[l] - k * s.mu) / s.lam;
      const double comp = 1.0 - s.v[l];
      const double denom = s.v[l] + k * comp;
      const double m = comp * sz / denom;
      const double var = s.v[l] * (1.0 + k * comp) / denom;
      lw[l] = std::log(k) - 0.5 * std::log(var) - 0.5 * (z - m) * (z - m) / var;
    }
    lw[nc] = log_alpha - 0.5 * z * z;
    const double mx = *std::max_element(lw.begin(), lw.end());
    double total = 0.0;
    for (double& w : lw) total += (w = std::exp(w - mx));
    double u = uniform_open(rng) * total;
    int label = nc;
    for (int l = 0; l < nc; ++l) {
      u -= lw[l];
      if (u <= 0.0) {
        label = l;
        break;
      }
    }
    if (label == nc) {
      s.counts.push_back(0);
      s.sum.push_back(0.0);
      s.sum_sq.push_back(0.0);
      s.v.push_back(draw_volume(bm, rng));
    }
    ++s.counts[label];
    s.sum[label] += xi;
    s.sum_sq[label] += xi * xi;
    s.labels[static_cast<std::size_t>(i)] = label;
  }

  for (int l = 0; l < s.clusters(); ++l) {
    const double k = s.counts[l];
    const double xbar = s.sum[l] / k;
    const double zbar = (xbar - s.mu) / s.lam;
    const double ss = std::max(0.0, s.sum_sq[l] - s.sum[l] * xbar) / (s.lam * s.lam);
    const double t0 = std::log(s.v[l]) - std::log1p(-s.v[l]);
    const double t = slice_sample(t0, [&](double t) { return volume_log_target(t, k, zbar, ss, bm); }, rng);
    const double v = 1.0 / (1.0 + std::exp(-t));
    if (v > kSpectrumFloor && 1.0 - v > kSpectrumFloor) s.v[l] = v;
  }

  const AnchorConditional ac = anchor_conditional(s);
  s.lam = std::sqrt(ac.qmin / chi_square(ac.n - 1.0, rng));
  s.mu = ac.mu0 + s.lam / std::sqrt(ac.a) * standard_normal(rng);
  ++s.iteration;
}

double anchor_conditional_logpdf(const GibbsState& state, double mu, double lam) {
  const AnchorConditional ac = anchor_conditional(state);
  const double sd = lam / std::sqrt(ac.a);
  const double r = (mu - ac.mu0) / sd;
  const double y = ac.qmin / (lam * lam);
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * r * r + chi_square_logpdf(y, ac.n - 1.0) +
         std::log(2.0 * y / lam);
}

BasuChibEstimate estimate_log_bf_bc(const DataMatrix& data, const BasuChibOptions& opt) {
  if (data.cols() != 1) throw PreconditionError("the ordinate estimator is univariate only");
  if (opt.replicates < 1 || opt.gibbs_iters < 10)
    throw PreconditionError("need replicates >= 1 and gibbs_iters >= 10");
  if (!(opt.alpha > 0.0) || !std::isfinite(opt.alpha))
    throw PreconditionError("alpha must be positive and finite");
  const HaarPosterior original = make_haar_posterior(data);
  const CanonicalFrame frame = canonical_frame(data);
  const Eigen::VectorXd x = frame.y.row(0).transpose();
  const HaarPosterior post = make_haar_posterior(x);
  const int burn = static_cast<int>(kBurnInFraction * opt.gibbs_iters);

  Rng rng = substream(opt.seed, Stream::kGibbs, 0);
  GibbsState state = gibbs_init(x, opt.alpha, GibbsInit::kOneCluster, rng);
  std::vector<double> mus, lams;
  mus.reserve(static_cast<std::size_t>(opt.gibbs_iters - burn));
  lams.reserve(mus.capacity());
  for (int it = 0; it < opt.gibbs_iters; ++it) {
    gibbs_sweep(state, x, opt.alpha, rng);
    if (it >= burn) {
      mus.push_back(state.mu);
      lams.push_back(state.lam);
    }
  }

  BasuChibEstimate out;
  out.mu_star = median(mus);
  out.lam_star = median(lams);

  rng = substream(opt.seed, Stream::kGibbs, 1);
  std::vector<double> log_ord;
  log_ord.reserve(mus.size());
  for (int it = 0; it < opt.gibbs_iters; ++it) {
    gibbs_sweep(state, x, opt.alpha, rng);
    if (it >= burn) log_ord.push_back(anchor_conditional_logpdf(state, out.mu_star, out.lam_star));
  }
  const double ord_max = *std::max_element(log_ord.begin(), log_ord.end());
  const double ord_lse = log_sum_exp(log_ord);
  out.log_ordinate_alt = ord_lse - std::log(static_cast<double>(log_ord.size()));
  // Batch means for the autocorrelated ordinate average.
  double ord_se_log = 0.0;
  {
    const std::size_t b = log_ord.size() / kOrdinateBatches;
    if (b > 0) {
      std::vector<double> means(kOrdinateBatches, 0.0);
      for (int k = 0; k < kOrdinateBatches; ++k)
        for (std::size_t j = 0; j < b; ++j) means[k] += std::exp(log_ord[k * b + j] - ord_max);
      double m = 0.0;
      for (double& v : means) m += (v /= static_cast<double>(b));
      m /= kOrdinateBatches;
      double var = 0.0;
      for (double v : means) var += (v - m) * (v - m);
      var /= kOrdinateBatches - 1.0;
      ord_se_log = std::sqrt(var / kOrdinateBatches) / m;
    }
  }

  NormalParams star{Eigen::VectorXd::Constant(1, out.mu_star), Eigen::MatrixXd::Constant(1, 1, out.lam_star)};
  out.log_ordinate_null = haar_posterior_logpdf(star, post);
  const Eigen::MatrixXd z = ((x.array() - out.mu_star) / out.lam_star).matrix().transpose();
  const std::vector<double> lb =
      conditional_log_brackets(z, opt.alpha, opt.replicates, derive_seed(opt.seed, Stream::kPath, 0),
                               opt.parallelism);
  const WeightSummary ws = summarize_log_weights(lb);
  out.log_lik_ratio = ws.log_mean;

  const double log_inv_bf = out.log_ordinate_null + out.log_lik_ratio - out.log_ordinate_alt;
  if (!std::isfinite(log_inv_bf)) throw NumericError("non-finite ordinate estimate");
  LogBfEstimate& e = out.estimate;
  e.log_bf = -log_inv_bf;
  e.mc_se_log = std::sqrt(ws.se_log * ws.se_log + ord_se_log * ord_se_log);
  e.replicates = opt.replicates;
  e.ess = ws.ess;
  e.log_marginal_null = original.log_marginal;
  e.log_marginal_alt = original.log_marginal - e.log_bf;
  e.log_weights = lb;
  return out;
}

}  // namespace dpmnorm
