#include "dpmnorm/dpm_prior.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "dpmnorm/detail/parallel.hpp"

namespace dpmnorm {

namespace {

// Components further than this many sd from a grid point are not evaluated.
constexpr double kWindowSd = 12.0;

double beta_variate(double a, double b, Rng& rng) {
  const double x = gamma_variate(a, rng);
  const double y = gamma_variate(b, rng);
  return x / (x + y);
}

std::vector<int> sorted_sizes(std::vector<int> counts) {
  counts.erase(std::remove(counts.begin(), counts.end(), 0), counts.end());
  std::sort(counts.begin(), counts.end(), std::greater<>());
  return counts;
}

}  // namespace

int stick_breaking_truncation(double alpha, double eps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("truncation: alpha must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("truncation: eps must be in (0, 1)");
  const double h = std::ceil(std::log(eps) / std::log(alpha / (alpha + 1.0)));
  return std::max(1, static_cast<int>(h));
}

StickBreakingDraw draw_prior(const NormalParams& anchor, double alpha, double eps, Rng& rng) {
  if (!anchor.valid()) throw std::invalid_argument("draw_prior: invalid anchor");
  const int h = stick_breaking_truncation(alpha, eps);
  const BaseMeasureParams bm = omega_from_alpha(alpha, static_cast<int>(anchor.dim()));
  StickBreakingDraw out;
  out.anchor = anchor;
  out.weights.reserve(static_cast<std::size_t>(h));
  out.atoms.reserve(static_cast<std::size_t>(h));
  double remaining = 1.0;
  for (int k = 0; k < h; ++k) {
    const double b = beta_variate(1.0, alpha, rng);
    out.weights.push_back(remaining * b);
    remaining *= 1.0 - b;
    out.atoms.push_back(sample_base_measure(bm, rng));
  }
  out.residual = remaining;
  return out;
}

double prior_draw_logdensity(const StickBreakingDraw& draw, const Eigen::VectorXd& x) {
  const auto& a = draw.anchor;
  std::vector<double> terms;
  terms.reserve(draw.atoms.size() + 1);
  for (std::size_t h = 0; h < draw.atoms.size(); ++h) {
    const Eigen::LLT<Eigen::MatrixXd> llt(draw.atoms[h].v);
    const Eigen::MatrixXd lam = a.lam * Eigen::MatrixXd(llt.matrixL());
    // Lambda chol(V) is lower triangular, so it is the Cholesky factor of Lambda V Lambda^T.
    terms.push_back(std::log(draw.weights[h]) + mvn_logpdf(x, Eigen::VectorXd(a.mu + a.lam * draw.atoms[h].u), lam));
  }
  if (draw.residual > 0.0) terms.push_back(std::log(draw.residual) + mvn_logpdf(x, a.mu, a.lam));
  return log_sum_exp(terms);
}

Eigen::VectorXd prior_draw_density(const StickBreakingDraw& draw, const Eigen::VectorXd& grid) {
  if (draw.anchor.dim() != 1) throw std::invalid_argument("prior_draw_density: p must be 1");
  const double mu = draw.anchor.mu(0);
  const double lam = draw.anchor.lam(0, 0);
  const double c = -0.5 * kLogTwoPi;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  const bool sorted = std::is_sorted(grid.data(), grid.data() + grid.size());
  auto add_component = [&](double weight, double m, double s) {
    if (weight <= 0.0) return;
    Eigen::Index lo = 0, hi = grid.size();
    if (sorted) {
      lo = std::lower_bound(grid.data(), grid.data() + grid.size(), m - kWindowSd * s) - grid.data();
      hi = std::upper_bound(grid.data(), grid.data() + grid.size(), m + kWindowSd * s) - grid.data();
    }
    const double lw = std::log(weight) + c - std::log(s);
    for (Eigen::Index g = lo; g < hi; ++g) {
      const double z = (grid(g) - m) / s;
      out(g) += std::exp(lw - 0.5 * z * z);
    }
  };
  for (std::size_t h = 0; h < draw.atoms.size(); ++h)
    add_component(draw.weights[h], mu + lam * draw.atoms[h].u(0), lam * std::sqrt(draw.atoms[h].v(0, 0)));
  add_component(draw.residual, mu, lam);
  return out;
}

MeanDensity prior_mean_density(const NormalParams& anchor, double alpha, const Eigen::VectorXd& grid,
                               int replicates, std::uint64_t seed, double eps, int parallelism) {
  if (replicates < 2) throw std::invalid_argument("prior_mean_density: need at least two replicates");
  std::vector<Eigen::VectorXd> dens(static_cast<std::size_t>(replicates));
  detail::parallel_for(dens.size(), parallelism, [&](std::size_t r) {
    Rng rng = substream(seed, Stream::kPrior, r);
    dens[r] = prior_draw_density(draw_prior(anchor, alpha, eps, rng), grid);
  });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(grid.size());
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(grid.size());
  for (const auto& d : dens) {
    sum += d;
    sum_sq += d.cwiseAbs2();
  }
  const double r = static_cast<double>(replicates);
  MeanDensity out;
  out.mean = sum / r;
  const Eigen::VectorXd var = ((sum_sq - r * out.mean.cwiseAbs2()) / (r - 1.0)).cwiseMax(0.0);
  out.se = (var / r).cwiseSqrt();
  return out;
}

bool UrnState::valid() const {
  std::vector<int> seen;
  int next = 0;
  for (int l : labels) {
    if (l < 0 || l > next) return false;
    if (l == next) {
      seen.push_back(0);
      ++next;
    }
    ++seen[static_cast<std::size_t>(l)];
  }
  return seen == counts;
}

std::vector<double> urn_transition(const UrnState& state, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("urn_transition: alpha must be positive");
  const double denom = alpha + state.size();
  std::vector<double> p;
  p.reserve(state.counts.size() + 1);
  for (int k : state.counts) p.push_back(k / denom);
  p.push_back(alpha / denom);
  return p;
}

int urn_step(UrnState& state, double alpha, Rng& rng) {
  const std::vector<double> p = urn_transition(state, alpha);
  double u = uniform_open(rng);
  int label = static_cast<int>(p.size()) - 1;
  for (std::size_t l = 0; l + 1 < p.size(); ++l) {
    u -= p[l];
    if (u <= 0.0) {
      label = static_cast<int>(l);
      break;
    }
  }
  if (label == state.clusters()) state.counts.push_back(0);
  ++state.counts[static_cast<std::size_t>(label)];
  state.labels.push_back(label);
  return label;
}

std::vector<int> urn_partition(int n, double alpha, Rng& rng) {
  UrnState s;
  for (int i = 0; i < n; ++i) urn_step(s, alpha, rng);
  return sorted_sizes(s.counts);
}

std::vector<int> stick_breaking_partition(int n, double alpha, Rng& rng) {
  // Sticks are broken lazily until the uniform draw lands inside the
  // broken part, so no truncation is involved.
  std::vector<double> cum;
  double remaining = 1.0;
  std::vector<int> counts;
  for (int i = 0; i < n; ++i) {
    const double u = uniform_open(rng);
    while (cum.empty() || u > cum.back()) {
      const double b = beta_variate(1.0, alpha, rng);
      cum.push_back((cum.empty() ? 0.0 : cum.back()) + remaining * b);
      remaining *= 1.0 - b;
      counts.push_back(0);
      if (remaining <= 0.0) break;
    }
    const auto h = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    ++counts[static_cast<std::size_t>(std::min<std::ptrdiff_t>(h, static_cast<std::ptrdiff_t>(counts.size()) - 1))];
  }
  return sorted_sizes(counts);
}

double expected_cluster_count(int n, double alpha) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += alpha / (alpha + i);
  return s;
}

}  // namespace dpmnorm
