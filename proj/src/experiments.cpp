#include "dpmnorm/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dpmnorm/detail/parallel.hpp"
#include "dpmnorm/errors.hpp"

namespace dpmnorm {

namespace {

constexpr double kProbClamp = 1e-15;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Acklam's rational approximation polished by two Halley steps.
double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int k = 0; k < 2; ++k) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double draw_marginal(Distribution d, Rng& rng) {
  switch (d) {
    case Distribution::kNormal:
      return standard_normal(rng);
    case Distribution::kT3:
      return standard_normal(rng) / std::sqrt(chi_square(3.0, rng) / 3.0);
    case Distribution::kSkewNormal: {
      const double delta = kSkewShape / std::sqrt(1.0 + kSkewShape * kSkewShape);
      const double z0 = standard_normal(rng);
      const double z1 = standard_normal(rng);
      return delta * std::abs(z0) + std::sqrt(1.0 - delta * delta) * z1;
    }
    case Distribution::kUniform:
      return 2.0 * uniform_open(rng) - 1.0;
    case Distribution::kCopulaDemo:
      break;
  }
  throw std::invalid_argument("draw_marginal: not a univariate generator");
}

}  // namespace

AlphaGrid AlphaGrid::log2_range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("alpha grid: need lo <= hi and step > 0");
  AlphaGrid g;
  const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int k = 0; k < count; ++k) g.values.push_back(std::exp2(lo + k * step));
  return g;
}

bool AlphaGrid::valid() const {
  if (values.empty()) return false;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) return false;
    if (k > 0 && !(values[k] > values[k - 1])) return false;
  }
  return true;
}

AlphaGrid test_grid() { return AlphaGrid::log2_range(-6, 4, 1); }
AlphaGrid report_grid() { return AlphaGrid::log2_range(-6, 13, 1); }

BfCurve bf_curve(const DataMatrix& data, const AlphaGrid& grid, int replicates, std::uint64_t seed,
                 int parallelism, bool keep_weights) {
  if (!grid.valid()) throw PreconditionError("alpha grid must be positive and strictly increasing");
  BfCurve curve;
  curve.alpha = grid.values;
  curve.min_log_bf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.values.size(); ++j) {
    LogBfEstimate e = estimate_log_bf(
        data, SisOptions{grid.values[j], replicates, derive_seed(seed, Stream::kAlphaPoint, j), parallelism});
    if (!keep_weights) {
      e.log_weights.clear();
      e.log_weights.shrink_to_fit();
    }
    if (e.log_bf < curve.min_log_bf) {
      curve.min_log_bf = e.log_bf;
      curve.argmin_alpha = grid.values[j];
    }
    curve.estimates.push_back(std::move(e));
  }
  return curve;
}

double combine_log_bf(const BfCurve& curve, const std::vector<double>& weights) {
  if (weights.size() != curve.estimates.size())
    throw std::invalid_argument("combine_log_bf: one weight per grid point required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("combine_log_bf: weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("combine_log_bf: weights must sum to one");
  std::vector<double> terms;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (weights[j] > 0.0) terms.push_back(std::log(weights[j]) - curve.estimates[j].log_bf);
  return -log_sum_exp(terms);
}

double anderson_darling(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 8) throw PreconditionError("anderson_darling: need n >= 8");
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateDataError("anderson_darling: zero variance");
  std::vector<double> f(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    f[i] = std::clamp(normal_cdf((x(i) - mean) / sd), kProbClamp, 1.0 - kProbClamp);
  std::sort(f.begin(), f.end());
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    s += (2.0 * i + 1.0) * (std::log(f[i]) + std::log1p(-f[n - 1 - i]));
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

Distribution parse_distribution(std::string_view name) {
  if (name == "normal") return Distribution::kNormal;
  if (name == "t3") return Distribution::kT3;
  if (name == "skewnormal") return Distribution::kSkewNormal;
  if (name == "uniform") return Distribution::kUniform;
  if (name == "copula-demo") return Distribution::kCopulaDemo;
  throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::kNormal: return "normal";
    case Distribution::kT3: return "t3";
    case Distribution::kSkewNormal: return "skewnormal";
    case Distribution::kUniform: return "uniform";
    case Distribution::kCopulaDemo: return "copula-demo";
  }
  return "?";
}

DataMatrix simulate(Distribution d, int n, int p, Rng& rng) {
  if (n < 1 || p < 1) throw std::invalid_argument("simulate: n and p must be positive");
  DataMatrix out(n, p);
  if (d == Distribution::kCopulaDemo) {
    if (p != 2) throw std::invalid_argument("copula-demo generates p = 2 only");
    // Marshall-Olkin: U_j = (1 + E_j / W)^{-1/theta}, W ~ Gamma(1/theta).
    for (int i = 0; i < n; ++i) {
      const double w = gamma_variate(1.0 / kClaytonTheta, rng);
      for (int j = 0; j < 2; ++j) {
        const double e = -std::log(uniform_open(rng));
        const double u = std::pow(1.0 + e / w, -1.0 / kClaytonTheta);
        out(i, j) = normal_quantile(std::clamp(u, kProbClamp, 1.0 - kProbClamp));
      }
    }
    return out;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out(i, j) = draw_marginal(d, rng);
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<RocPoint> roc_curve(const std::vector<double>& null_stats, const std::vector<double>& alt_stats,
                                bool reject_low) {
  std::vector<double> thresholds(null_stats);
  thresholds.insert(thresholds.end(), alt_stats.begin(), alt_stats.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  if (!reject_low) std::reverse(thresholds.begin(), thresholds.end());
  auto frac = [&](const std::vector<double>& s, double t) {
    const auto k = std::count_if(s.begin(), s.end(), [&](double v) { return reject_low ? v <= t : v >= t; });
    return static_cast<double>(k) / static_cast<double>(s.size());
  };
  std::vector<RocPoint> out;
  out.push_back({reject_low ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity(),
                 0.0, 0.0});
  for (double t : thresholds) out.push_back({t, frac(null_stats, t), frac(alt_stats, t)});
  return out;
}

double power_at_size(const std::vector<RocPoint>& roc, double target) {
  double best = 0.0;
  for (const auto& pt : roc)
    if (pt.size <= target + 1e-12) best = std::max(best, pt.power);
  return best;
}

PowerResult power_size_study(const PowerOptions& opt) {
  if (opt.datasets < 1 || opt.n < 8) throw PreconditionError("power study: need datasets >= 1 and n >= 8");
  PowerResult out;
  const auto r = static_cast<std::size_t>(opt.datasets);
  out.null_min_log_bf.resize(r);
  out.alt_min_log_bf.resize(r);
  out.null_ad.resize(r);
  out.alt_ad.resize(r);
  // Task k < R is null dataset k, k >= R is alternative dataset k - R.
  detail::parallel_for(2 * r, opt.parallelism, [&](std::size_t k) {
    const bool is_null = k < r;
    const std::size_t idx = is_null ? k : k - r;
    const Stream family = is_null ? Stream::kNullData : Stream::kAltData;
    Rng rng = substream(opt.seed, family, 2 * idx);
    const DataMatrix x = simulate(is_null ? Distribution::kNormal : opt.alternative, opt.n, 1, rng);
    const BfCurve curve = bf_curve(x, opt.grid, opt.replicates, derive_seed(opt.seed, family, 2 * idx + 1), 1);
    const double ad = anderson_darling(x.col(0));
    (is_null ? out.null_min_log_bf : out.alt_min_log_bf)[idx] = curve.min_log_bf;
    (is_null ? out.null_ad : out.alt_ad)[idx] = ad;
  });
  out.roc_dpm = roc_curve(out.null_min_log_bf, out.alt_min_log_bf, true);
  out.roc_ad = roc_curve(out.null_ad, out.alt_ad, false);
  return out;
}

ConsistencyResult consistency_study(const ConsistencyOptions& opt) {
  if (opt.checkpoints.empty() || opt.paths < 1) throw PreconditionError("consistency: empty design");
  for (std::size_t k = 0; k < opt.checkpoints.size(); ++k)
    if (opt.checkpoints[k] < opt.p + 1 || (k > 0 && opt.checkpoints[k] <= opt.checkpoints[k - 1]))
      throw PreconditionError("consistency: checkpoints must increase and be at least p + 1");
  const int nmax = opt.checkpoints.back();
  const auto paths = static_cast<std::size_t>(opt.paths);
  const std::size_t nk = opt.checkpoints.size();
  ConsistencyResult out;
  out.checkpoints = opt.checkpoints;
  out.log_bf.assign(paths, std::vector<double>(nk));
  out.mc_se.assign(paths, std::vector<double>(nk));
  detail::parallel_for(paths * nk, opt.parallelism, [&](std::size_t task) {
    const std::size_t path = task / nk;
    const std::size_t k = task % nk;
    Rng rng = substream(opt.seed, Stream::kPath, path);
    const DataMatrix full = simulate(Distribution::kNormal, nmax, opt.p, rng);
    const DataMatrix x = full.topRows(opt.checkpoints[k]);
    const LogBfEstimate e = estimate_log_bf(
        x, SisOptions{opt.alpha, opt.replicates, derive_seed(opt.seed, Stream::kCheckpoint, task), 1});
    out.log_bf[path][k] = e.log_bf;
    out.mc_se[path][k] = e.mc_se_log;
  });
  for (std::size_t k = 0; k < nk; ++k) {
    std::vector<double> col(paths);
    for (std::size_t r = 0; r < paths; ++r) col[r] = out.log_bf[r][k];
    CheckpointSummary s;
    s.n = opt.checkpoints[k];
    s.q025 = quantile(col, 0.025);
    s.median = quantile(col, 0.5);
    s.q975 = quantile(col, 0.975);
    s.fraction_positive =
        static_cast<double>(std::count_if(col.begin(), col.end(), [](double v) { return v > 0.0; })) /
        static_cast<double>(paths);
    out.summary.push_back(s);
  }
  return out;
}

BenchSummary summarize_bf(const std::vector<double>& log_bf, const std::vector<double>& seconds) {
  std::vector<double> bf(log_bf.size());
  std::transform(log_bf.begin(), log_bf.end(), bf.begin(), [](double v) { return std::exp(v); });
  BenchSummary s;
  s.mean = std::accumulate(bf.begin(), bf.end(), 0.0) / static_cast<double>(bf.size());
  s.min = *std::min_element(bf.begin(), bf.end());
  s.q1 = quantile(bf, 0.25);
  s.median = quantile(bf, 0.5);
  s.q3 = quantile(bf, 0.75);
  s.max = *std::max_element(bf.begin(), bf.end());
  s.median_seconds = seconds.empty() ? 0.0 : quantile(seconds, 0.5);
  return s;
}

BenchResult estimator_benchmark(const DataMatrix& data, const BenchOptions& opt) {
  if (data.cols() != 1) throw PreconditionError("benchmark: univariate data only");
  if (opt.runs < 1) throw PreconditionError("benchmark: runs must be positive");
  using Clock = std::chrono::steady_clock;
  BenchResult out;
  std::vector<double> sis_lbf, bc_lbf, sis_sec, bc_sec;
  for (int r = 0; r < opt.runs; ++r) {
    BenchRun run;
    const auto t0 = Clock::now();
    const LogBfEstimate sis = estimate_log_bf(
        data, SisOptions{opt.alpha, opt.replicates, derive_seed(opt.seed, Stream::kBenchSis, r), opt.parallelism});
    const auto t1 = Clock::now();
    const BasuChibEstimate bc = estimate_log_bf_bc(
        data, BasuChibOptions{opt.alpha, opt.replicates, opt.gibbs_iters,
                              derive_seed(opt.seed, Stream::kBenchBasuChib, r), opt.parallelism});
    const auto t2 = Clock::now();
    run.sis_log_bf = sis.log_bf;
    run.sis_se = sis.mc_se_log;
    run.sis_seconds = std::chrono::duration<double>(t1 - t0).count();
    run.bc_log_bf = bc.estimate.log_bf;
    run.bc_se = bc.estimate.mc_se_log;
    run.bc_seconds = std::chrono::duration<double>(t2 - t1).count();
    sis_lbf.push_back(run.sis_log_bf);
    bc_lbf.push_back(run.bc_log_bf);
    sis_sec.push_back(run.sis_seconds);
    bc_sec.push_back(run.bc_seconds);
    out.runs.push_back(run);
  }
  out.sis = summarize_bf(sis_lbf, sis_sec);
  out.bc = summarize_bf(bc_lbf, bc_sec);
  return out;
}

}  // namespace dpmnorm
