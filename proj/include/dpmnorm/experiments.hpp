#pragma once

// Bayes factor curves over alpha, the Anderson-Darling competitor, data
// generators and the three studies (power/size, consistency, estimator
// benchmark).

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpmnorm/basu_chib.hpp"
#include "dpmnorm/random.hpp"
#include "dpmnorm/sis_estimator.hpp"

namespace dpmnorm {

struct AlphaGrid {
  std::vector<double> values;

  // 2^lo, 2^(lo + step), ..., up to 2^hi inclusive.
  static AlphaGrid log2_range(double lo, double hi, double step = 1.0);
  bool valid() const;
};

// Grid used for the minimum-BF test statistic, and the curve reporting default.
AlphaGrid test_grid();
AlphaGrid report_grid();

struct BfCurve {
  std::vector<double> alpha;
  std::vector<LogBfEstimate> estimates;
  double min_log_bf = 0.0;
  double argmin_alpha = 0.0;
};

// Grid point j uses seed derive_seed(seed, kAlphaPoint, j). Per-replicate
// log weights are dropped unless keep_weights is set.
BfCurve bf_curve(const DataMatrix& data, const AlphaGrid& grid, int replicates, std::uint64_t seed,
                 int parallelism = 1, bool keep_weights = false);

// log of [sum_j w_j B_j^{-1}]^{-1}.
double combine_log_bf(const BfCurve& curve, const std::vector<double>& weights);

// A^2 with mean and variance estimated from the sample. Needs n >= 8.
double anderson_darling(const Eigen::VectorXd& x);

enum class Distribution { kNormal, kT3, kSkewNormal, kUniform, kCopulaDemo };

Distribution parse_distribution(std::string_view name);
std::string_view distribution_name(Distribution d);

inline constexpr double kSkewShape = 10.0;
inline constexpr double kClaytonTheta = 5.0;

// n x p sample; coordinates are independent except for the copula demo
// (p = 2, Clayton copula with normal margins).
DataMatrix simulate(Distribution d, int n, int p, Rng& rng);

// Type 7 sample quantile.
double quantile(std::vector<double> v, double q);

struct RocPoint {
  double threshold = 0.0;
  double size = 0.0;
  double power = 0.0;
};

// Rejection when stat <= threshold (reject_low) or stat >= threshold.
std::vector<RocPoint> roc_curve(const std::vector<double>& null_stats, const std::vector<double>& alt_stats,
                                bool reject_low);

// Largest power among curve points with size <= target.
double power_at_size(const std::vector<RocPoint>& roc, double target);

struct PowerOptions {
  Distribution alternative = Distribution::kT3;
  int n = 100;
  int datasets = 100;
  int replicates = 1000;
  AlphaGrid grid = test_grid();
  std::uint64_t seed = 1;
  int parallelism = 1;
};

struct PowerResult {
  std::vector<double> null_min_log_bf, alt_min_log_bf;
  std::vector<double> null_ad, alt_ad;
  std::vector<RocPoint> roc_dpm, roc_ad;
};

PowerResult power_size_study(const PowerOptions& options);

struct ConsistencyOptions {
  std::vector<int> checkpoints{100, 500, 2000};
  int paths = 20;
  double alpha = 1.0;
  int replicates = 1000;
  int p = 1;
  std::uint64_t seed = 1;
  int parallelism = 1;
};

struct CheckpointSummary {
  int n = 0;
  double q025 = 0.0, median = 0.0, q975 = 0.0;
  double fraction_positive = 0.0;  // fraction of paths with B > 1
};

struct ConsistencyResult {
  std::vector<int> checkpoints;
  std::vector<std::vector<double>> log_bf;  // [path][checkpoint]
  std::vector<std::vector<double>> mc_se;
  std::vector<CheckpointSummary> summary;
};

ConsistencyResult consistency_study(const ConsistencyOptions& options);

struct BenchOptions {
  double alpha = 1.0;
  int runs = 100;
  int replicates = 10000;
  int gibbs_iters = 10000;
  std::uint64_t seed = 1;
  int parallelism = 1;
};

struct BenchRun {
  double sis_log_bf = 0.0, sis_se = 0.0, sis_seconds = 0.0;
  double bc_log_bf = 0.0, bc_se = 0.0, bc_seconds = 0.0;
};

// Summary of the Bayes factor values (not logs) across runs.
struct BenchSummary {
  double mean = 0.0, min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double iqr() const { return q3 - q1; }
  double median_seconds = 0.0;
};

struct BenchResult {
  std::vector<BenchRun> runs;
  BenchSummary sis, bc;
};

BenchResult estimator_benchmark(const DataMatrix& data, const BenchOptions& options);

BenchSummary summarize_bf(const std::vector<double>& log_bf, const std::vector<double>& seconds);

}  // namespace dpmnorm
