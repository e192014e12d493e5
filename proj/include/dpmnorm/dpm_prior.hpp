#pragma once

// Draws from the local alternative DPM_{mu,Lambda}(alpha, Psi) by truncated
// stick-breaking, and the Polya urn that the same prior induces on labels.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dpmnorm/distributions.hpp"
#include "dpmnorm/random.hpp"

namespace dpmnorm {

inline constexpr double kDefaultResidualTolerance = 1e-10;

struct StickBreakingDraw {
  std::vector<double> weights;
  std::vector<ShiftVolumeDraw> atoms;
  double residual = 0.0;  // mass folded into the anchor normal
  NormalParams anchor;

  int truncation() const { return static_cast<int>(weights.size()); }
};

// ceil(log eps / log(alpha / (alpha + 1))), at least 1.
int stick_breaking_truncation(double alpha, double eps);

StickBreakingDraw draw_prior(const NormalParams& anchor, double alpha, double eps, Rng& rng);

// Density of the drawn mixture at x:
//   sum_h q_h N(x | mu + Lambda U_h, Lambda V_h Lambda^T) + residual N(x | mu, Lambda Lambda^T).
double prior_draw_logdensity(const StickBreakingDraw& draw, const Eigen::VectorXd& x);

// p = 1 density on a grid of points.
Eigen::VectorXd prior_draw_density(const StickBreakingDraw& draw, const Eigen::VectorXd& grid);

struct MeanDensity {
  Eigen::VectorXd mean;
  Eigen::VectorXd se;  // pointwise Monte Carlo standard error
};

// Pointwise average of R prior draw densities (p = 1); draw r uses substream r.
MeanDensity prior_mean_density(const NormalParams& anchor, double alpha, const Eigen::VectorXd& grid,
                               int replicates, std::uint64_t seed, double eps = kDefaultResidualTolerance,
                               int parallelism = 1);

struct UrnState {
  std::vector<int> labels;  // 0-based
  std::vector<int> counts;

  int size() const { return static_cast<int>(labels.size()); }
  int clusters() const { return static_cast<int>(counts.size()); }
  bool valid() const;
};

// P(S_{i+1} = l | S_{1:i}): K_l / (alpha + i) for existing l, alpha / (alpha + i) last.
std::vector<double> urn_transition(const UrnState& state, double alpha);

int urn_step(UrnState& state, double alpha, Rng& rng);

// Cluster sizes sorted in decreasing order.
std::vector<int> urn_partition(int n, double alpha, Rng& rng);
std::vector<int> stick_breaking_partition(int n, double alpha, Rng& rng);

// sum_{i<n} alpha / (alpha + i)
double expected_cluster_count(int n, double alpha);

}  // namespace dpmnorm
