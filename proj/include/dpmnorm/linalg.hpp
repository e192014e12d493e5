#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace dpmnorm {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

// Observations are rows: n x p.
using DataMatrix = Eigen::MatrixXd;

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kLogPi = 1.1447298858494001741;

// log(sum(exp(v))) with the running-max shift.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// Sum of log-diagonal of a triangular factor, i.e. log|det|.
template <class Derived>
double log_abs_det_triangular(const Eigen::MatrixBase<Derived>& t) {
  return t.diagonal().array().abs().log().sum();
}

template <class Derived>
bool is_lower_positive(const Eigen::MatrixBase<Derived>& lam) {
  if (lam.rows() != lam.cols()) return false;
  for (Eigen::Index j = 0; j < lam.cols(); ++j) {
    if (!(lam(j, j) > 0.0) || !std::isfinite(lam(j, j))) return false;
    for (Eigen::Index i = 0; i < j; ++i)
      if (lam(i, j) != 0.0) return false;
  }
  return true;
}

}  // namespace dpmnorm
