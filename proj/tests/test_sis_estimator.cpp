#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

#include "dpmnorm/errors.hpp"
#include "dpmnorm/null_model.hpp"
#include "dpmnorm/sis_estimator.hpp"
#include "oracles/partition_oracle.hpp"
#include "support.hpp"

using namespace dpmnorm;
using boost::math::quadrature::gauss_kronrod;

namespace {

const std::vector<double> kOracleData = {-1.2, -0.3, 0.4, 1.5};

DataMatrix column(const std::vector<double>& x) {
  DataMatrix d(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) d(static_cast<Eigen::Index>(i), 0) = x[i];
  return d;
}

DataMatrix gaussian_data(int n, int p, Rng& rng) {
  DataMatrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = standard_normal(rng);
  return x;
}

// Random volume with spectrum inside (0.05, 0.95).
template <int Dim>
SpectralVolume<Dim> random_volume(int p, Rng& rng) {
  Mat<Dim> a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Mat<Dim>> qr(a);
  SpectralVolume<Dim> v;
  v.basis = qr.householderQ();
  v.eig.resize(p);
  v.comp.resize(p);
  for (int j = 0; j < p; ++j) {
    v.eig(j) = 0.05 + 0.9 * uniform_open(rng);
    v.comp(j) = 1.0 - v.eig(j);
  }
  return v;
}

template <int Dim>
SpectralVolume<Dim> identity_volume(int p) {
  SpectralVolume<Dim> v;
  v.basis = Mat<Dim>::Identity(p, p);
  v.eig = Vec<Dim>::Ones(p);
  v.comp = Vec<Dim>::Zero(p);
  return v;
}

template <int Dim>
Vec<Dim> random_vec(int p, Rng& rng) {
  Vec<Dim> z(p);
  for (int j = 0; j < p; ++j) z(j) = standard_normal(rng);
  return z;
}

// Conjugate Gaussian oracle: U ~ N(0, I - V), z_j | U ~ N(U, V).
template <int Dim>
void conjugate_predictive(const Mat<Dim>& v, const std::vector<Vec<Dim>>& zs, Vec<Dim>& mean, Mat<Dim>& cov) {
  const int p = static_cast<int>(v.rows());
  const Mat<Dim> eye = Mat<Dim>::Identity(p, p);
  const Mat<Dim> vinv = v.inverse();
  Vec<Dim> s = Vec<Dim>::Zero(p);
  for (const auto& z : zs) s += z;
  const Mat<Dim> prec = (eye - v).inverse() + static_cast<double>(zs.size()) * vinv;
  const Mat<Dim> post_cov = prec.inverse();
  mean = post_cov * vinv * s;
  cov = v + post_cov;
}

template <int Dim>
void check_conjugate(int p, Rng& rng) {
  for (int rep = 0; rep < 10; ++rep) {
    const auto vol = random_volume<Dim>(p, rng);
    const Mat<Dim> v = vol.matrix();
    auto cl = ClusterSuffStats<Dim>::empty(vol);
    std::vector<Vec<Dim>> zs;
    for (int k = 0; k < 1 + rep % 4; ++k) {
      zs.push_back(random_vec<Dim>(p, rng));
      cl.add(zs.back());
    }
    Vec<Dim> m;
    Mat<Dim> c;
    conjugate_predictive<Dim>(v, zs, m, c);
    CHECK((cl.predictive_mean() - m).norm() < 1e-10);
    CHECK((cl.predictive_cov() - c).norm() < 1e-10);
    const Vec<Dim> z = random_vec<Dim>(p, rng);
    const Mat<Dim> lc = c.llt().matrixL();
    const double expect = mvn_logpdf(z, m, lc) - mvn_logpdf(z, Vec<Dim>::Zero(p), Mat<Dim>::Identity(p, p));
    CHECK(cl.log_ratio(z, 0.5 * z.squaredNorm()) == doctest::Approx(expect).epsilon(1e-10));
  }
}

}  // namespace

TEST_CASE("predictive with no data is the anchor normal") {
  Rng rng(1);
  Vec<2> mu(0.3, -1.0);
  Mat<2> lam;
  lam << 1.2, 0.0, 0.4, 0.8;
  const auto bm = omega_from_alpha(2.0, 2);
  ReplicateState<2> rep(mu, lam, bm, 2.0);
  for (int k = 0; k < 5; ++k) {
    const Vec<2> x = random_vec<2>(2, rng);
    CHECK(predictive_logdensity<2>(x, rep) == doctest::Approx(mvn_logpdf(x, mu, lam)).epsilon(1e-13));
  }
  const auto lp = label_logposterior<2>(Vec<2>(0.1, 0.2), rep);
  REQUIRE(lp.size() == 1);
  CHECK(lp[0] == doctest::Approx(0.0));
}

TEST_CASE("a cluster with V = I predicts the anchor normal") {
  Rng rng(2);
  for (int p = 1; p <= 3; ++p) {
    auto cl = ClusterSuffStats<Eigen::Dynamic>::empty(identity_volume<Eigen::Dynamic>(p));
    for (int k = 0; k < 3; ++k) cl.add(random_vec<Eigen::Dynamic>(p, rng));
    CHECK(cl.predictive_mean().norm() == 0.0);
    CHECK((cl.predictive_cov() - Eigen::MatrixXd::Identity(p, p)).norm() < 1e-15);
    const Eigen::VectorXd z = random_vec<Eigen::Dynamic>(p, rng);
    CHECK(std::abs(cl.log_ratio(z, 0.5 * z.squaredNorm())) < 1e-14);
  }
  // K = 0 cluster with arbitrary V: predictive is N(0, V + (I - V)) = N(0, I).
  const auto vol = random_volume<2>(2, rng);
  const auto cl = ClusterSuffStats<2>::empty(vol);
  CHECK((cl.predictive_cov() - Mat<2>::Identity()).norm() < 1e-14);
}

TEST_CASE("cluster predictive equals the conjugate Gaussian update") {
  Rng rng(3);
  check_conjugate<1>(1, rng);
  check_conjugate<2>(2, rng);
  check_conjugate<3>(3, rng);
  check_conjugate<Eigen::Dynamic>(4, rng);
}

TEST_CASE("cluster predictive at p = 1 against quadrature over the shift") {
  const double v = 0.3;
  const std::vector<double> zs = {0.4, 1.1, -0.2};
  SpectralVolume<1> vol;
  vol.basis = Mat<1>::Identity();
  vol.eig = Vec<1>::Constant(v);
  vol.comp = Vec<1>::Constant(1.0 - v);
  auto cl = ClusterSuffStats<1>::empty(vol);
  for (double z : zs) cl.add(Vec<1>::Constant(z));
  auto npdf = [](double x, double m, double var) {
    return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2 * std::numbers::pi * var);
  };
  auto joint = [&](double znew, bool with_new) {
    return gauss_kronrod<double, 61>::integrate(
        [&](double u) {
          double f = npdf(u, 0.0, 1.0 - v);
          for (double z : zs) f *= npdf(z, u, v);
          if (with_new) f *= npdf(znew, u, v);
          return f;
        },
        -15.0, 15.0, 10, 1e-13);
  };
  for (double znew : {-1.0, 0.5, 2.0}) {
    const double pred = joint(znew, true) / joint(0.0, false);
    const double from_cluster = std::exp(cl.log_ratio(Vec<1>::Constant(znew), 0.5 * znew * znew)) * npdf(znew, 0, 1);
    CHECK(from_cluster == doctest::Approx(pred).epsilon(1e-9));
  }
}

TEST_CASE("label posterior normalizes and is symmetric in identical clusters") {
  Rng rng(4);
  const auto bm = omega_from_alpha(1.0, 2);
  ReplicateState<2> rep(Vec<2>::Zero(), Mat<2>::Identity(), bm, 1.0);
  const auto vol = random_volume<2>(2, rng);
  const Vec<2> a(0.5, -0.5);
  rep.update_with_volume(0, a, vol);
  rep.update_with_volume(1, a, vol);
  rep.update_with_volume(2, Vec<2>(2.0, 1.0), random_volume<2>(2, rng));
  const auto lp = rep.label_logposterior(Vec<2>(0.3, 0.1));
  REQUIRE(lp.size() == 4);
  double total = 0.0;
  for (double l : lp) total += std::exp(l);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lp[0] == doctest::Approx(lp[1]).epsilon(1e-14));
  // new-cluster probability alpha / (alpha + sum K r)
  CHECK(lp[3] < 0.0);
}

TEST_CASE("cluster updates commute") {
  Rng rng(5);
  const auto vol = random_volume<3>(3, rng);
  std::vector<Vec<3>> zs;
  for (int k = 0; k < 4; ++k) zs.push_back(random_vec<3>(3, rng));
  auto c1 = ClusterSuffStats<3>::empty(vol), c2 = ClusterSuffStats<3>::empty(vol);
  for (int k = 0; k < 4; ++k) c1.add(zs[k]);
  for (int k = 3; k >= 0; --k) c2.add(zs[k]);
  CHECK((c1.predictive_mean() - c2.predictive_mean()).norm() < 1e-13);
  CHECK((c1.predictive_cov() - c2.predictive_cov()).norm() < 1e-13);
  c1.remove(zs[2]);
  auto c3 = ClusterSuffStats<3>::empty(vol);
  for (int k : {0, 1, 3}) c3.add(zs[k]);
  CHECK((c1.predictive_mean() - c3.predictive_mean()).norm() < 1e-13);
}

TEST_CASE("importance density for the anchor integrates to one at p = 1") {
  Rng rng(6);
  const auto d = column({0.2, -1.1, 0.7, 1.9, 0.4, -0.3, 0.0});
  const auto post = make_haar_posterior(d);
  const AnchorProposal prop(post);
  // mu = xbar + lam t / sqrt(n), lam = e^s; t over the whole line since its tails are polynomial
  const double xbar = post.xbar(0), rn = std::sqrt(7.0);
  const double inf = std::numeric_limits<double>::infinity();
  const double total = gauss_kronrod<double, 61>::integrate(
      [&](double s) {
        const double lam = std::exp(s);
        return lam * lam / rn *
               gauss_kronrod<double, 61>::integrate(
                   [&](double t) {
                     NormalParams q{Eigen::VectorXd::Constant(1, xbar + lam * t / rn),
                                    Eigen::MatrixXd::Constant(1, 1, lam)};
                     return std::exp(prop.logpdf(q));
                   },
                   -inf, inf, 12, 1e-11);
      },
      -40.0, 40.0, 12, 1e-11);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  for (int k = 0; k < 20; ++k) {
    const auto a = prop.sample(rng);
    CHECK(a.logpdf == doctest::Approx(prop.logpdf(a.params)).epsilon(1e-12));
  }
}

TEST_CASE("importance density for the anchor integrates to one at p = 2") {
  Rng rng(7);
  const auto d = gaussian_data(12, 2, rng);
  const auto post = make_haar_posterior(d);
  const AnchorProposal prop(post);
  const auto hat = mle(d);
  // independent wide proposal: log Lambda_jj ~ N(log hat, 0.9^2), Lambda_21 ~ N(hat, (1.2 hat_22)^2),
  // mu | Lambda ~ N(xbar, Lambda Lambda^T)
  auto lnorm = [](double x, double m, double s) {
    return -0.5 * std::log(2 * std::numbers::pi) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
  };
  const int m = 400000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < m; ++r) {
    NormalParams q{Eigen::VectorXd(2), Eigen::MatrixXd::Zero(2, 2)};
    double logq = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double ls = std::log(hat.lam(j, j)) + 0.9 * standard_normal(rng);
      q.lam(j, j) = std::exp(ls);
      logq += lnorm(ls, std::log(hat.lam(j, j)), 0.9) - ls;
    }
    const double soff = 1.2 * hat.lam(1, 1);
    q.lam(1, 0) = hat.lam(1, 0) + soff * standard_normal(rng);
    logq += lnorm(q.lam(1, 0), hat.lam(1, 0), soff);
    Eigen::VectorXd e(2);
    e << standard_normal(rng), standard_normal(rng);
    q.mu = hat.mu + q.lam * e;
    logq += mvn_logpdf(q.mu, hat.mu, q.lam);
    const double w = std::exp(prop.logpdf(q) - logq);
    sum += w;
    sum_sq += w * w;
  }
  const double mean = sum / m, se = std::sqrt((sum_sq / m - mean * mean) / m);
  CAPTURE(se);
  CHECK(se < 0.006);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  for (int k = 0; k < 20; ++k) {
    const auto a = prop.sample(rng);
    CHECK(a.logpdf == doctest::Approx(prop.logpdf(a.params)).epsilon(1e-12));
  }
}

TEST_CASE("inverse Wishart degrees of freedom") {
  CHECK(importance_iw_df(100, 2) == doctest::Approx(80.0));
  CHECK(importance_iw_df(5, 2) == doctest::Approx(2.0));
  CHECK(importance_iw_df(400, 3) == doctest::Approx(340.0));
}

TEST_CASE("summarize_log_weights") {
  const std::vector<double> lw = {std::log(1.0), std::log(2.0), std::log(3.0), std::log(6.0)};
  const auto s = summarize_log_weights(lw);
  CHECK(s.log_mean == doctest::Approx(std::log(3.0)));
  CHECK(s.ess == doctest::Approx(144.0 / 50.0));
  // sample variance 14/3, se of the mean sqrt(14/12), relative to 3
  CHECK(s.se_log == doctest::Approx(std::sqrt(14.0 / 12.0) / 3.0));
  const std::vector<double> big = {1000.0, 1000.0};
  CHECK(summarize_log_weights(big).log_mean == doctest::Approx(1000.0));
  CHECK(summarize_log_weights(big).se_log == doctest::Approx(0.0));
}

TEST_CASE("minimal samples give a Bayes factor near one") {
  Rng rng(8);
  for (int p = 1; p <= 2; ++p) {
    for (double a : {1.0 / 64, 1.0, 1024.0}) {
      const auto x = gaussian_data(p + 1, p, rng);
      const auto est = estimate_log_bf(x, a, 4000, 99);
      CAPTURE(p);
      CAPTURE(a);
      CHECK(std::abs(est.log_bf) < std::max(3.0 * est.mc_se_log, 1e-12));
      CHECK(est.log_marginal_null == doctest::Approx(log_min_sample_predictive(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("estimate is affine invariant with a common seed") {
  Rng rng(9);
  for (int p = 1; p <= 2; ++p) {
    for (int rep = 0; rep < 4; ++rep) {
      const auto x = gaussian_data(15, p, rng);
      Eigen::MatrixXd s(p, p);
      do {
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j) s(i, j) = standard_normal(rng);
      } while (std::abs(s.determinant()) < 0.1);
      DataMatrix y = x * s.transpose();
      y.rowwise() += Eigen::RowVectorXd::Constant(p, 5.0 * standard_normal(rng));
      const auto ex = estimate_log_bf(x, 1.0, 300, 1234);
      const auto ey = estimate_log_bf(y, 1.0, 300, 1234);
      CHECK(std::abs(ex.log_bf - ey.log_bf) <= 1e-10 * std::max(1.0, std::abs(ex.log_bf)));
    }
  }
}

TEST_CASE("estimate agrees with the partition oracle at n = 4") {
  const auto o = oracle::dpm_marginal_semi_analytic(kOracleData, 1.0, 2.0, 2.0);
  const double exact = oracle::null_log_marginal_1d(kOracleData) - o.log_marginal;
  const auto est = estimate_log_bf(column(kOracleData), 1.0, 20000, 17);
  CAPTURE(exact);
  CAPTURE(est.log_bf);
  CAPTURE(est.mc_se_log);
  CHECK(std::abs(est.log_bf - exact) < 3.0 * est.mc_se_log);
  CHECK(est.log_marginal_alt == doctest::Approx(o.log_marginal).epsilon(0.02));
}

TEST_CASE("importance weights are unbiased for the inverse Bayes factor") {
  const auto o = oracle::dpm_marginal_semi_analytic(kOracleData, 1.0, 2.0, 2.0);
  const double target = std::exp(o.log_marginal - oracle::null_log_marginal_1d(kOracleData));
  std::vector<double> means;
  for (int run = 0; run < 50; ++run) {
    const auto est = estimate_log_bf(column(kOracleData), 1.0, 1000, 5000 + run);
    means.push_back(std::exp(-est.log_bf));
  }
  const auto ms = testing_support::mean_se(means);
  const double t = (ms.mean - target) / ms.se;
  boost::math::students_t dist(49);
  const double pval = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  CAPTURE(t);
  CHECK(pval > 1e-3);
}

TEST_CASE("disjoint seeds agree within their standard errors") {
  Rng rng(10);
  const auto x = gaussian_data(40, 2, rng);
  const auto a = estimate_log_bf(x, 2.0, 5000, 1);
  const auto b = estimate_log_bf(x, 2.0, 5000, 2);
  CHECK(a.log_weights != b.log_weights);
  CHECK(std::abs(a.log_bf - b.log_bf) < 4.0 * std::hypot(a.mc_se_log, b.mc_se_log));
}

TEST_CASE("results do not depend on the worker count") {
  Rng rng(11);
  for (int p : {1, 2, 4}) {
    const auto x = gaussian_data(30, p, rng);
    const auto a = estimate_log_bf(x, 0.5, 257, 3, 1);
    const auto b = estimate_log_bf(x, 0.5, 257, 3, 3);
    const auto c = estimate_log_bf(x, 0.5, 257, 3, 8);
    CHECK(a.log_weights == b.log_weights);
    CHECK(a.log_weights == c.log_weights);
    CHECK(a.log_bf == b.log_bf);
  }
}

TEST_CASE("conditional brackets are reproducible") {
  Rng rng(12);
  Eigen::MatrixXd z(1, 20);
  for (int i = 0; i < 20; ++i) z(0, i) = standard_normal(rng);
  const auto a = conditional_log_brackets(z, 1.0, 100, 5, 1);
  const auto b = conditional_log_brackets(z, 1.0, 100, 5, 4);
  CHECK(a == b);
  CHECK(a.size() == 100);
}

TEST_CASE("invalid input") {
  Rng rng(13);
  CHECK_THROWS_AS(estimate_log_bf(gaussian_data(2, 2, rng), 1.0, 10, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_log_bf(gaussian_data(5, 1, rng), 0.0, 10, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_log_bf(gaussian_data(5, 1, rng), -1.0, 10, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_log_bf(gaussian_data(5, 1, rng), 1.0, 0, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_log_bf(column({1.0, 1.0, 1.0}), 1.0, 10, 1), DegenerateDataError);
  const auto bm = omega_from_alpha(1.0, 1);
  CHECK_THROWS_AS(ReplicateState<1>(Vec<1>::Zero(), Mat<1>::Constant(-1.0), bm, 1.0), std::invalid_argument);
}
