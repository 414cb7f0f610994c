#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qosrate/sources.hpp"

using namespace qosrate;

namespace {

Matrix random_stochastic(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix j(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) j(i, k) = u(rng);
    j.row(i) /= j.row(i).sum();
  }
  return j;
}

Matrix random_generator(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) g(i, k) = i == k ? 0.0 : u(rng);
    g(i, i) = -g.row(i).sum();
  }
  return g;
}

Vector random_rates(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 4.0);
  Vector r(n);
  for (int i = 0; i < n; ++i) r(i) = u(rng);
  return r;
}

}  // namespace

// --- stationary laws ---------------------------------------------------------

TEST(StationaryDiscrete, SymmetricTwoState) {
  const Vector pi = stationary_distribution_discrete(oracle::onoff_transition(0.8, 0.8));
  EXPECT_NEAR(pi(0), 0.5, 1e-14);
  EXPECT_NEAR(pi(1), 0.5, 1e-14);
}

TEST(StationaryDiscrete, AsymmetricTwoState) {
  const Vector pi = stationary_distribution_discrete(oracle::onoff_transition(0.9, 0.8));
  EXPECT_NEAR(pi(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(pi(1), 1.0 / 3.0, 1e-14);
}

TEST(StationaryDiscrete, MatchesMatrixPowerOnRandomChains) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix j = random_stochastic(5, rng);
    const Vector pi = stationary_distribution_discrete(j);
    const Vector ref = oracle::stationary_by_power(j);
    EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
    EXPECT_TRUE((pi.array() >= 0.0).all());
    EXPECT_LT((pi - ref).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((pi.transpose() * j - pi.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(StationaryDiscrete, ReducibleChainHasNoUniqueLaw) {
  Matrix j = Matrix::Identity(3, 3);
  try {
    stationary_distribution_discrete(j);
    FAIL() << "expected NoUniqueStationary";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_unique_stationary);
  }
}

TEST(StationaryDiscrete, MatchesChainFrequencies) {
  // Batch-means standard errors account for the chain's autocorrelation.
  Matrix j(3, 3);
  j << 0.7, 0.2, 0.1, 0.3, 0.5, 0.2, 0.25, 0.25, 0.5;
  const Vector pi = stationary_distribution_discrete(j);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1000000;
  const int batches = 100;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(batches, 3);
  int state = 0;
  for (int k = 0; k < n; ++k) {
    const double x = u(rng);
    double acc = 0.0;
    int next = 2;
    for (int s = 0; s < 3; ++s) {
      acc += j(state, s);
      if (x < acc) {
        next = s;
        break;
      }
    }
    state = next;
    counts(k / (n / batches), state) += 1.0;
  }
  const Eigen::MatrixXd freq = counts / (n / batches);
  for (int s = 0; s < 3; ++s) {
    const double mean = freq.col(s).mean();
    const double sd = std::sqrt((freq.col(s).array() - mean).square().sum() / (batches - 1));
    EXPECT_LT(std::abs(mean - pi(s)), 3.0 * sd / std::sqrt(batches)) << "state " << s;
  }
}

TEST(StationaryFluid, SymmetricTwoState) {
  const Vector pi = stationary_distribution_fluid(oracle::onoff_generator(3.0, 3.0));
  EXPECT_NEAR(pi(0), 0.5, 1e-14);
  EXPECT_NEAR(pi(1), 0.5, 1e-14);
}

TEST(StationaryFluid, OnProbabilityIsAlphaShare) {
  const Vector pi = stationary_distribution_fluid(oracle::onoff_generator(20.0, 80.0));
  EXPECT_NEAR(pi(0), 0.8, 1e-14);
  EXPECT_NEAR(pi(1), 0.2, 1e-14);
}

TEST(StationaryFluid, BirthDeathTruncatedGeometric) {
  const int n = 10;
  const Vector pi = stationary_distribution_fluid(birth_death_generator(n, 50.0, 100.0));
  for (int i = 1; i <= n; ++i) EXPECT_NEAR(pi(i - 1), oracle::bd_stationary(n, 0.5, i), 1e-10);
  const Vector closed = birth_death_stationary(n, 0.5);
  EXPECT_LT((pi - closed).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StationaryFluid, ReducibleGeneratorRejected) {
  Matrix g = Matrix::Zero(3, 3);
  g(0, 1) = 1.0;
  g(0, 0) = -1.0;
  try {
    stationary_distribution_fluid(g);
    FAIL() << "expected NoUniqueStationary";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_unique_stationary);
  }
}

// --- average rate ------------------------------------------------------------

TEST(AverageRate, OnOffDiscrete) {
  EXPECT_NEAR(average_rate(OnOffDiscreteParams{0.9, 0.8, 3.0}), 1.0, 1e-14);
}

TEST(AverageRate, BirthDeathClosedForm) {
  for (double xi : {0.3, 0.5, 2.0, 3.0}) {
    const auto src = build_birth_death_fluid(10, xi, 1.0, 2.0);
    EXPECT_NEAR(average_rate(src), oracle::bd_average_rate(10, xi, 2.0), 1e-10) << xi;
    EXPECT_NEAR(birth_death_average_rate(10, xi, 1.0, 2.0), oracle::bd_average_rate(10, xi, 2.0),
                1e-10);
  }
}

TEST(AverageRate, ZeroRatesGiveZero) {
  std::mt19937_64 rng(3);
  DiscreteMarkovSource src(random_stochastic(4, rng), Vector::Zero(4));
  EXPECT_EQ(average_rate(src), 0.0);
  EXPECT_EQ(average_rate(SourceModel(ConstantRate{0.0})), 0.0);
}

// --- effective bandwidth: discrete --------------------------------------------

TEST(EffectiveBandwidthDiscrete, AlwaysOnIsConstant) {
  for (double theta : {0.01, 1.0, 10.0}) {
    EXPECT_NEAR(effective_bandwidth_discrete(to_discrete_source({0.0, 1.0, 2.0}), theta), 2.0, 1e-12);
    EXPECT_NEAR(effective_bandwidth_onoff_discrete({0.0, 1.0, 2.0}, theta), 2.0, 1e-12);
  }
}

TEST(EffectiveBandwidthDiscrete, ClosedFormAndEigenPathAgreeWithLiteralFormula) {
  const OnOffDiscreteParams p{0.8, 0.8, 2.0};
  const double lit = oracle::eb_onoff_discrete(0.8, 0.8, 2.0, 1.0);
  EXPECT_NEAR(effective_bandwidth_onoff_discrete(p, 1.0), lit, 1e-12);
  EXPECT_NEAR(effective_bandwidth_discrete(to_discrete_source(p), 1.0), lit, 1e-10);
}

TEST(EffectiveBandwidthDiscrete, HalfThetaScalarEvaluation) {
  const double e = std::exp(1.0);
  const double b = 0.8 + 0.8 * e;
  const double expected = std::log((b + std::sqrt(b * b - 4.0 * 0.6 * e)) / 2.0) / 0.5;
  EXPECT_NEAR(effective_bandwidth_onoff_discrete({0.8, 0.8, 2.0}, 0.5), expected, 1e-12);
}

TEST(EffectiveBandwidthDiscrete, SmallThetaApproachesMean) {
  const OnOffDiscreteParams p{0.9, 0.8, 3.0};
  EXPECT_NEAR(effective_bandwidth_discrete(to_discrete_source(p), 1e-6), 1.0, 1e-3);
  double prev = INFINITY;
  for (double theta : {1e-4, 1e-5, 1e-6}) {
    const double err = std::abs(effective_bandwidth_onoff_discrete(p, theta) - 1.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(EffectiveBandwidthDiscrete, SilentSourceIsZero) {
  for (double p11 : {0.1, 0.5, 0.9}) {
    EXPECT_EQ(effective_bandwidth_onoff_discrete({p11, 0.3, 0.0}, 2.0), 0.0);
  }
}

TEST(EffectiveBandwidthDiscrete, GenericMatchesDenseEigensolver) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix j = random_stochastic(6, rng);
    const Vector r = random_rates(6, rng);
    const double theta = 0.3 + trial * 0.1;
    DiscreteMarkovSource src(j, r);
    const double a = effective_bandwidth_discrete(src, theta);
    EXPECT_NEAR(a, oracle::eb_discrete_generic(j, r, theta), 1e-9 * std::max(1.0, a));
  }
}

TEST(EffectiveBandwidthDiscrete, LargeThetaLambdaStaysFinite) {
  const OnOffDiscreteParams p{0.8, 0.8, 100.0};
  const double theta = 10.0;  // θλ = 1000
  const double closed = effective_bandwidth_onoff_discrete(p, theta);
  const double eigen = effective_bandwidth_discrete(to_discrete_source(p), theta);
  ASSERT_TRUE(std::isfinite(closed));
  EXPECT_NEAR(eigen, closed, 1e-9 * closed);
  EXPECT_GE(closed, average_rate(p));
  EXPECT_LE(closed, 100.0);
}

TEST(EffectiveBandwidthDiscrete, AbsorbingOffIsZero) {
  const OnOffDiscreteParams p{1.0, 0.4, 5.0};
  EXPECT_EQ(classify(p), ChainStatus::absorbing_off);
  EXPECT_EQ(average_rate(p), 0.0);
  EXPECT_NEAR(effective_bandwidth_onoff_discrete(p, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(effective_bandwidth_discrete(to_discrete_source(p), 1.0), 0.0, 1e-12);
}

TEST(EffectiveBandwidthDiscrete, PeriodicChainRejected) {
  Matrix j(2, 2);
  j << 0.0, 1.0, 1.0, 0.0;
  try {
    DiscreteMarkovSource src(j, Vector{{0.0, 1.0}});
    FAIL() << "expected PeriodicChain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::periodic_chain);
  }
}

TEST(EffectiveBandwidthDiscrete, InvalidRowReportsFieldPath) {
  Matrix j(2, 2);
  j << 0.5, 0.5, 0.7, 0.2;
  try {
    DiscreteMarkovSource src(j, Vector{{0.0, 1.0}});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "transition/1");
  }
}

// --- effective bandwidth: fluid and MMPP ---------------------------------------

TEST(EffectiveBandwidthFluid, NeverLeavingOnIsConstant) {
  const OnOffContinuousParams p{2.0, 0.0, 3.0};
  for (double theta : {0.1, 1.0, 5.0}) {
    EXPECT_NEAR(effective_bandwidth_fluid(to_fluid_source(p), theta), 3.0, 1e-10);
    EXPECT_NEAR(effective_bandwidth_onoff_fluid(p, theta), 3.0, 1e-12);
  }
}

TEST(EffectiveBandwidthFluid, ClosedFormMatchesLiteralAndEigen) {
  const OnOffContinuousParams p{50.0, 50.0, 2.0};
  const double lit = (2.0 - 100.0 + std::sqrt(98.0 * 98.0 + 4.0 * 50.0 * 2.0)) / 2.0;
  EXPECT_NEAR(oracle::eb_onoff_fluid(50, 50, 2, 1), lit, 1e-12);
  EXPECT_NEAR(effective_bandwidth_onoff_fluid(p, 1.0), lit, 1e-12);
  EXPECT_NEAR(effective_bandwidth_fluid(to_fluid_source(p), 1.0), lit, 1e-10);
}

TEST(EffectiveBandwidthFluid, BirthDeathSmallThetaApproachesMean) {
  const auto src = build_birth_death_fluid(10, 50.0, 100.0, 1.0);
  EXPECT_NEAR(effective_bandwidth_fluid(src, 1e-6), oracle::bd_average_rate(10, 0.5, 1.0), 1e-3);
}

TEST(EffectiveBandwidthFluid, GenericMatchesDenseEigensolver) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix g = random_generator(5, rng);
    const Vector r = random_rates(5, rng);
    const double theta = 0.2 + 0.15 * trial;
    const double a = effective_bandwidth_fluid(FluidMarkovSource(g, r), theta);
    EXPECT_NEAR(a, oracle::eb_fluid_generic(g, r, theta), 1e-9 * std::max(1.0, a));
    const double b = effective_bandwidth_mmpp(MmppSource(g, r), theta);
    EXPECT_NEAR(b, oracle::eb_mmpp_generic(g, r, theta), 1e-9 * std::max(1.0, b));
  }
}

TEST(EffectiveBandwidthMmpp, PurePoisson) {
  const OnOffContinuousParams p{1.0, 0.0, 2.0};
  for (double theta : {0.5, 1.0, 3.0}) {
    const double expected = std::expm1(theta) * 2.0 / theta;
    EXPECT_NEAR(effective_bandwidth_onoff_mmpp(p, theta), expected, 1e-12 * expected);
    EXPECT_NEAR(effective_bandwidth_mmpp(to_mmpp_source(p), theta), expected, 1e-10 * expected);
  }
}

TEST(EffectiveBandwidthMmpp, ClosedFormMatchesLiteralAndEigen) {
  const OnOffContinuousParams p{50.0, 50.0, 2.0};
  const double lit = oracle::eb_onoff_mmpp(50, 50, 2, 1);
  EXPECT_NEAR(effective_bandwidth_onoff_mmpp(p, 1.0), lit, 1e-12);
  EXPECT_NEAR(effective_bandwidth_mmpp(to_mmpp_source(p), 1.0), lit, 1e-10);
}

TEST(EffectiveBandwidthMmpp, SmallThetaApproachesMean) {
  const OnOffContinuousParams p{1.0, 3.0, 2.0};
  EXPECT_NEAR(effective_bandwidth_mmpp(to_mmpp_source(p), 1e-6), 2.0 * 0.25, 1e-3);
}

TEST(EffectiveBandwidthMmpp, ExceedsFluidUnlessSilent) {
  for (double theta : {0.1, 1.0, 4.0}) {
    const OnOffContinuousParams p{2.0, 3.0, 1.5};
    EXPECT_GT(effective_bandwidth_onoff_mmpp(p, theta), effective_bandwidth_onoff_fluid(p, theta));
    const OnOffContinuousParams silent{2.0, 3.0, 0.0};
    EXPECT_EQ(effective_bandwidth_onoff_mmpp(silent, theta), 0.0);
    EXPECT_EQ(effective_bandwidth_onoff_fluid(silent, theta), 0.0);
  }
}

// --- properties ----------------------------------------------------------------

TEST(EffectiveBandwidthProperties, MeanPeakBracketing) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector r = random_rates(4, rng);
    const double theta = 0.05 + 0.2 * trial;
    DiscreteMarkovSource d(random_stochastic(4, rng), r);
    const double ad = effective_bandwidth_discrete(d, theta);
    EXPECT_GE(ad, average_rate(d) - 1e-12);
    EXPECT_LE(ad, r.maxCoeff() + 1e-12);
    const Matrix g = random_generator(4, rng);
    FluidMarkovSource f(g, r);
    const double af = effective_bandwidth_fluid(f, theta);
    EXPECT_GE(af, average_rate(f) - 1e-12);
    EXPECT_LE(af, r.maxCoeff() + 1e-12);
    MmppSource p(g, r);
    const double ap = effective_bandwidth_mmpp(p, theta);
    EXPECT_GE(ap, average_rate(p) - 1e-12);
    EXPECT_LE(ap, std::expm1(theta) / theta * r.maxCoeff() * (1 + 1e-12));
  }
}

TEST(EffectiveBandwidthProperties, MonotoneInThetaAndConvexInRate) {
  std::mt19937_64 rng(31);
  const Matrix j = random_stochastic(4, rng);
  const Vector r = random_rates(4, rng);
  DiscreteMarkovSource src(j, r);
  double prev = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double a = effective_bandwidth_discrete(src, 0.1 * k);
    EXPECT_GE(a, prev - 1e-12);
    prev = a;
  }
  auto at = [&](double x) {
    Vector rr = r;
    rr(2) = x;
    return effective_bandwidth_discrete(src.with_rates(rr), 1.5);
  };
  for (int k = 0; k < 19; ++k) {
    const double x0 = 0.25 * k, x1 = 0.25 * (k + 2);
    EXPECT_LE(at(x0), at(x1) + 1e-12);
    EXPECT_LE(at(0.5 * (x0 + x1)), 0.5 * (at(x0) + at(x1)) + 1e-12);
  }
}
