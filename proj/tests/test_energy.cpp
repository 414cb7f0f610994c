#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qosrate/energy.hpp"

using namespace qosrate;

namespace {

const double kFloorDb = oracle::ebn0_min_db(0.0, false);

}  // namespace

TEST(EnergyConstant, FloorAndSlope) {
  const auto e = energy_metrics_constant({10, 0.5, 1.0}, 1.0);
  EXPECT_NEAR(e.ebn0_min_db, kFloorDb, 1e-12);
  EXPECT_NEAR(e.ebn0_min_db, -1.59, 0.005);
  EXPECT_NEAR(e.wideband_slope, oracle::wideband_slope(10, 0.5, 1.0, 0.0, false), 1e-12);
  EXPECT_EQ(e.provenance, MetricsProvenance::closed_form);
  for (double rho : {0.0, 0.5, 1.0}) {
    EXPECT_NEAR(energy_metrics_constant({10, rho, 1.0}, 0.0).wideband_slope, 1.0, 1e-14);
  }
  EXPECT_LT(energy_metrics_constant({10, 1.0, 1.0}, 1.0).wideband_slope,
            energy_metrics_constant({10, 0.0, 1.0}, 1.0).wideband_slope);
}

TEST(EnergyConstant, FloorScalesWithMeanGain) {
  const auto e = energy_metrics_constant({4, 0.0, 2.0}, 0.5);
  EXPECT_NEAR(e.ebn0_min_linear, oracle::kLn2 / 2.0, 1e-15);
}

TEST(EnergyDiscrete, ReducesToConstantWithoutBurstiness) {
  const ChannelSpec spec{10, 0.75, 1.0};
  const auto a = energy_metrics_onoff_discrete(spec, 0.7, 0.0, 1.0);
  const auto b = energy_metrics_constant(spec, 0.7);
  EXPECT_EQ(a.ebn0_min_db, b.ebn0_min_db);
  EXPECT_NEAR(a.wideband_slope, b.wideband_slope, 1e-15);
}

TEST(EnergyDiscrete, SlopeFallsAsActivityFalls) {
  const ChannelSpec spec{10, 0.0, 1.0};
  double prev = INFINITY;
  for (double s : {1.0, 0.75, 0.5, 0.25, 0.1}) {
    const auto e = energy_metrics_onoff_discrete(spec, 1.0, 1.0 - s, s);
    EXPECT_NEAR(e.wideband_slope,
                oracle::wideband_slope(10, 0.0, 1.0, oracle::eta(1.0 - s, s), false), 1e-12);
    EXPECT_LT(e.wideband_slope, prev);
    prev = e.wideband_slope;
    EXPECT_NEAR(e.ebn0_min_db, kFloorDb, 1e-12);
  }
}

TEST(EnergyFluid, Examples) {
  const ChannelSpec spec{10, 0.75, 1.0};
  const auto base = energy_metrics_onoff_fluid(spec, 1.0, 3.0, 0.0);
  EXPECT_NEAR(base.wideband_slope, energy_metrics_constant(spec, 1.0).wideband_slope, 1e-15);
  EXPECT_GT(energy_metrics_onoff_fluid(spec, 1.0, 2.0, 1.0).wideband_slope,
            energy_metrics_onoff_fluid(spec, 1.0, 1.0, 1.0).wideband_slope);
  EXPECT_LT(energy_metrics_onoff_fluid(spec, 1.0, 1.0, 2.0).wideband_slope,
            energy_metrics_onoff_fluid(spec, 1.0, 1.0, 1.0).wideband_slope);
  const auto golden = energy_metrics_onoff_fluid(spec, 1.0, 50.0, 50.0);
  EXPECT_NEAR(golden.wideband_slope,
              oracle::wideband_slope(10, 0.75, 1.0, oracle::zeta(50, 50), false), 1e-12);
}

TEST(EnergyFluid, SlopeMatchesFiniteDifferenceOfRateCurve) {
  // S0 = 2 (ṙ/m)^2 / (-r̈/m) · ln 2 with derivatives from a three-point fit of r/snr
  const ChannelSpec spec{10, 0.75, 1.0};
  const SourceModel model = FluidOnOff{{50, 50, 0}};
  const double h = 2e-4;
  double q[3];
  for (int i = 0; i < 3; ++i) {
    const double s = h * (i + 1);
    const double ce = effective_capacity_quadrature(spec, s, 1.0).value;
    q[i] = max_avg_rate(model, 1.0, ce).r_avg_star / s;
  }
  // r/s = a + b s + c s^2; b = r̈/2
  const double c = (q[2] - 2 * q[1] + q[0]) / (2 * h * h);
  const double b = (q[1] - q[0]) / h - 3 * c * h;
  const double a = q[0] - b * h - c * h * h;
  const double slope = 2.0 * a * a / (-2.0 * b) * std::log(2.0) / spec.m;
  const double closed = energy_metrics_onoff_fluid(spec, 1.0, 50, 50).wideband_slope;
  EXPECT_NEAR(slope, closed, 0.005 * closed);
}

TEST(EnergyMmpp, FloorPenalty) {
  const ChannelSpec spec{10, 0.0, 1.0};
  const auto e = energy_metrics_onoff_mmpp(spec, 1.0, 1.0, 1.0);
  EXPECT_NEAR(e.ebn0_min_db, oracle::ebn0_min_db(1.0, true), 1e-12);
  EXPECT_NEAR(e.ebn0_min_db, 0.76, 0.005);
  EXPECT_NEAR(energy_metrics_onoff_mmpp(spec, 1e-6, 1.0, 1.0).ebn0_min_db,
              energy_metrics_onoff_fluid(spec, 1e-6, 1.0, 1.0).ebn0_min_db, 1e-5);
  EXPECT_NEAR(e.wideband_slope, oracle::wideband_slope(10, 0.0, 1.0, oracle::zeta(1, 1), true),
              1e-12);
  for (double theta : {0.1, 0.5, 2.0, 5.0}) {
    const double ratio = energy_metrics_onoff_mmpp(spec, theta, 2, 3).ebn0_min_linear /
                         energy_metrics_onoff_fluid(spec, theta, 2, 3).ebn0_min_linear;
    EXPECT_NEAR(ratio, std::expm1(theta) / theta, 1e-12 * ratio);
  }
  EXPECT_EQ(energy_metrics_onoff_mmpp(spec, 0.0, 1.0, 1.0).ebn0_min_db,
            energy_metrics_onoff_fluid(spec, 0.0, 1.0, 1.0).ebn0_min_db);
}

TEST(EnergyInvariance, FloorIndependentOfEverythingButMmppTheta) {
  const double ref = energy_metrics_constant({1, 0.0, 1.0}, 0.0).ebn0_min_linear;
  for (double theta : {0.0, 0.1, 1.0, 3.0}) {
    for (double rho : {0.0, 0.75, 1.0}) {
      const ChannelSpec spec{10, rho, 1.0};
      EXPECT_NEAR(energy_metrics_constant(spec, theta).ebn0_min_linear, ref, 1e-12);
      EXPECT_NEAR(energy_metrics_onoff_discrete(spec, theta, 0.3, 0.6).ebn0_min_linear, ref, 1e-12);
      EXPECT_NEAR(energy_metrics_onoff_fluid(spec, theta, 0.5, 4.0).ebn0_min_linear, ref, 1e-12);
    }
  }
}

TEST(EnergyOrdering, SlopeNonincreasingInEachParameter) {
  auto fluid = [](double theta, double rho, double a, double b) {
    return energy_metrics_onoff_fluid({10, rho, 1.0}, theta, a, b).wideband_slope;
  };
  double prev = INFINITY;
  for (double theta : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    EXPECT_LE(fluid(theta, 0.5, 1, 1), prev);
    prev = fluid(theta, 0.5, 1, 1);
  }
  prev = INFINITY;
  for (double rho : {0.0, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    EXPECT_LE(fluid(1.0, rho, 1, 1), prev);
    prev = fluid(1.0, rho, 1, 1);
  }
  prev = INFINITY;
  for (double beta : {0.0, 0.5, 1.0, 2.0, 4.0}) {  // ζ grows with β
    EXPECT_LE(fluid(1.0, 0.5, 1, beta), prev);
    prev = fluid(1.0, 0.5, 1, beta);
  }
  prev = INFINITY;
  for (double on : {1.0, 0.9, 0.7, 0.5, 0.3}) {  // p11 = 1 - s, p22 = s: η = (1 - s)/s
    const double s =
        energy_metrics_onoff_discrete({10, 0.5, 1.0}, 1.0, 1.0 - on, on).wideband_slope;
    EXPECT_LE(s, prev);
    prev = s;
  }
}

TEST(NumericEnergy, AgreesWithClosedForms) {
  for (double rho : {0.0, 0.75}) {
    const ChannelSpec spec{10, rho, 1.0};
    const SourceModel models[] = {ConstantRate{}, OnOffDiscreteParams{0.5, 0.5, 0},
                                  FluidOnOff{{1, 1, 0}}, MmppOnOff{{1, 1, 0}}};
    for (const auto& model : models) {
      const auto closed = energy_metrics(model, spec, 1.0);
      const auto num = numeric_energy_metrics(model, spec, 1.0);
      EXPECT_EQ(num.provenance, MetricsProvenance::numeric);
      EXPECT_NEAR(num.wideband_slope, closed.wideband_slope, 0.005 * closed.wideband_slope)
          << model.index() << " rho " << rho;
      EXPECT_NEAR(num.ebn0_min_db, closed.ebn0_min_db, 0.01);
    }
  }
}

TEST(NumericEnergy, RejectsMonteCarlo) {
  NumericEnergyOptions opt;
  opt.capacity = CapacityMethod::monte_carlo;
  EXPECT_THROW(numeric_energy_metrics(ConstantRate{}, {10, 0.0, 1.0}, 1.0, opt), ValidationError);
}

TEST(NumericEnergy, BinomialSourceReachesCommonFloor) {
  const auto e =
      energy_metrics(SourceModel(build_binomial_discrete_source(10, 0.5, 1.0)), {10, 0.0, 1.0}, 1.0);
  EXPECT_NEAR(e.ebn0_min_db, kFloorDb, 0.05);
  EXPECT_EQ(e.provenance, MetricsProvenance::numeric);
}

TEST(NumericEnergy, MmppFloorIndependentOfStateCount) {
  for (int n : {2, 5, 10}) {
    const auto e = energy_metrics(SourceModel(build_birth_death_mmpp(n, 1.0, 2.0, 1.0)),
                                  {10, 0.0, 1.0}, 1.0);
    EXPECT_NEAR(e.ebn0_min_db, oracle::ebn0_min_db(1.0, true), 0.05) << n;
  }
}

TEST(NumericEnergy, SeriesFormMatchesNumericForNState) {
  const ChannelSpec spec{10, 0.5, 1.0};
  const SourceModel model = build_birth_death_fluid(10, 2.0, 3.0, 1.0);
  const auto series = energy_metrics_series(model, spec, 1.0);
  const auto num = numeric_energy_metrics(model, spec, 1.0);
  EXPECT_NEAR(series.wideband_slope, num.wideband_slope, 0.005 * num.wideband_slope);
}

TEST(Ebn0Curve, ConstantSourceApproachesFloorForEveryCorrelation) {
  for (double rho : {0.0, 0.5, 0.75, 1.0}) {
    const auto curve = ebn0_curve(ConstantRate{}, {10, rho, 1.0}, 1.0, {1e-4, 1e-2, 1.0});
    ASSERT_EQ(curve.size(), 3u);
    EXPECT_NEAR(curve.front().ebn0_db, kFloorDb, 0.05) << rho;
    EXPECT_LE(curve[0].ebn0_db, curve[1].ebn0_db);
    EXPECT_LE(curve[1].ebn0_db, curve[2].ebn0_db);
  }
}

TEST(Ebn0Curve, MmppFloor) {
  const auto curve = ebn0_curve(MmppOnOff{{1, 1, 0}}, {10, 0.0, 1.0}, 1.0, {1e-4, 1e-3});
  EXPECT_NEAR(curve.front().ebn0_db, 0.76, 0.05);
  EXPECT_GE(curve.front().ebn0_db, oracle::ebn0_min_db(1.0, true) - 1e-9);
}

TEST(Ebn0Curve, SlopeNearFloorMatchesWidebandSlope) {
  // S0 = Δ(r/m) / Δ(Eb/N0 in units of 3 dB) near the floor
  const ChannelSpec spec{10, 0.0, 1.0};
  const SourceModel model = FluidOnOff{{1, 1, 0}};
  const auto c = ebn0_curve(model, spec, 1.0, {1e-4, 2e-4});
  const double slope = (c[1].normalized_rate - c[0].normalized_rate) /
                       ((c[1].ebn0_db - c[0].ebn0_db) / (10.0 * std::log10(2.0)));
  const double s0 = energy_metrics(model, spec, 1.0).wideband_slope;
  EXPECT_NEAR(slope, s0, 0.05 * s0);
}

TEST(Ebn0Curve, ValidatesGrid) {
  EXPECT_THROW(ebn0_curve(ConstantRate{}, {10, 0.0, 1.0}, 1.0, {1.0, 0.5}), ValidationError);
  EXPECT_THROW(ebn0_curve(ConstantRate{}, {10, 0.0, 1.0}, 1.0, {0.0}), ValidationError);
}

TEST(Decibels, RoundTrip) {
  EXPECT_NEAR(from_db(to_db(0.37)), 0.37, 1e-15);
  EXPECT_EQ(to_db(10.0), 10.0);
}
