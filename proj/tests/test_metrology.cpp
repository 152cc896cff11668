#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "entforce/metrology.hpp"

using namespace entforce;
using std::numbers::pi;

namespace {

MeterParams meter(double tau, double kappa = 1.0, double phi = 0.0,
                  SignalVariant v = SignalVariant::consistent) {
  MeterParams m;
  m.tau_scaled = tau;
  m.kappa = kappa;
  m.phi = phi;
  m.signal_variant = v;
  return m;
}

// The five-term expression as written, without regrouping.
double noise_verbatim(const MeterParams& m, double r, double n) {
  const double x = m.tau_scaled, k = m.kappa, c = std::cos(m.phi), s = std::sin(m.phi);
  const double sn = std::sin(x), b = 1 - std::cos(x);
  return k * k * sn * sn * (c * c / (r * r) + r * r * s * s) * (1 + 2 * n) +
         k * k * b * b * (s * s / (r * r) + r * r * c * c) * (1 + 2 * n) -
         2 * k * k * sn * b * (1 / (r * r) - r * r) * s * c * (1 + 2 * n) +
         4 * k * k * k * k * (x - sn) * (x - sn) + 1;
}

}  // namespace

TEST(Signal, Examples) {
  EXPECT_EQ(signal_coeff(meter(0)), 0.0);
  EXPECT_NEAR(signal_coeff(meter(2 * pi)), 17.7715317526334650, 1e-13);
  EXPECT_NEAR(signal_coeff(meter(2 * pi, 1, 0, SignalVariant::printed)), 17.7715317526334650, 1e-13);
  EXPECT_NEAR(signal_coeff(meter(pi / 2)), 1.61445581341217615, 1e-14);
  EXPECT_NEAR(signal_coeff(meter(pi / 2, 1, 0, SignalVariant::printed)), 7.27131006290455634, 1e-13);
  EXPECT_NEAR(signal_coeff(meter(pi / 2, 3)), 3 * 1.61445581341217615, 1e-13);
}

TEST(Signal, VariantsCoincideOnlyAtFullPeriods) {
  for (int k = 1; k <= 4; ++k) {
    const double x = 2 * pi * k;
    EXPECT_NEAR(signal_coeff(meter(x)), signal_coeff(meter(x, 1, 0, SignalVariant::printed)), 1e-12);
  }
  for (double x : {0.3, pi / 2, pi, 4.0}) {
    EXPECT_GT(std::abs(signal_coeff(meter(x)) - signal_coeff(meter(x, 1, 0, SignalVariant::printed))), 0.1);
  }
}

TEST(Signal, VariantNames) {
  EXPECT_EQ(signal_variant_from_string("printed"), SignalVariant::printed);
  EXPECT_EQ(signal_variant_from_string("consistent"), SignalVariant::consistent);
  EXPECT_STREQ(to_string(SignalVariant::printed), "printed");
  EXPECT_THROW(signal_variant_from_string("literal"), ConfigError);
}

TEST(MeterParams, Validation) {
  EXPECT_THROW(signal_coeff(meter(1, -0.1)), DomainError);
  EXPECT_THROW(signal_coeff(meter(-1)), DomainError);
  EXPECT_THROW(noise(meter(1), 0.5, 0), DomainError);
  EXPECT_THROW(noise(meter(1), 2, -1), DomainError);
}

TEST(Noise, Examples) {
  EXPECT_DOUBLE_EQ(noise(meter(0), 5, 20), 1.0);
  EXPECT_NEAR(noise(meter(2 * pi), 3, 5), 158.913670417429738, 1e-10);
  EXPECT_NEAR(noise(meter(pi / 2), 1, 0), 4.30323378673018566, 1e-13);
  EXPECT_NEAR(noise(meter(1.3, 0.7, 0.4), 5, 3), 95.6808297702596993, 1e-11);
  EXPECT_DOUBLE_EQ(shot_noise(), 1.0);
}

TEST(Noise, MatchesVerbatimForm) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto m = meter(4 * pi * u(rng), 3 * u(rng), 2 * pi * u(rng));
    const double r = 1 + 9 * u(rng), n = 30 * u(rng);
    const double ref = noise_verbatim(m, r, n);
    EXPECT_NEAR(noise(m, r, n), ref, 1e-11 * ref);
  }
}

TEST(Noise, ShotFloor) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto m = meter(4 * pi * u(rng), 3 * u(rng), 2 * pi * u(rng));
    EXPECT_GE(noise(m, 1 + 50 * u(rng), 100 * u(rng)), 1.0);
  }
  EXPECT_DOUBLE_EQ(noise(meter(2.0, 0.0), 10, 20), 1.0);
}

TEST(Noise, PhaseIndependentForUnsqueezedProbes) {
  for (double x : {0.2, 1.0, pi / 2, 3.0, 5.5}) {
    for (double n : {0.0, 20.0}) {
      const double base = noise(meter(x, 1.3, 0), 1, n);
      for (double phi = 0; phi < 2 * pi; phi += 0.1) {
        EXPECT_NEAR(noise(meter(x, 1.3, phi), 1, n), base, 1e-12 * base);
      }
    }
  }
}

TEST(Noise, StateIndependentAtFullPeriods) {
  for (int k : {1, 2}) {
    const double ref = noise(meter(2 * pi * k), 1, 0);
    for (double r : {1.0, 2.0, 10.0, 50.0}) {
      for (double n : {0.0, 20.0, 1000.0}) {
        for (double phi : {0.0, 0.3, pi / 4, 2.0}) {
          EXPECT_NEAR(noise(meter(2 * pi * k, 1, phi), r, n), ref, 1e-12 * ref);
        }
      }
    }
  }
}

TEST(PhiOpt, QuarterPeriod) {
  EXPECT_NEAR(phi_opt(pi / 2), -pi / 4, 1e-15);
  for (double r : {1.0, 2.0, 10.0}) {
    for (double n : {0.0, 20.0}) {
      const auto m = meter(pi / 2, 1.7, phi_opt(pi / 2));
      EXPECT_NEAR(probe_noise(m, r, n), 2 * (1 + 2 * n) * 1.7 * 1.7 / (r * r), 1e-10);
    }
  }
}

TEST(PhiOpt, HalfPeriodPicksPiOverTwo) {
  EXPECT_NEAR(phi_opt(pi), pi / 2, 1e-15);
  EXPECT_LT(noise(meter(pi, 1, pi / 2), 2, 0), noise(meter(pi, 1, 0), 2, 0));
}

TEST(PhiOpt, InRange) {
  for (double x = 0; x < 13; x += 0.01) {
    const double p = phi_opt(x);
    EXPECT_GT(p, -pi / 2);
    EXPECT_LE(p, pi / 2);
  }
  EXPECT_THROW(phi_opt(-0.1), DomainError);
}

TEST(PhiOpt, OptimalOnGrid) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x = 2 * pi * u(rng), r = 1 + 20 * u(rng), n = 50 * u(rng), k = 0.1 + 3 * u(rng);
    const double best = noise(meter(x, k, phi_opt(x)), r, n);
    for (int j = 0; j < 720; ++j) {
      const double phi = 2 * pi * j / 720;
      EXPECT_LE(best, noise(meter(x, k, phi), r, n) + 1e-12) << x << " " << r << " " << n << " " << phi;
    }
  }
}

TEST(PhiOpt, FamilyIsStationary) {
  for (double x : {0.4, 1.0, 2.2, 3.9, 5.1}) {
    for (double phi : phi_stationary_family(x)) {
      const double h = 1e-5;
      const double d = (noise(meter(x, 1, phi + h), 3, 2) - noise(meter(x, 1, phi - h), 3, 2)) / (2 * h);
      EXPECT_NEAR(d, 0.0, 1e-6 * noise(meter(x, 1, phi), 3, 2)) << x;
    }
  }
}

TEST(PhiOpt, PrintedFamilyMissesMinimum) {
  // generic tau: the printed family is not stationary, so none of its members is optimal
  const double x = 1.0;
  const double best = noise(meter(x, 1, phi_opt(x)), 10, 0);
  for (double phi : phi_stationary_family_printed(x)) {
    EXPECT_GT(noise(meter(x, 1, phi), 10, 0), best * 1.01);
  }
}

TEST(Fmin, Examples) {
  EXPECT_NEAR(f_min(meter(2 * pi), 1, 0), 0.709342150861502841, 1e-14);
  EXPECT_NEAR(f_min(meter(2 * pi, 1, 1.1), 10, 1000), 0.709342150861502841, 1e-12);
  EXPECT_NEAR(f_min(meter(pi / 2, 1, -pi / 4), 10, 20), 1.09465202275982223, 1e-13);
  EXPECT_NEAR(f_min(meter(pi / 2), 1, 20), 5.68716664171529829, 1e-12);
  EXPECT_THROW(f_min(meter(0), 1, 0), UndetectableError);
  EXPECT_THROW(f_min(meter(1, 0), 1, 0), UndetectableError);
}

TEST(Sql, Examples) {
  EXPECT_NEAR(sql(meter(pi / 2)), 1.28490585296626357, 1e-14);
  EXPECT_NEAR(sql(meter(2 * pi)), 0.709342150861502841, 1e-14);
  EXPECT_GT(sql(meter(pi / 2, 1e-6)), 1e5);
}

TEST(Fmin, MonotoneInR) {
  for (double x = 0.05; x < 2 * pi; x += 0.05) {
    for (double n : {0.0, 20.0}) {
      const auto m = meter(x, 1, phi_opt(x));
      double prev = f_min(m, 1, n);
      for (double r = 1.25; r <= 20; r *= 1.25) {
        const double cur = f_min(m, r, n);
        EXPECT_LE(cur, prev * (1 + 1e-14)) << x << " " << r;
        prev = cur;
      }
    }
  }
}

TEST(Fmin, BeatsSqlWhenSqueezingConditionHolds) {
  for (auto [r, n] : {std::pair{2.0, 0.0}, {10.0, 20.0}, {7.0, 20.0}}) {
    ASSERT_GT(r * r, 1 + 2 * n);
    bool beats = false;
    for (double x = 0.01; x < 2 * pi && !beats; x += 0.01) {
      const auto m = meter(x, 1, phi_opt(x));
      beats = f_min(m, r, n) < sql(m);
    }
    EXPECT_TRUE(beats) << r << " " << n;
  }
}

TEST(DecoherenceBudget, Examples) {
  ProbeParams p;
  p.n_th = 20;
  auto b = decoherence_budget(p, pi / 4, pi / 2);
  EXPECT_TRUE(std::isinf(b.budget));
  EXPECT_TRUE(b.feasible);

  p.gamma_mech = 1e-6;
  b = decoherence_budget(p, pi / 4, pi / 2);
  EXPECT_NEAR(b.budget, 5e4, 1e-7);
  EXPECT_NEAR(b.used_time, 3 * pi / 4, 1e-15);
  EXPECT_TRUE(b.feasible);

  p.gamma_mech = 0.1;
  b = decoherence_budget(p, pi / 4, pi / 2);
  EXPECT_NEAR(b.budget, 0.5, 1e-15);
  EXPECT_FALSE(b.feasible);
}

TEST(DecoherenceBudget, RotationReducedToOnePeriod) {
  ProbeParams p;
  p.omega = 2;
  EXPECT_NEAR(decoherence_budget(p, -pi / 4, 0).rotation_time, 7 * pi / 8, 1e-15);
  EXPECT_NEAR(decoherence_budget(p, 2 * pi + 0.5, 0).rotation_time, 0.25, 1e-14);
  EXPECT_THROW(decoherence_budget(p, 0, -1), DomainError);
}
