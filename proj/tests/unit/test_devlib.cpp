#include <gtest/gtest.h>

#include <cmath>

#include "nggc/devlib.hpp"
#include "oracles.hpp"

using namespace nggc;
using namespace nggc::dev;

namespace {

std::vector<double> vec(const Polynomial& p) { return {p.coeffs().begin(), p.coeffs().end()}; }

// 1 / (2Hs + K_D + G(s)/R) evaluated pointwise from the textbook factors.
oracle::C sg_oracle(double H, double K_D, double R, oracle::C g, double w) {
  return 1.0 / (oracle::C(K_D, 2.0 * H * w) + g / R);
}

}  // namespace

TEST(PfTransfer, VsmByDefinition) {
  const RationalTF d = pf_transfer(VSM{5.0, 20.0});
  EXPECT_EQ(d, RationalTF({1.0}, {20.0, 5.0}));
  EXPECT_DOUBLE_EQ(eval_response(d, 0.0).real(), 0.05);
}

TEST(PfTransfer, DroopAndVocAreIdentical) {
  const RationalTF a = pf_transfer(Droop{0.05});
  EXPECT_EQ(a, pf_transfer(VOC{0.05}));
  EXPECT_DOUBLE_EQ(dc_gain(a), 0.05);
  EXPECT_FALSE(is_strictly_proper(a));
}

TEST(PfTransfer, SecondOrderDroopPointwise) {
  const SecondOrderDroop p{0.05, 10.0, 0.7, 0.2};
  const RationalTF d = pf_transfer(p);
  for (double w : {0.0, 1.0, 10.0, 300.0}) {
    const oracle::C s(0.0, w);
    const oracle::C ref = p.d_p * 100.0 * (1.0 + p.T_z * s) / (s * s + 2.0 * 0.7 * 10.0 * s + 100.0);
    EXPECT_NEAR(std::abs(eval_response(d, w) - ref), 0.0, 1e-14);
  }
  EXPECT_EQ(pf_transfer(SecondOrderDroop{0.05, 10.0, 0.7, 0.0}).relative_degree(), 2);
}

TEST(PfTransfer, GeneratorsMatchFactorFormulas) {
  for (double w : {0.0, 0.05, 0.7, 4.0, 60.0}) {
    const oracle::C s(0.0, w);
    const SGNonReheat a{};
    const oracle::C ga = 1.0 / ((1.0 + s * a.T_g) * (1.0 + s * a.T_ch));
    EXPECT_NEAR(std::abs(eval_response(pf_transfer(a), w) - sg_oracle(a.H, a.K_D, a.R, ga, w)), 0.0, 1e-13);

    const SGReheat b{};
    const oracle::C gb = (1.0 + s * b.F_hp * b.T_rh) / ((1.0 + s * b.T_g) * (1.0 + s * b.T_ch) * (1.0 + s * b.T_rh));
    EXPECT_NEAR(std::abs(eval_response(pf_transfer(b), w) - sg_oracle(b.H, b.K_D, b.R, gb, w)), 0.0, 1e-13);

    const SGHydro c{};
    const oracle::C gc = (1.0 + s * c.T_r) / (1.0 + s * c.R_t / c.R * c.T_r) * (1.0 - s * c.T_w) /
                         (1.0 + 0.5 * s * c.T_w) / (1.0 + s * c.T_g);
    EXPECT_NEAR(std::abs(eval_response(pf_transfer(c), w) - sg_oracle(c.H, c.K_D, c.R, gc, w)), 0.0, 1e-13);
  }
}

TEST(PfTransfer, GeneratorsStableStrictlyProperWithDroopDcGain) {
  const std::vector<DeviceParams> sgs{SGNonReheat{}, SGReheat{}, SGHydro{},
                                      SGNonReheat{5.0, 0.5, 0.04, 0.3, 0.3},
                                      SGHydro{6.0, 0.2, 0.06, 0.4, 2.0, 0.5, 7.0}};
  for (const auto& p : sgs) {
    const RationalTF d = pf_transfer(p);
    EXPECT_TRUE(is_stable(d).stable) << kind_name(p);
    EXPECT_TRUE(is_strictly_proper(d)) << kind_name(p);
    const double K_D = std::visit([](const auto& q) {
      if constexpr (requires { q.K_D; }) return q.K_D; else return 0.0;
    }, p);
    const double R = std::visit([](const auto& q) {
      if constexpr (requires { q.R; }) return q.R; else return 1.0;
    }, p);
    EXPECT_NEAR(dc_gain(d), 1.0 / (K_D + 1.0 / R), 1e-14) << kind_name(p);
  }
}

TEST(PfTransfer, HydroWaterHammerZero) {
  const SGHydro p{};
  const RationalTF g = sg_mechanical_path(p);
  const auto z = oracle::roots(vec(g.num()));
  int rhp = 0;
  for (auto r : z)
    if (r.real() > 0.0) {
      ++rhp;
      EXPECT_NEAR(r.real(), 1.0 / p.T_w, 1e-10);
      EXPECT_NEAR(r.imag(), 0.0, 1e-10);
    }
  EXPECT_EQ(rhp, 1);
  EXPECT_THROW(sg_mechanical_path(VSM{}), InvalidArgument);
}

TEST(QvTransfer, Examples) {
  const RationalTF s = qv_transfer(StaticQDroop{0.1});
  EXPECT_DOUBLE_EQ(dc_gain(s), 0.1);
  EXPECT_FALSE(is_strictly_proper(s));

  const RationalTF f = qv_transfer(FilteredQDroop{0.1, 0.05});
  for (double w : {0.0, 2.0, 500.0}) {
    const oracle::C ref = 0.1 / (1.0 + oracle::C(0.0, 0.05 * w));
    EXPECT_NEAR(std::abs(eval_response(f, w) - ref), 0.0, 1e-15);
    // Re[1/D] = 1/d_q at every frequency
    EXPECT_NEAR((1.0 / eval_response(f, w)).real(), 10.0, 1e-12);
  }
}

TEST(Validation, NamesOffendingField) {
  try {
    pf_transfer(VSM{-1.0, 20.0});
    FAIL();
  } catch (const InvalidParameters& e) {
    EXPECT_NE(std::string(e.what()).find("M"), std::string::npos);
  }
  EXPECT_THROW(pf_transfer(Droop{0.0}), InvalidParameters);
  EXPECT_THROW(pf_transfer(SecondOrderDroop{0.05, 10.0, 0.0, 0.0}), InvalidParameters);
  EXPECT_THROW(pf_transfer(SGReheat{3.0, 1.0, 0.05, 0.2, 0.5, 7.0, 1.0}), InvalidParameters);
  EXPECT_THROW(pf_transfer(SGHydro{3.0, 1.0, 0.05, 0.2, 0.0, 0.38, 5.0}), InvalidParameters);
  EXPECT_THROW(pf_transfer(SGNonReheat{3.0, -1.0, 0.05, 0.2, 0.5}), InvalidParameters);
  EXPECT_THROW(qv_transfer(FilteredQDroop{0.1, 0.0}), InvalidParameters);
  EXPECT_THROW(qv_transfer(StaticQDroop{-0.1}), InvalidParameters);
}

TEST(Fleet, SevenLabelledDevices) {
  const auto fleet = reference_fleet();
  ASSERT_EQ(fleet.size(), 7u);
  EXPECT_EQ(fleet[0].label, "DUT 1");
  EXPECT_EQ(kind_name(fleet[6].params), "sg_hydro");
  EXPECT_EQ(pf_transfer(ideal_vsc()), RationalTF({1.0}, {20.0, 10.0}));
}
