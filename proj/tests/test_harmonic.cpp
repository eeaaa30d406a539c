#include <gtest/gtest.h>

#include <cmath>

#include "slicedim/error.hpp"
#include "slicedim/harmonic.hpp"
#include "slicedim/rng.hpp"

using namespace slicedim;

TEST(Fourier, ProductFormMatchesAtomSum) {
  for (auto [n, s] : {std::pair{1, 0.6309}, std::pair{2, 1.5}, std::pair{2, 1.2}}) {
    const auto ifs = build_cantor_ifs(n, s, BranchLayout::corner);
    const auto mu = natural_measure(ifs, 5);
    FourierTransform fast(mu), slow(mu, false);
    Rng rng(42);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = rng.uniform(-40.0, 40.0);
      const auto a = fast(x), b = slow(x);
      EXPECT_NEAR(a.real(), b.real(), 1e-12);
      EXPECT_NEAR(a.imag(), b.imag(), 1e-12);
      EXPECT_NEAR(fourier_transform(mu, x).real(), b.real(), 1e-12);
    }
  }
}

TEST(Fourier, MiddleThirdsCosineProduct) {
  const auto mu = natural_measure(make_ifs(1.0 / 3.0, {{0.0}, {2.0 / 3.0}}), 6);
  FourierTransform ft(mu);
  for (double x : {0.3, 1.0, 7.5, 243.0, 500.25}) {
    double expected = 1.0;
    for (int j = 0; j < 6; ++j) expected *= std::cos(M_PI * x * (2.0 / 3.0) * std::pow(3.0, -j));
    const std::vector<double> xs{x};
    EXPECT_NEAR(std::abs(ft(xs)), std::abs(expected), 1e-12);
  }
}

TEST(Fourier, CellFormFactor) {
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_DOUBLE_EQ(cell_form_factor(zero, 0.1), 1.0);
  const std::vector<double> node{10.0, 3.0};
  EXPECT_NEAR(cell_form_factor(node, 0.1), 0.0, 1e-30);
  const std::vector<double> half{5.0};
  EXPECT_NEAR(cell_form_factor(half, 0.1), std::pow(2.0 / M_PI, 2), 1e-14);
}

TEST(Energy, RieszConstant) {
  EXPECT_NEAR(riesz_constant(1, 0.5), 1.0, 1e-14);
  const double expected = std::pow(M_PI, 0.5) * std::tgamma(0.25) / std::tgamma(0.75);
  EXPECT_NEAR(riesz_constant(2, 1.5), expected, 1e-12);
  EXPECT_THROW(riesz_constant(2, 2.0), std::invalid_argument);
}

TEST(Energy, LebesgueIntervalClosedForm) {
  const auto mu = uniform_measure(1, 512);
  const double spatial = energy_spatial(mu, 0.5);
  EXPECT_NEAR(spatial, 8.0 / 3.0, 0.02 * 8.0 / 3.0);
  const double fourier = energy_fourier(mu, 0.5, FrequencyGrid::for_support(1, 128.0, mu.diameter()));
  EXPECT_NEAR(fourier / spatial, 1.0, 0.05);
}

TEST(Energy, LebesgueSquareNewtonianClosedForm) {
  const double exact = 4.0 * std::log(1.0 + std::sqrt(2.0)) + 4.0 / 3.0 * (1.0 - std::sqrt(2.0));
  const auto mu = uniform_measure(2, 48);
  EXPECT_NEAR(energy_spatial(mu, 1.0), exact, 0.01 * exact);
}

TEST(Energy, GuardsAtomsAndCoarseGrids) {
  EXPECT_THROW(energy_spatial(point_mass({0.0}), 0.5), Error);
  const auto mu = uniform_measure(1, 64);
  FrequencyGrid coarse{1, 64.0, 1.0};
  EXPECT_THROW(energy_fourier(mu, 0.5, coarse), ResolutionError);
}

TEST(Spherical, PointMassGivesSphereArea) {
  EXPECT_NEAR(sphere_area(2), 2.0 * M_PI, 1e-14);
  EXPECT_NEAR(sphere_area(3), 4.0 * M_PI, 1e-14);
  EXPECT_NEAR(spherical_average(point_mass({0.3, 0.2}), 17.0), 2.0 * M_PI, 1e-10);
  EXPECT_NEAR(spherical_average(point_mass({0.1, 0.2, 0.3}), 5.0), 4.0 * M_PI, 1e-8);
  EXPECT_THROW(spherical_average(point_mass({0.0}), 5.0), std::invalid_argument);
}

TEST(Spherical, TooFewNodesRejected) {
  const auto nu = natural_measure(build_cantor_ifs(2, 1.2, BranchLayout::corner), 4);
  EXPECT_THROW(spherical_average(nu, 50.0, 8), ResolutionError);
  EXPECT_GT(spherical_average(nu, 50.0), 0.0);
}

TEST(Spherical, RadialIntegralOfPointMass) {
  const double beta = 0.6;
  const double got = radial_weighted_integral(point_mass({0.0, 0.0}), beta, 2.0, 10.0);
  const double exact = 2.0 * M_PI * (std::pow(10.0, 2.0 - beta) - std::pow(2.0, 2.0 - beta)) / (2.0 - beta);
  EXPECT_NEAR(got, exact, 1e-8 * exact);
}

TEST(Identity, PointMassIsExact) {
  const auto mu = natural_measure(build_cantor_ifs(2, 1.5, BranchLayout::corner), 4);
  const auto check = rotation_average_identity_check(mu, point_mass({0.25, 0.5}), 5, FrequencyGrid::make(2, 16.0, 0.5), 1);
  EXPECT_LT(check.relative_error, 1e-12);
  EXPECT_GT(check.grid_nodes, 0u);
}
