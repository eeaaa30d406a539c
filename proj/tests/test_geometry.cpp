#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "slicedim/error.hpp"
#include "slicedim/geometry.hpp"
#include "slicedim/rng.hpp"

using namespace slicedim;

TEST(Rotation, HaarSamplesAreOrthogonalAndDeterministic) {
  for (int n : {2, 3}) {
    const auto g = random_rotation(n, 9, 4);
    const Eigen::MatrixXd id = g.matrix() * g.matrix().transpose();
    EXPECT_TRUE(id.isIdentity(1e-12));
    EXPECT_EQ(g.matrix(), random_rotation(n, 9, 4).matrix());
    EXPECT_NE(g.matrix(), random_rotation(n, 9, 5).matrix());
  }
  EXPECT_THROW(Rotation(Eigen::MatrixXd::Ones(2, 2)), std::invalid_argument);
}

TEST(Rotation, DeterminantSignsBalanced) {
  int positive = 0;
  for (int i = 0; i < 400; ++i) positive += random_rotation(2, 1, static_cast<std::uint64_t>(i)).determinant() > 0;
  EXPECT_GT(positive, 160);
  EXPECT_LT(positive, 240);
}

TEST(Projection, FamiliesHaveOrthonormalRowsAndKernels) {
  const auto p = difference_projection(random_rotation(2, 3, 0));
  EXPECT_TRUE((p.rows() * p.rows().transpose()).isIdentity(1e-12));
  const Eigen::MatrixXd k = p.kernel_basis();
  EXPECT_EQ(k.rows(), 2);
  EXPECT_NEAR((p.rows() * k.transpose()).norm(), 0.0, 1e-12);
  const auto q = scaled_difference_projection(1, 2.0);
  EXPECT_NEAR(q.rows()(0, 0), 1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(q.rows()(0, 1), -2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_THROW(Projection(Eigen::MatrixXd::Ones(1, 2)), std::invalid_argument);
}

TEST(Projection, SamplesAreReproducible) {
  const auto fam = ProjectionFamily::grassmannian(2, 1, 77);
  const auto a = sample_projection(fam, 3), b = sample_projection(fam, 3);
  EXPECT_EQ(a.parameters, b.parameters);
  ASSERT_EQ(a.parameters.size(), 1u);
  EXPECT_GE(a.parameters[0], 0.0);
  EXPECT_LT(a.parameters[0], M_PI);
  const auto d = sample_projection(ProjectionFamily::difference(2, 77), 0);
  EXPECT_NEAR(d.scale, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(d.parameters.size(), 4u);
  const auto s = sample_projection(ProjectionFamily::scaled_difference(1, 77, 0.5, 2.0), 0);
  EXPECT_GE(s.parameters[0], 0.5);
  EXPECT_LE(s.parameters[0], 2.0);
  EXPECT_NEAR(s.scale, std::sqrt(1.0 + s.parameters[0] * s.parameters[0]), 1e-14);
}

TEST(Density, LebesgueDensityIsOne) {
  const auto mu = uniform_measure(2, 256);
  const std::vector<double> u{0.5, 0.5};
  EXPECT_NEAR(density_at(mu, u, 0.1), 1.0, 0.02);
  const auto line = project_pushforward(line_projection(0.0), mu);
  EXPECT_EQ(line.ambient_dim(), 1);
  const std::vector<double> v{0.5};
  EXPECT_NEAR(density_at(line, v, 0.05), 1.0, 0.02);
  EXPECT_THROW(density_at(mu, u, mu.cell_size()), ResolutionError);
}

TEST(Density, L2OfLebesgueProjections) {
  // Projections of the unit square onto lines through angle theta have the
  // trapezoid density with integral of the square equal to
  // 1/c - s/(3 c^2) for c = max(|cos|, |sin|), s = min(|cos|, |sin|).
  const auto mu = uniform_measure(2, 128);
  const auto fam = ProjectionFamily::fixed(line_projection(0.0));
  const auto est = l2_density_functional(fam, mu, 1, 0.03, 0.0075);
  EXPECT_NEAR(est.value, 1.0, 0.05);
  const double theta = M_PI / 4;
  const auto diag = l2_density_functional(ProjectionFamily::fixed(line_projection(theta)), mu, 1, 0.03, 0.0075);
  const double c = std::cos(theta), s = std::sin(theta);
  EXPECT_NEAR(diag.value, 1.0 / c - s / (3.0 * c * c), 0.05);
}

TEST(Mollify, PreservesMassAwayFromClipping) {
  const auto mu = natural_measure(build_cantor_ifs(2, 1.5, BranchLayout::corner), 5);
  const auto m = mollify(mu, 0.05, 0.0125);
  EXPECT_NEAR(m.total_mass(), mu.total_mass(), 0.02);
  EXPECT_DOUBLE_EQ(m.cell_size(), 0.0125);
  EXPECT_THROW(mollify(mu, 0.05, 0.05), std::exception);
}

TEST(Rescale, MapsBallToUnitBall) {
  const auto mu = uniform_measure(2, 200);
  const std::vector<double> a{0.5, 0.5};
  const auto r = rescale(mu, a, 0.2, 2.0);
  EXPECT_NEAR(r.total_mass(), M_PI, 0.03);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_LE(std::hypot(r.atom(i)[0], r.atom(i)[1]), 1.0 + 1e-12);
  }
  EXPECT_NEAR(r.cell_size(), mu.cell_size() / 0.2, 1e-15);
}

TEST(Tube, LebesgueSlabIsAreaOfStrip) {
  const auto mu = uniform_measure(2, 1000);
  const std::vector<double> x{0.5, 0.5};
  const double r = 0.2, delta = 0.01;
  const double exact = 2.0 * (delta * std::sqrt(r * r - delta * delta) + r * r * std::asin(delta / r));
  EXPECT_NEAR(tube_mass(mu, line_projection(0.7), x, r, delta), exact, 0.02 * exact);
  EXPECT_NEAR(tube_ratio(mu, line_projection(0.7), x, r, delta, 1.0), exact / (r * delta), 0.02 * exact / (r * delta));
  const std::vector<double> radii{0.1, 0.2}, deltas{0.01};
  EXPECT_EQ(tube_sweep(mu, line_projection(0.1), x, radii, deltas, 1.0).size(), 2u);
}

TEST(Rotation, HaarMeanOfRotatedAxisVanishes) {
  for (int n : {2, 3}) {
    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) {
      const auto g = random_rotation(n, 2024, static_cast<std::uint64_t>(i));
      for (int d = 0; d < n; ++d) mean[d] += g.matrix()(d, 0) / samples;
    }
    for (double m : mean) EXPECT_LT(std::abs(m), 0.02);
  }
}

TEST(Rotation, HaarInvarianceUnderFixedRotation) {
  const auto h = random_rotation(3, 5, 0);
  const int samples = 10000;
  std::vector<double> plain, composed;
  for (int i = 0; i < samples; ++i) {
    const auto g = random_rotation(3, 6, static_cast<std::uint64_t>(i));
    plain.push_back(g.matrix()(0, 0));
    composed.push_back((h.matrix() * random_rotation(3, 7, static_cast<std::uint64_t>(i)).matrix())(0, 0));
  }
  std::sort(plain.begin(), plain.end());
  std::sort(composed.begin(), composed.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < plain.size() && j < composed.size()) {
    if (plain[i] <= composed[j]) ++i; else ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) - static_cast<double>(j)) / samples);
  }
  EXPECT_LT(ks, 0.03);
}
