#include <gtest/gtest.h>

#include <cmath>

#include "slicedim/boxdim.hpp"
#include "slicedim/error.hpp"
#include "slicedim/geometry.hpp"

using namespace slicedim;

namespace {
PointSet segment(int count) {
  PointSet p(2);
  for (int i = 0; i < count; ++i) {
    const double t = (i + 0.5) / count;
    const std::vector<double> x{t, 0.3};
    p.push_back(x);
  }
  return p;
}
}  // namespace

TEST(BoxCount, ExactCountsOnAlignedCover) {
  const auto ifs = make_ifs(1.0 / 3.0, {{0.0}, {2.0 / 3.0}});
  const auto cover = cover_from_ifs(ifs, 8);
  EXPECT_EQ(cover.size(), 256u);
  for (int k = 1; k <= 8; ++k) EXPECT_EQ(box_count(cover.centers, std::pow(3.0, -k)), std::size_t{1} << k);
  std::vector<ScaleCount> counts;
  for (int k = 1; k <= 8; ++k) counts.push_back({std::pow(3.0, -k), std::size_t{1} << k});
  EXPECT_NEAR(dim_fit(counts).slope, std::log(2.0) / std::log(3.0), 1e-12);
}

TEST(BoxCount, ResolutionAndFitGuards) {
  const auto cover = cover_from_ifs(make_ifs(1.0 / 3.0, {{0.0}, {2.0 / 3.0}}), 4);
  EXPECT_THROW(box_count(cover, cover.cube_side / 2), ResolutionError);
  std::vector<ScaleCount> three{{0.5, 2}, {0.25, 4}, {0.125, 8}};
  EXPECT_THROW(dim_fit(three), std::invalid_argument);
  EXPECT_EQ(dyadic_sides(1.0, 0.125).size(), 4u);
}

TEST(BoxCount, SegmentHasDimensionOne) {
  const auto est = estimate_dimension(segment(4096), 0.25, 1.0 / 2048);
  ASSERT_TRUE(est.estimated);
  EXPECT_NEAR(est.fit.slope, 1.0, 0.02);
  const auto few = estimate_dimension(segment(10), 0.25, 0.1);
  EXPECT_FALSE(few.estimated);
  EXPECT_FALSE(few.reason.empty());
  const auto none = estimate_dimension(PointSet(2), 0.25, 0.01);
  EXPECT_EQ(none.reason, "empty");
}

TEST(Slices, SquareSlicedByLineIsSegment) {
  const auto mu = uniform_measure(2, 512);
  const auto cover = cover_from_points(mu.atoms(), mu.cell_size());
  const auto p = line_projection(0.4);
  const std::vector<double> u{0.6};
  const auto slab = slice_set(cover, p, u, cover.cube_side);
  const auto fibre = fiber_coordinates(slab, p);
  EXPECT_EQ(fibre.dim(), 1);
  const auto est = estimate_dimension(fibre, 1.0 / 16.0, 2.0 * cover.cube_side);
  ASSERT_TRUE(est.estimated);
  EXPECT_NEAR(est.fit.slope, 1.0, 0.05);
  EXPECT_THROW(slice_set(cover, p, u, cover.cube_side / 2), ResolutionError);
}

TEST(Intersections, IdentityRotationOfSquaresOverlapsInSquare) {
  const auto a = cover_from_points(uniform_measure(2, 128).atoms(), 1.0 / 128);
  const auto b = cover_from_points(uniform_measure(2, 128).atoms(), 1.0 / 128);
  const Rotation id(Eigen::MatrixXd::Identity(2, 2));
  const std::vector<double> z{0.5, 0.5};
  const auto pts = intersect_sets(a, b, id, z, a.cube_side);
  EXPECT_NEAR(static_cast<double>(pts.size()), 64.0 * 64.0, 0.1 * 64.0 * 64.0);
  const IntersectionIndex index(a, a.cube_side);
  const std::vector<double> far{5.0, 5.0};
  EXPECT_EQ(index.intersect(b, id, far).size(), 0u);
}

TEST(Covers, ProductCoverSizes) {
  const auto a = cover_from_ifs(build_cantor_ifs(1, 0.8, BranchLayout::corner), 5);
  const auto b = cover_from_ifs(build_cantor_ifs(1, 0.9, BranchLayout::corner), 5);
  const auto p = product_cover(a, b);
  EXPECT_EQ(p.ambient_dim, 2);
  EXPECT_EQ(p.size(), a.size() * b.size());
  EXPECT_DOUBLE_EQ(p.cube_side, std::max(a.cube_side, b.cube_side));
}

TEST(Slices, UpperBoundHoldsOnMostNonemptySlices) {
  const auto ifs = build_cantor_ifs(2, 1.4, BranchLayout::corner);
  const auto cover = cover_from_ifs(ifs, 10);
  const auto whole = estimate_dimension(cover.centers, 0.25, cover.cube_side);
  ASSERT_TRUE(whole.estimated);
  const auto p = line_projection(0.9);
  int nonempty = 0, within = 0;
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> u{-0.5 + 2.0 * (k + 0.5) / 50.0};
    const auto slab = slice_set(cover, p, u, cover.cube_side);
    if (slab.empty()) continue;
    const auto est = estimate_dimension(fiber_coordinates(slab, p), 0.25, cover.cube_side);
    if (!est.estimated) continue;
    ++nonempty;
    within += est.fit.slope <= whole.fit.slope - 1.0 + 0.1;
  }
  ASSERT_GT(nonempty, 10);
  EXPECT_GE(within, 0.9 * nonempty);
}
