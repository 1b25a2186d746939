#include <gtest/gtest.h>

#include <vector>

#include "situgen/geometry.hpp"
#include "situgen/rng.hpp"

using namespace situgen;

TEST(Geometry, WrapRanges) {
  EXPECT_DOUBLE_EQ(wrap_pi(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_pi(-kPi), kPi);
  EXPECT_NEAR(wrap_pi(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_two_pi(0.0), 0.0);
  EXPECT_NEAR(wrap_two_pi(-kPi / 2), 3 * kPi / 2, 1e-12);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_two_pi(a);
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, kTwoPi);
    EXPECT_NEAR(std::remainder(w - a, kTwoPi), 0.0, 1e-9);
    const double p = wrap_pi(a);
    EXPECT_GT(p, -kPi);
    EXPECT_LE(p, kPi);
  }
}

TEST(Geometry, HeadingOf) {
  EXPECT_DOUBLE_EQ(heading_of({1, 0}), 0.0);
  EXPECT_NEAR(heading_of({0, 1}), kPi / 2, 1e-15);
  EXPECT_NEAR(heading_of({0, -1}), 3 * kPi / 2, 1e-15);
}

TEST(Geometry, FileDegreesRoundTrip) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double r = rng.uniform(0.0, kTwoPi);
    const double d = file_degrees(r);
    EXPECT_DOUBLE_EQ(file_degrees(file_radians(d)), d);
  }
  EXPECT_DOUBLE_EQ(file_degrees(kPi / 2), 90.0);
}

TEST(Geometry, RigidInverse) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Rigid2 m{rng.uniform(0.0, kTwoPi), {rng.uniform(-5, 5), rng.uniform(-5, 5)}};
    const Vec2 p{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec2 back = m.inverse().apply(m.apply(p));
    EXPECT_NEAR(back.x, p.x, 1e-12);
    EXPECT_NEAR(back.y, p.y, 1e-12);
    EXPECT_NEAR(distance(m.apply(p), m.apply({0, 0})), norm(p), 1e-12);
  }
}

TEST(Geometry, OverlapArea) {
  const Rect a{{0, 0}, {2, 2}};
  EXPECT_DOUBLE_EQ(overlap_area(a, {{1, 1}, {3, 3}}), 1.0);
  EXPECT_DOUBLE_EQ(overlap_area(a, {{2, 0}, {3, 1}}), 0.0);
  EXPECT_DOUBLE_EQ(overlap_area(a, {{5, 5}, {6, 6}}), 0.0);
  EXPECT_DOUBLE_EQ(overlap_area(a, {{0.5, 0.5}, {1, 1}}), 0.25);
}

TEST(Geometry, FootprintDistanceAndContains) {
  const Footprint f{{0, 0}, {1, 0.5}, kPi / 2};
  EXPECT_TRUE(f.contains({0, 0.9}));
  EXPECT_FALSE(f.contains({0.9, 0}));
  EXPECT_NEAR(f.distance({0, 3}), 2.0, 1e-12);
  EXPECT_NEAR(f.distance({2.5, 0}), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(f.distance({0, 0}), 0.0);
  const Rect b = f.bounds();
  EXPECT_NEAR(b.width(), 1.0, 1e-12);
  EXPECT_NEAR(b.height(), 2.0, 1e-12);
}

TEST(Geometry, SegmentProjection) {
  const auto p = project_onto_segment({1, 1}, {0, 0}, {2, 0});
  EXPECT_DOUBLE_EQ(p.t, 0.5);
  EXPECT_DOUBLE_EQ(p.distance, 1.0);
  const auto q = project_onto_segment({3, 0}, {0, 0}, {2, 0});
  EXPECT_DOUBLE_EQ(q.t, 1.5);
}

TEST(Geometry, Polygons) {
  const std::vector<Vec2> square{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(signed_area(square), 4.0);
  EXPECT_TRUE(point_in_polygon(square, {1, 1}));
  EXPECT_FALSE(point_in_polygon(square, {3, 1}));
  EXPECT_TRUE(polygon_is_simple(square));
  const std::vector<Vec2> bowtie{{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  EXPECT_FALSE(polygon_is_simple(bowtie));
  const std::vector<Vec2> ell{{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 3}, {0, 3}};
  EXPECT_DOUBLE_EQ(signed_area(ell), 6.0);
  EXPECT_FALSE(point_in_polygon(ell, {3, 2}));
  EXPECT_TRUE(point_in_polygon(ell, {0.5, 2.5}));
  const Rect b = polygon_bounds(ell);
  EXPECT_EQ(b.max.x, 4.0);
  EXPECT_EQ(b.max.y, 3.0);
}

TEST(Rng, Deterministic) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
}

TEST(Rng, IndexIsRoughlyUniform) {
  Rng rng(5);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[rng.index(7)];
  for (const int h : hist) {
    EXPECT_GT(h, 9400);
    EXPECT_LT(h, 10600);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(6);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  shuffle(v, rng);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}
