// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pld/io.hpp"
#include "pld/landscape.hpp"

using namespace pld;

TEST(SlicePlane, UnitTeacherAndOrthonormalDirections) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    for (std::size_t v : {2u, 3u, 100u}) {
      const auto p = make_plane(v, seed);
      EXPECT_NEAR(norm2(p.teacher), 1.0, 1e-12);
      EXPECT_LT(std::abs(dot(p.d1, p.d2)), 1e-10);
      EXPECT_LT(std::abs(dot(p.d1, p.d1) - 1.0), 1e-10);
      EXPECT_LT(std::abs(dot(p.d2, p.d2) - 1.0), 1e-10);
      EXPECT_EQ(p.label, argmax(p.teacher));
    }
  }
  EXPECT_THROW(make_plane(1, 0), InvalidArgument);
}

TEST(SliceCoordinates, SymmetricAndContainOrigin) {
  SliceSpec spec;
  const auto xs = slice_coordinates(spec);
  ASSERT_EQ(xs.size(), 41u);
  EXPECT_EQ(xs.front(), -5.0);
  EXPECT_EQ(xs.back(), 5.0);
  EXPECT_EQ(xs[20], 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xs[i], -xs[xs.size() - 1 - i]);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_NEAR(xs[i] - xs[i - 1], 0.25, 1e-14);
}

TEST(SliceSpec, Validation) {
  SliceSpec spec;
  spec.resolution = 2;
  EXPECT_THROW(make_slice(spec), InvalidArgument);
  spec = {};
  spec.classes = 1;
  EXPECT_THROW(make_slice(spec), InvalidArgument);
  spec = {};
  spec.temperatures = {1.0, 0.0};
  EXPECT_THROW(make_slice(spec), InvalidArgument);
}

TEST(Slice, KdVanishesAtOrigin) {
  const auto plane = make_plane(100, 4);
  for (double t : {0.5, 1.0, 2.0}) EXPECT_NEAR(slice_loss(LossKind::kd, t, plane, 0.0, 0.0), 0.0, 1e-12);
}

TEST(Slice, DefaultGridShapeAndDeterminism) {
  SliceSpec spec;
  spec.resolution = 11;
  spec.temperatures = {1.0, 2.0};
  const auto a = make_slice(spec);
  const auto b = make_slice(spec);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.surfaces.size(), 6u);
  EXPECT_EQ(a.surfaces[0].loss, LossKind::pld);
  EXPECT_EQ(a.surfaces[1].temperature, 2.0);
  for (const auto& s : a.surfaces) {
    EXPECT_EQ(s.values.size(), 121u);
    EXPECT_TRUE(all_finite(s.values));
  }
  const auto csv = landscape_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 6 * 121);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,beta,loss_kind,temperature,value");
}

TEST(Slice, PldGridIsTranslationInvariant) {
  SliceSpec spec;
  spec.resolution = 9;
  const auto plane = make_plane(spec.classes, spec.seed);
  for (double c : {-30.0, 7.5}) {
    for (std::size_t ia = 0; ia < 9; ++ia) {
      for (std::size_t ib = 0; ib < 9; ++ib) {
        const double a = -5.0 + 1.25 * ia, b = -5.0 + 1.25 * ib;
        auto s = slice_point(plane, a, b);
        const double base = slice_loss(LossKind::pld, 1.0, plane, s);
        for (auto& v : s) v += c;
        EXPECT_NEAR(slice_loss(LossKind::pld, 1.0, plane, s), base, 1e-8);
      }
    }
  }
}

TEST(Slice, PldOriginBelowCorners) {
  SliceSpec spec;
  const auto grid = temperature_sweep(spec, {2.0, 1.0});
  const std::size_t r = grid.resolution(), mid = r / 2;
  for (std::size_t s = 0; s < grid.surfaces.size(); ++s) {
    const double origin = grid.value(s, mid, mid);
    for (auto [ia, ib] : {std::pair{0ul, 0ul}, {0ul, r - 1}, {r - 1, 0ul}, {r - 1, r - 1}})
      EXPECT_LE(origin, grid.value(s, ia, ib)) << "T=" << grid.surfaces[s].temperature;
  }
}

TEST(Slice, SweepSharesThePlane) {
  SliceSpec spec;
  spec.resolution = 7;
  const auto sweep = temperature_sweep(spec);
  ASSERT_EQ(sweep.surfaces.size(), 4u);
  const auto plane = make_plane(spec.classes, spec.seed);
  for (const auto& surf : sweep.surfaces) {
    EXPECT_EQ(surf.loss, LossKind::pld);
    for (std::size_t ia = 0; ia < 7; ++ia)
      for (std::size_t ib = 0; ib < 7; ++ib)
        EXPECT_EQ(surf.values[ia * 7 + ib],
                  slice_loss(LossKind::pld, surf.temperature, plane, sweep.alphas[ia], sweep.betas[ib]));
  }
  EXPECT_NE(sweep.surfaces[0].values, sweep.surfaces[3].values);
}

TEST(Slice, LowTemperatureArgminStaysClose) {
  SliceSpec spec;
  const auto sweep = temperature_sweep(spec, {2.0, 1.0});
  const std::size_t r = sweep.resolution();
  auto argmin = [&](std::size_t s) {
    const auto& v = sweep.surfaces[s].values;
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  const auto a = argmin(0), b = argmin(1);
  EXPECT_LE(std::max(a / r, b / r) - std::min(a / r, b / r), 1u);
  EXPECT_LE(std::max(a % r, b % r) - std::min(a % r, b % r), 1u);
  EXPECT_NE(sweep.surfaces[0].values, sweep.surfaces[1].values);
}

TEST(ConvexityProbe, PldAndKdHaveNoViolations) {
  SliceSpec spec;
  const auto plane = make_plane(spec.classes, spec.seed);
  for (double t : {2.0, 1.0, 0.5, 0.1})
    EXPECT_EQ(line_convexity_probe(LossKind::pld, t, spec, plane, 1000, 17), 0u) << "T=" << t;
  EXPECT_EQ(line_convexity_probe(LossKind::kd, 1.0, spec, plane, 1000, 18), 0u);
  EXPECT_THROW(line_convexity_probe(LossKind::pld, 1.0, spec, plane, 0, 1), InvalidArgument);
}

TEST(ConvexityProbe, EndpointsAreExact) {
  const auto plane = make_plane(50, 3);
  for (auto kind : {LossKind::pld, LossKind::kd, LossKind::dist}) {
    EXPECT_NEAR(convexity_gap(kind, 1.0, plane, 1.0, -2.0, 3.5, 0.5, 1.0), 0.0, 1e-12);
    EXPECT_NEAR(convexity_gap(kind, 1.0, plane, 1.0, -2.0, 3.5, 0.5, 0.0), 0.0, 1e-12);
  }
}
