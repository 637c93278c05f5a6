#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "valse/quantizer.hpp"

using namespace valse;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(Quantizer, OneBitIsSignQuantizer) {
  const double sz = 2.0;
  const auto q = build_uniform(1, sz);
  const double r = 3.0 * sz / std::sqrt(2.0);
  ASSERT_EQ(q.thresholds.size(), 3u);
  EXPECT_EQ(q.thresholds[0], -kInf);
  EXPECT_EQ(q.thresholds[1], 0.0);
  EXPECT_EQ(q.thresholds[2], kInf);
  EXPECT_NEAR(q.levels[0], -r / 2, 1e-15);
  EXPECT_NEAR(q.levels[1], r / 2, 1e-15);
  EXPECT_NEAR(q.clip_halfwidth, r, 1e-15);
}

TEST(Quantizer, TwoBitLayout) {
  const auto q = build_uniform(2, std::sqrt(2.0));  // r = 3
  const std::vector<double> t{-kInf, -1.5, 0.0, 1.5, kInf};
  const std::vector<double> l{-2.25, -0.75, 0.75, 2.25};
  ASSERT_EQ(q.cell_count(), 4);
  EXPECT_EQ(q.thresholds[0], t[0]);
  EXPECT_EQ(q.thresholds[4], t[4]);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(q.thresholds[i], t[i], 1e-14);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(q.levels[i], l[i], 1e-14);
}

TEST(Quantizer, LevelsLieInsideTheirCells) {
  for (int b = 1; b <= 8; ++b) {
    const auto q = build_uniform(b, 1.3);
    ASSERT_EQ(q.cell_count(), 1 << b);
    for (int l = 0; l < q.cell_count(); ++l) {
      const auto [lo, hi] = interval_of(q, l);
      EXPECT_LT(lo, q.levels[l]);
      EXPECT_LT(q.levels[l], hi);
      EXPECT_EQ(cell_index(q, q.levels[l]), l);
      EXPECT_EQ(level_index(q, q.levels[l]), l);
    }
  }
}

TEST(Quantizer, CellsAreHalfOpen) {
  const auto q = build_uniform(2, std::sqrt(2.0));
  EXPECT_EQ(cell_index(q, 0.0), 2);
  EXPECT_EQ(cell_index(q, -1.5), 1);
  EXPECT_EQ(cell_index(q, std::nextafter(-1.5, -kInf)), 0);
  EXPECT_EQ(cell_index(q, 1e300), 3);
  EXPECT_EQ(cell_index(q, -1e300), 0);
  EXPECT_THROW(cell_index(q, std::nan("")), std::invalid_argument);
}

TEST(Quantizer, NestedThresholds) {
  for (int b = 1; b < 10; ++b) {
    const auto coarse = build_uniform(b, 0.7);
    const auto fine = build_uniform(b + 1, 0.7);
    for (double t : coarse.thresholds) {
      if (std::isinf(t)) continue;
      bool found = false;
      for (double f : fine.thresholds) found = found || std::abs(f - t) < 1e-12;
      EXPECT_TRUE(found) << "B=" << b << " t=" << t;
    }
  }
}

TEST(Quantizer, QuantizeRoundTrip) {
  const auto q = build_uniform(3, 1.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.5);
  CVector x(200);
  for (auto& v : x) v = cplx(g(rng), g(rng));
  const CVector y = quantize(q, x);
  const CVector yq = dequantize_aqnm(q, y);
  const auto cells = cells_of(q, y);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(y[i], yq[i]);
    EXPECT_EQ(cells.re[i], cell_index(q, x[i].real()));
    EXPECT_EQ(cells.im[i], cell_index(q, x[i].imag()));
  }
}

TEST(Quantizer, RejectsInvalidInput) {
  EXPECT_THROW(build_uniform(0, 1.0), std::invalid_argument);
  EXPECT_THROW(build_uniform(2, 0.0), std::invalid_argument);
  const auto q = build_uniform(2, 1.0);
  EXPECT_THROW(interval_of(q, 4), std::out_of_range);
  EXPECT_THROW(level_index(q, 0.123), std::invalid_argument);
  CVector bad(1);
  bad[0] = cplx(0.123, q.levels[0]);
  EXPECT_THROW(dequantize_aqnm(q, bad), std::invalid_argument);
}
