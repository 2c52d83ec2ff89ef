#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ppdiv/rng.hpp"
#include "ppdiv/sampler.hpp"

using namespace ppdiv;

namespace {

PointPattern at(std::vector<std::pair<double, double>> pts) {
  PointPattern p;
  for (auto [t, m] : pts) p.points.push_back({{t}, {}, m, 1});
  return p;
}

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(5, 1), b = Rng::stream(5, 1), c = Rng::stream(5, 2);
  for (int i = 0; i < 10; ++i) {
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
  }
}

TEST(Rng, PoissonMoments) {
  for (double mean : {0.3, 4.0, 9.9, 10.0, 37.5, 400.0}) {
    Rng rng(static_cast<std::uint64_t>(mean * 10));
    const int n = 200000;
    double s = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      sq += k * k;
    }
    const double m = s / n, v = sq / n - m * m;
    EXPECT_LT(std::abs(m - mean), 4 * std::sqrt(mean / n)) << mean;
    EXPECT_LT(std::abs(v - mean), 4 * mean * std::sqrt(2.0 / n) + 4 * std::sqrt(mean / n)) << mean;
  }
}

TEST(SamplePp, ZeroModelIsEmpty) {
  Rng rng(1);
  const IntensityModel zero = Grid{{{0.0}, {1.0}, {3}}, {0, 0, 0}};
  const IntensityModel none = Discrete{{{"a", 0}}};
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(sample_pp(zero, Region{}, rng).points.empty());
    EXPECT_TRUE(sample_pp(none, Region{}, rng).points.empty());
  }
}

TEST(SamplePp, MeanCount) {
  const IntensityModel model = Grid{{{0.0}, {2.0}, {2}}, {1.5, 2.5}};
  const int n = 10000;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(3, i);
    total += static_cast<double>(sample_pp(model, Region{}, rng).size());
  }
  EXPECT_LT(std::abs(total / n - 4.0), 3 * 2.0 / 100);
}

TEST(SamplePp, Deterministic) {
  const IntensityModel model = Smooth::from_expression(0, 5, "1 + sin(x)", {}, 2.0);
  Rng a(42), b(42);
  EXPECT_EQ(sample_pp(model, Region{}, a), sample_pp(model, Region{}, b));
}

TEST(SamplePp, PointsStayInWindow) {
  const IntensityModel model = Grid{{{0.0, 0.0}, {2.0, 1.0}, {4, 2}}, {1, 2, 3, 4, 5, 6, 7, 8}};
  const Region w = Box{{0.3, 0.2}, {1.1, 0.9}};
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto eta = sample_pp(model, w, rng);
    for (const auto& p : eta.points) EXPECT_TRUE(std::get<Box>(w).contains(p.coords));
  }
}

TEST(SamplePp, SmoothThinningMean) {
  const IntensityModel model = Smooth::from_expression(0, 2, "3 * x");  // mass 6, bound estimated
  const int n = 10000;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(4, i);
    total += static_cast<double>(sample_pp(model, Region{}, rng).size());
  }
  EXPECT_LT(std::abs(total / n - 6.0), 3 * std::sqrt(6.0 / n));
}

TEST(SamplePp, Errors) {
  Rng rng(1);
  try {
    sample_pp(Smooth::from_expression(0, kInf, "1"), Region{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfiniteWindowMass);
  }
  try {
    sample_pp(Smooth::from_expression(0, 1, "1", {}, 0.5), Region{}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ThinningBoundMissing);
  }
  EXPECT_NO_THROW(sample_pp(Smooth::from_expression(0, kInf, "1"), interval(0, 3), rng));
}

TEST(SampleMarked, DeterministicKernel) {
  const IntensityModel base = Grid{{{0.0}, {1.0}, {2}}, {3, 3}};
  MarkKernel k;
  k.reference = MarkReference::discrete({-1, 1});
  k.density = [](const Location& w, std::size_t j) { return (w.coords[0] < 0.5) == (j == 0) ? 1.0 : 0.0; };
  const auto model = make_marked(base, k);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    for (const auto& p : sample_marked(model, Region{}, rng).points) {
      ASSERT_TRUE(p.mark.has_value());
      EXPECT_EQ(*p.mark, p.coords[0] < 0.5 ? -1.0 : 1.0);
    }
  }
}

TEST(SampleMarked, MarkFrequencies) {
  const IntensityModel base = Discrete{{{"t", 3}}};
  const auto model = make_marked(base, constant_kernel(MarkReference::discrete({0, 1}), {0.5, 0.5}));
  std::uint64_t ones = 0, total = 0;
  for (int i = 0; total < 10000; ++i) {
    Rng rng = Rng::stream(6, i);
    for (const auto& p : sample_marked(model, Region{}, rng).points) {
      total += p.multiplicity;
      if (*p.mark == 1) ones += p.multiplicity;
    }
  }
  const double freq = static_cast<double>(ones) / static_cast<double>(total);
  EXPECT_LT(std::abs(freq - 0.5), 3 * std::sqrt(0.25 / static_cast<double>(total)));
}

TEST(SampleMarked, ContinuousMarksInCells) {
  const IntensityModel base = Discrete{{{"t", 50}}};
  MarkKernel k;
  k.reference = MarkReference::grid(0, 1, 2);
  k.density = [](const Location&, std::size_t j) { return j == 0 ? 0.0 : 2.0; };
  Rng rng(3);
  for (const auto& p : sample_marked(make_marked(base, k), Region{}, rng).points) {
    EXPECT_GE(*p.mark, 0.5);
    EXPECT_LE(*p.mark, 1.0);
  }
}

TEST(CountingPath, Examples) {
  PointPattern eta;
  eta.points = {{{0.3}, {}, std::nullopt, 1}, {{0.7}, {}, std::nullopt, 1}};
  const auto x = counting_path(eta);
  EXPECT_EQ(x(0.5), 1.0);
  EXPECT_EQ(x(1.0), 2.0);
  EXPECT_EQ(x(0.0), 0.0);
  EXPECT_EQ(counting_path(PointPattern{})(5.0), 0.0);
  PointPattern twice;
  twice.points = {{{0.3}, {}, std::nullopt, 2}};
  EXPECT_EQ(counting_path(twice)(0.3), 2.0);
  EXPECT_EQ(counting_path(twice)(0.2999), 0.0);
}

TEST(CompoundPath, Examples) {
  const auto x = compound_path(at({{0.7, -1.0}, {0.3, 2.0}}));
  EXPECT_EQ(x(0.5), 2.0);
  EXPECT_EQ(x(1.0), 1.0);
  EXPECT_EQ(x.jumps(), 2u);
  EXPECT_EQ(compound_path(PointPattern{})(1.0), 0.0);
}

TEST(CompoundPath, JumpCountEqualsPointCountForDiffuseBase) {
  const IntensityModel base = Smooth::from_expression(0, 10, "2", {}, 2.0);
  const auto model = make_marked(base, constant_kernel(MarkReference::discrete({-1, 2}), {0.4, 0.6}));
  Rng rng(9);
  const auto eta = sample_marked(model, Region{}, rng);
  EXPECT_EQ(compound_path(eta).jumps(), eta.points.size());
}
