#include <gtest/gtest.h>

#include <cmath>

#include "ppdiv/disintegration.hpp"
#include "ppdiv/rng.hpp"
#include "support.hpp"

using namespace ppdiv;

namespace {

MarkedModel with_pmf(IntensityModel base, std::vector<double> values, std::vector<double> pmf) {
  return make_marked(std::move(base), constant_kernel(MarkReference::discrete(std::move(values)), std::move(pmf)));
}

}  // namespace

TEST(TsallisProduct, EqualKernelsCollapse) {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    auto c = ppdiv::testing::random_marked_case(rng);
    for (double a : {0.0, 0.5, 1.0, 2.0}) {
      const auto base = tsallis(c.base, a).value;
      const auto prod = tsallis_product(c.base, c.k, c.k, a).value;
      if (base.is_infinite()) EXPECT_TRUE(prod.is_infinite());
      else EXPECT_NEAR(prod.value(), base.value(), 1e-12);
    }
  }
}

TEST(TsallisProduct, SingleAtomExample) {
  const IntensityModel one = Discrete{{{"a", 1}}};
  const auto k = with_pmf(one, {0, 1}, {0.5, 0.5});
  const auto l = with_pmf(one, {0, 1}, {0.25, 0.75});
  const auto pair = common_reference(one, one);
  const double want = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);  // KL(K || L)
  EXPECT_NEAR(tsallis_product(pair, k, l, 1).value.value(), want, 1e-15);
  EXPECT_NEAR(want, 0.5 * std::log(4.0 / 3.0), 1e-15);
}

TEST(TsallisProduct, MarkTermOnlyWhereBothCharge) {
  const IntensityModel base = Discrete{{{"a", 1}, {"b", 0}}};
  MarkKernel k, l;
  k.reference = l.reference = MarkReference::discrete({0, 1});
  k.density = [](const Location&, std::size_t j) { return j == 0 ? 0.5 : 0.5; };
  l.density = [](const Location& w, std::size_t j) { return w.atom == "a" ? 0.5 : (j == 0 ? 1.0 : 0.0); };
  const auto pair = common_reference(base, base);
  const auto terms = tsallis_product_terms(pair, make_marked(base, k), make_marked(base, l), 0.5);
  EXPECT_EQ(terms.mark_term.value(), 0.0);
  EXPECT_EQ(terms.report.value.value(), 0.0);
}

TEST(TsallisProduct, FlatteningEquivalence) {
  Rng rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = ppdiv::testing::random_marked_case(rng);
    for (double a : {0.0, 0.25, 0.5, 1.0, 2.0}) {
      const long double flat = ppdiv::testing::tsallis_reference(c.flat.tabulated(), a);
      const auto got = tsallis_product(c.base, c.k, c.l, a).value;
      if (std::isinf(flat)) EXPECT_TRUE(got.is_infinite()) << a;
      else EXPECT_NEAR(got.value(), static_cast<double>(flat), 1e-10) << a;
    }
  }
}

TEST(TsallisProduct, MarkInformationNeverDecreases) {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = ppdiv::testing::random_marked_case(rng);
    for (double a : {0.25, 0.5, 1.0}) {
      const auto t = tsallis_product_terms(c.base, c.k, c.l, a);
      if (t.base_term.is_finite()) {
        EXPECT_GE(t.report.value, t.base_term);
      }
    }
  }
}

TEST(TsallisProduct, KernelMismatch) {
  const IntensityModel base = Discrete{{{"a", 1}}};
  const auto k = with_pmf(base, {0, 1}, {0.5, 0.5});
  const auto l = with_pmf(base, {0, 2}, {0.5, 0.5});
  try {
    tsallis_product(common_reference(base, base), k, l, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KernelMismatch);
  }
}

TEST(CompoundRenyi, EqualKernelsReduceToEventDivergence) {
  const IntensityModel two = Smooth::from_expression(0, 1, "2"), one = Smooth::from_expression(0, 1, "1");
  const auto pair = common_reference(two, one);
  const auto k = with_pmf(two, {-1, 1}, {0.3, 0.7});
  const auto l = with_pmf(one, {-1, 1}, {0.3, 0.7});
  EXPECT_NEAR(compound_renyi(pair, k, l, 1).value.value(), 2 * std::log(2.0) - 1, 1e-12);
  EXPECT_NEAR(compound_renyi(pair, k, l, 0.5).value.value(), renyi_pp(pair, 0.5).value.value(), 1e-12);
}

TEST(CompoundRenyi, JumpInformation) {
  const IntensityModel one = Smooth::from_expression(0, 1, "1");
  const auto pair = common_reference(one, one);
  const auto k = with_pmf(one, {1, -1}, {1, 0});
  const auto l = with_pmf(one, {1, -1}, {0.5, 0.5});
  const auto r = compound_renyi(pair, k, l, 1);
  EXPECT_NEAR(r.value.value(), std::log(2.0), 1e-12);
}

TEST(CompoundRenyi, TimeDependentKernelOnGrid) {
  // kernel switching at t = 1/2: the mark term is the time-average of the pointwise KL
  const Grid one{{{0.0}, {1.0}, {2}}, {1.0, 1.0}};
  MarkKernel k, l;
  k.reference = l.reference = MarkReference::discrete({1, -1});
  k.density = [](const Location& w, std::size_t j) { return w.coords[0] < 0.5 ? (j == 0 ? 1.0 : 0.0) : 0.5; };
  l.density = [](const Location&, std::size_t) { return 0.5; };
  const auto r = compound_renyi(common_reference(one, one), make_marked(one, k), make_marked(one, l), 1);
  EXPECT_NEAR(r.value.value(), 0.5 * std::log(2.0), 1e-14);
}

TEST(CompoundRenyi, Preconditions) {
  const IntensityModel atoms = Discrete{{{"a", 1}}};
  const auto k = with_pmf(atoms, {1, -1}, {0.5, 0.5});
  try {
    compound_renyi(common_reference(atoms, atoms), k, k, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonDiffuseBase);
  }
  const IntensityModel one = Smooth::from_expression(0, 1, "1");
  const auto zero = with_pmf(one, {0, 1}, {0.5, 0.5});
  try {
    compound_renyi(common_reference(one, one), zero, zero, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroMarkAtom);
  }
  EXPECT_THROW(compound_renyi(common_reference(one, one), k, k, 0), Error);
}
