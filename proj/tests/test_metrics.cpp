#include <gtest/gtest.h>

#include <random>

#include "sensorqc/metrics.hpp"

using namespace sensorqc;

TEST(Rates, Arithmetic) {
  const auto r = compute_rates({8, 1, 9, 2});
  EXPECT_DOUBLE_EQ(*r.hit_rate, 0.8);
  EXPECT_DOUBLE_EQ(*r.false_positive_rate, 0.1);
  EXPECT_DOUBLE_EQ(*r.accuracy, 0.85);
}

TEST(Rates, AbsentDenominators) {
  const auto r = compute_rates({0, 3, 7, 0});
  EXPECT_FALSE(r.hit_rate.has_value());
  EXPECT_DOUBLE_EQ(*r.false_positive_rate, 0.3);
  const auto e = compute_rates({});
  EXPECT_FALSE(e.hit_rate || e.false_positive_rate || e.accuracy);
}

TEST(Counts, Add) {
  ConfusionCounts c;
  c.add(true, true);
  c.add(true, false);
  c.add(false, true);
  c.add(false, false);
  c.add(false, false);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 2, 1}));
  EXPECT_EQ(c.total(), 5u);
}

TEST(Counts, MergeAssociative) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> u(0, 50);
  for (int i = 0; i < 100; ++i) {
    const ConfusionCounts a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)},
        c{u(rng), u(rng), u(rng), u(rng)};
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ(a + b, b + a);
    const auto r = compute_rates(a + b + c);
    for (const auto& v : {r.hit_rate, r.false_positive_rate, r.accuracy}) {
      if (v) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 1.0);
      }
    }
  }
}

TEST(Report, MicroAndMacro) {
  const auto m = build_metrics({{"a", {8, 0, 10, 2}}, {"b", {1, 2, 8, 1}}});
  EXPECT_EQ(m.aggregate, (ConfusionCounts{9, 2, 18, 3}));
  EXPECT_DOUBLE_EQ(*m.micro.hit_rate, 9.0 / 12.0);
  EXPECT_DOUBLE_EQ(*m.macro.hit_rate, (0.8 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(*m.macro.false_positive_rate, (0.0 + 0.2) / 2.0);
}
