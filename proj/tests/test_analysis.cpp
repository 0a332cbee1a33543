#include <gtest/gtest.h>

#include <random>

#include "qls/analysis.hpp"
#include "support.hpp"

using namespace qls;

TEST(Quartiles, Examples) {
  const std::vector<double> five{5, 3, 1, 4, 2};
  const auto q = quartiles(five);
  EXPECT_EQ(q[0], 2);
  EXPECT_EQ(q[1], 3);
  EXPECT_EQ(q[2], 4);
  const std::vector<double> one{7.5};
  const auto s = quartiles(one);
  EXPECT_EQ(s[0], 7.5);
  EXPECT_EQ(s[2], 7.5);
  EXPECT_THROW(quartiles(std::vector<double>{}), EmptyInput);
}

TEST(Quartiles, UniformMonteCarlo) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(10000);
  for (double& x : v) x = u(rng);
  const auto q = quartiles(v);
  EXPECT_NEAR(q[0], 0.25, 0.02);
  EXPECT_NEAR(q[1], 0.5, 0.02);
  EXPECT_NEAR(q[2], 0.75, 0.02);
}

TEST(Quartiles, AlwaysOrdered) {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> ln(0, 3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + t % 17);
    for (double& x : v) x = ln(rng) * (t % 3 ? 1 : -1);
    const auto q = quartiles(v);
    EXPECT_LE(q[0], q[1]);
    EXPECT_LE(q[1], q[2]);
  }
}

TEST(Histogram, CountsEveryValue) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i * i);
  const auto h = make_histogram(v, 40);
  EXPECT_EQ(h.edges.size(), 41u);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, 1000u);
  EXPECT_GT(h.counts.front(), 0u);
  EXPECT_GT(h.counts.back(), 0u);
  const auto flat = make_histogram(std::vector<double>{2, 2, 2});
  EXPECT_EQ(flat.counts[0], 3u);
}

namespace {
struct Study : ::testing::Test {
  static const Dataset& data() {
    static const Dataset d = load_wdbc(qls::testing::wdbc_path());
    return d;
  }
  NetworkObjective objective{NetworkSpec::logistic(30), data()};
  Vector x = init_weights(objective.spec(), 1);
  Vector d;
  void SetUp() override {
    Vector g;
    objective.value_grad(x, qls::testing::iota_rows(400), g);
    d = -g;
  }
};
}  // namespace

TEST_F(Study, FullModeHasNoSpread) {
  for (auto kind : {ApproxKind::fff, ApproxKind::fgf, ApproxKind::ffg, ApproxKind::fgfg, ApproxKind::gg}) {
    StudyConfig c;
    c.kind = kind;
    c.mode = SamplingMode::full;
    c.n_fits = 200;
    const auto s = distribution_study(objective, x, d, c);
    EXPECT_EQ(s.n + s.rejected_concave + s.rejected_nonpositive, 200u);
    if (s.n) {
      EXPECT_EQ(s.sigma, 0.0) << to_string(kind);
      for (double v : s.vertices) EXPECT_EQ(v, s.vertices.front());
      EXPECT_EQ(s.q1, s.q3);
    }
  }
}

TEST_F(Study, DynamicStudyAccounting) {
  StudyConfig c;
  c.kind = ApproxKind::fff;
  c.batch_size = 50;
  const auto s = distribution_study(objective, x, d, c);
  EXPECT_EQ(s.n + s.rejected_concave + s.rejected_nonpositive, 200u);
  std::size_t total = 0;
  for (auto k : s.histogram.counts) total += k;
  EXPECT_EQ(total, s.n);
  EXPECT_LE(s.q1, s.q2);
  EXPECT_LE(s.q2, s.q3);
  EXPECT_GT(s.sigma, 0.0);
  const auto again = distribution_study(objective, x, d, c);
  EXPECT_EQ(again.vertices, s.vertices);
  c.n_fits = 1;
  EXPECT_THROW(distribution_study(objective, x, d, c), ConfigError);
}

TEST_F(Study, ReferenceMinimizerMatchesDenseGrid) {
  StudyConfig c;
  c.kind = ApproxKind::gg;
  c.n_fits = 2;
  const auto s = distribution_study(objective, x, d, c);
  const auto all = qls::testing::iota_rows(400);
  const double hi = 4.0 * s.reference_minimizer;
  const int n = 20000;
  double best = 0, best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double a = hi * i / n;
    const double f = objective.value(x + a * d, all);
    if (f < best_f) {
      best_f = f;
      best = a;
    }
  }
  EXPECT_NEAR(s.reference_minimizer, best, hi / n);
}

TEST(FitSeed, DistinctPerFit) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(fit_seed(7, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(fit_seed(7, 0), fit_seed(8, 0));
}
