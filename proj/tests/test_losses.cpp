#include <gtest/gtest.h>

#include "support.hpp"

using namespace diarkit;

namespace {

FeatureMatrix random_log_probs(oracle::Gen &g, std::size_t T, std::size_t V) {
  FeatureMatrix lp(T, V);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> z(V);
    for (auto &v : z) v = 2.0 * g.normal();
    const auto row = log_softmax(z);
    std::copy(row.begin(), row.end(), lp.row(t).begin());
  }
  return lp;
}

std::vector<std::size_t> random_labels(oracle::Gen &g, std::size_t V, std::size_t max_len) {
  std::vector<std::size_t> l(g.index(0, max_len));
  for (auto &v : l) v = g.index(1, V - 1);
  return l;
}

}  // namespace

TEST(LogSumExp, StableAndExact) {
  EXPECT_NEAR(log_sum_exp(1000.0, 1000.0), 1000.0 + std::log(2.0), 1e-12);
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_sum_exp(ninf, 3.0), 3.0);
  const std::vector<double> v = {0.0, std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(v), std::log(4.0), 1e-15);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  oracle::Gen g(1);
  for (int c = 0; c < 200; ++c) {
    std::vector<double> z(g.index(2, 6));
    for (auto &v : z) v = 3.0 * g.normal();
    const std::size_t y = g.index(0, z.size() - 1);
    const auto r = cross_entropy(z, y);
    ASSERT_NEAR(r.loss, -log_softmax(z)[y], 1e-12);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double h = 1e-6;
      auto zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const double fd = (cross_entropy(zp, y).loss - cross_entropy(zm, y).loss) / (2 * h);
      ASSERT_NEAR(r.grad[i], fd, 1e-6);
    }
  }
  EXPECT_THROW(cross_entropy(std::vector<double>{1.0, 2.0}, 2), Error);
}

TEST(Ctc, MatchesExhaustivePathSum) {
  oracle::Gen g(2);
  for (int c = 0; c < 300; ++c) {
    const std::size_t V = g.index(2, 4);
    const auto labels = random_labels(g, V, 3);
    const std::size_t T = g.index(std::max<std::size_t>(1, ctc_min_frames(labels)), 6);
    const auto lp = random_log_probs(g, T, V);
    ASSERT_NEAR(ctc_loss(lp, labels).loss, oracle::brute_force_ctc(lp, labels), 1e-9) << "case " << c;
  }
}

TEST(Ctc, GradientMatchesFiniteDifferences) {
  oracle::Gen g(4);
  CtcOptions free_rows;
  free_rows.check_normalized = false;
  for (int c = 0; c < 100; ++c) {
    const std::size_t V = g.index(2, 4);
    const auto labels = random_labels(g, V, 3);
    const std::size_t T = g.index(std::max<std::size_t>(1, ctc_min_frames(labels)), 6);
    const auto lp = random_log_probs(g, T, V);
    const auto r = ctc_loss(lp, labels, free_rows);
    for (std::size_t i = 0; i < lp.data.size(); ++i) {
      const double h = 1e-5;
      auto p = lp, m = lp;
      p.data[i] += h;
      m.data[i] -= h;
      const double fd = (ctc_loss(p, labels, free_rows).loss - ctc_loss(m, labels, free_rows).loss) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(r.grad.data[i]), 1e-2});
      ASSERT_LT(std::abs(fd - r.grad.data[i]) / scale, 1e-4) << "case " << c << " entry " << i;
    }
  }
}

TEST(Ctc, GradientRowsSumToMinusOne) {
  oracle::Gen g(6);
  for (int c = 0; c < 50; ++c) {
    const std::size_t V = g.index(2, 5);
    const auto labels = random_labels(g, V, 4);
    const std::size_t T = g.index(std::max<std::size_t>(1, ctc_min_frames(labels)), 10);
    const auto r = ctc_loss(random_log_probs(g, T, V), labels);
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (double v : r.grad.row(t)) s += v;
      ASSERT_NEAR(s, -1.0, 1e-9);
    }
  }
}

TEST(Ctc, Errors) {
  FeatureMatrix lp(2, 3);
  for (auto &v : lp.data) v = std::log(1.0 / 3.0);
  auto code = [&](auto &&fn) -> std::optional<ErrorCode> {
    try {
      fn();
    } catch (const Error &e) {
      return e.code();
    }
    return std::nullopt;
  };
  const std::vector<std::size_t> repeat = {1, 1}, too_long = {1, 2, 1}, bad = {3}, blank = {0};
  EXPECT_EQ(code([&] { ctc_loss(lp, repeat); }), ErrorCode::kImpossibleAlignment);
  EXPECT_EQ(code([&] { ctc_loss(lp, too_long); }), ErrorCode::kImpossibleAlignment);
  EXPECT_EQ(code([&] { ctc_loss(lp, bad); }), ErrorCode::kLabelOutOfRange);
  EXPECT_EQ(code([&] { ctc_loss(lp, blank); }), ErrorCode::kLabelOutOfRange);
  auto skew = lp;
  skew.at(0, 0) = 0.0;
  EXPECT_EQ(code([&] { ctc_loss(skew, std::vector<std::size_t>{1}); }), ErrorCode::kUnnormalizedRow);
  EXPECT_EQ(code([&] { ctc_loss(FeatureMatrix(0, 3), std::vector<std::size_t>{}); }), ErrorCode::kInvalidArgument);
}

TEST(Ctc, SingleFrameSingleLabel) {
  FeatureMatrix lp(1, 2);
  lp.at(0, 0) = std::log(0.25);
  lp.at(0, 1) = std::log(0.75);
  const std::vector<std::size_t> one = {1};
  EXPECT_NEAR(ctc_loss(lp, one).loss, -std::log(0.75), 1e-15);
  EXPECT_NEAR(ctc_loss(lp, std::vector<std::size_t>{}).loss, -std::log(0.25), 1e-15);
}

TEST(DualLoss, Endpoints) {
  EXPECT_EQ(dual_loss(1.5, 4.0, 1.0), 1.5);
  EXPECT_EQ(dual_loss(1.5, 4.0, 0.0), 4.0);
  EXPECT_DOUBLE_EQ(dual_loss(1.0, 3.0, 0.5), 2.0);
  EXPECT_THROW(dual_loss(1.0, 1.0, 1.5), Error);
}
