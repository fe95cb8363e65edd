#include <gtest/gtest.h>

#include "memasym/rng.hpp"
#include "memasym/strategy.hpp"

using namespace memasym;

namespace {

ReactiveStrategy two_column(double a, double b) {
  return ReactiveStrategy(make_matrix({{a, b}, {1 - a, 1 - b}}));
}

}  // namespace

TEST(MixedStrategy, Validation) {
  EXPECT_NO_THROW(MixedStrategy(make_vector({0.25, 0.75})));
  EXPECT_THROW(MixedStrategy(make_vector({0.5, 0.6})), SimplexError);
  EXPECT_THROW(MixedStrategy(make_vector({1.2, -0.2})), SimplexError);
  // Within the renormalization slack the vector is rescaled.
  const MixedStrategy m(make_vector({0.5 + 4e-7, 0.5}));
  EXPECT_NEAR(m.probs().sum(), 1.0, 1e-15);
}

TEST(ReactiveStrategy, EveryColumnMustBeADistribution) {
  EXPECT_THROW(ReactiveStrategy(make_matrix({{0.5, 0.5}, {0.5, 0.6}})), SimplexError);
  const auto X = ReactiveStrategy::memoryless(make_vector({0.2, 0.3, 0.5}), 2);
  EXPECT_EQ(X.rows(), 3);
  EXPECT_EQ(X.cols(), 2);
  EXPECT_EQ(X.column(1), make_vector({0.2, 0.3, 0.5}));
}

TEST(Stationary, EqualColumnsReturnThatColumn) {
  const Vector x = make_vector({0.1, 0.6, 0.3});
  const auto X = ReactiveStrategy::memoryless(x, 4);
  const MixedStrategy y(make_vector({0.1, 0.2, 0.3, 0.4}));
  EXPECT_LE(max_abs(stationary_strategy(X, y) - x), 1e-15);
}

TEST(Stationary, HandExamples) {
  const MixedStrategy half(make_vector({0.5, 0.5}));
  EXPECT_EQ(stationary_strategy(two_column(1, 0), half), make_vector({0.5, 0.5}));
  const Vector xst = stationary_strategy(two_column(0.8, 0.3), half);
  EXPECT_NEAR(xst(0), 0.55, 1e-15);
  EXPECT_NEAR(xst(1), 0.45, 1e-15);
}

TEST(Stationary, JointDistribution) {
  const auto pure = stationary_state(two_column(1, 0.3), MixedStrategy(make_vector({1, 0})));
  EXPECT_EQ(pure.joint, make_matrix({{1, 0}, {0, 0}}));

  const auto s = stationary_state(two_column(0.8, 0.3), MixedStrategy(make_vector({0.5, 0.5})));
  EXPECT_NEAR(s.joint(0, 0), 0.275, 1e-15);
  EXPECT_NEAR(s.joint(0, 1), 0.275, 1e-15);
  EXPECT_NEAR(s.joint.sum(), 1.0, 1e-15);
}

TEST(Stationary, DimensionMismatchThrows) {
  EXPECT_THROW(stationary_strategy(two_column(0.5, 0.5), MixedStrategy::uniform(3)),
               DimensionError);
  EXPECT_THROW(JointState(two_column(0.5, 0.5), MixedStrategy::uniform(3)), DimensionError);
}

TEST(ExpectedPayoff, MatchingPenniesExamples) {
  const auto U = make_matching_pennies();
  const MixedStrategy half(make_vector({0.5, 0.5}));
  EXPECT_DOUBLE_EQ(expected_payoff(U, two_column(1, 1), MixedStrategy(make_vector({1, 0}))), 1.0);
  EXPECT_DOUBLE_EQ(expected_payoff(U, two_column(0.5, 0.5), half), 0.0);
  // Against the uniform y every row of U averages to zero, whatever X is.
  EXPECT_DOUBLE_EQ(expected_payoff(U, two_column(0.8, 0.3), half), 0.0);
  // x^st = (0.6, 0.4) and U y = (0.2, -0.2).
  EXPECT_NEAR(expected_payoff(U, two_column(0.8, 0.3), MixedStrategy(make_vector({0.6, 0.4}))),
              0.04, 1e-15);
}

TEST(ExpectedPayoff, AgreesWithJointContraction) {
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const int mx = 2 + k % 3, my = 2 + (k / 3) % 3;
    Matrix u(mx, my), x(mx, my);
    for (int i = 0; i < mx; ++i)
      for (int j = 0; j < my; ++j) u(i, j) = rng.uniform(-1, 1);
    for (int j = 0; j < my; ++j) x.col(j) = rng.simplex_point(mx);
    const PayoffMatrix U(u);
    const ReactiveStrategy X(x);
    const MixedStrategy y(rng.simplex_point(my));
    const auto st = stationary_state(X, y);
    EXPECT_NEAR(u.cwiseProduct(st.joint).sum(), expected_payoff(U, X, y), 1e-12);
    EXPECT_NEAR(st.x_st.sum(), 1.0, 1e-12);
    EXPECT_GE(st.x_st.minCoeff(), 0.0);
  }
}

TEST(ExpectedPayoff, LinearInYForMemorylessX) {
  Rng rng(8);
  const auto U = make_coupled_matching_pennies(CoupledVariant::Interior, 1);
  for (int k = 0; k < 50; ++k) {
    const auto X = ReactiveStrategy::memoryless(rng.simplex_point(4), 4);
    const Vector a = rng.simplex_point(4), b = rng.simplex_point(4);
    const double lam = rng.uniform();
    EXPECT_NEAR(expected_payoff(U, X, MixedStrategy(lam * a + (1 - lam) * b)),
                lam * expected_payoff(U, X, MixedStrategy(a)) +
                    (1 - lam) * expected_payoff(U, X, MixedStrategy(b)),
                1e-12);
  }
}
