#include <gtest/gtest.h>

#include "safetube/errors.hpp"
#include "safetube/polynomial.hpp"

using namespace safetube;

TEST(Polynomial, EvaluatesAndDifferentiates) {
  // p = 2 x0^2 x1 - 3 x1 + 0.5
  Polynomial p(2, {{2.0, {2, 1}}, {-3.0, {0, 1}}, {0.5, {0, 0}}});
  Vec x(2);
  x << 1.5, -2.0;
  EXPECT_NEAR(p(x), 2.0 * 2.25 * -2.0 + 6.0 + 0.5, 1e-14);
  EXPECT_NEAR(p.partial(0)(x), 4.0 * 1.5 * -2.0, 1e-14);
  EXPECT_NEAR(p.partial(1)(x), 2.0 * 2.25 - 3.0, 1e-14);
  EXPECT_TRUE(p.partial(0).partial(0).partial(0).is_constant());
}

TEST(Polynomial, MergesDuplicateMonomials) {
  Polynomial p(1, {{1.0, {1}}, {2.0, {1}}, {-3.0, {1}}});
  EXPECT_TRUE(p.terms().empty());
  EXPECT_TRUE(p.is_constant());
}

TEST(Polynomial, JsonRoundTrip) {
  Polynomial p(3, {{0.07, {1, 0, 0}}, {0.22, {0, 0, 0}}});
  const Polynomial q = Polynomial::from_json(p.to_json(), 3);
  EXPECT_EQ(p.to_json(), q.to_json());
  EXPECT_NEAR(Polynomial::from_json(nlohmann::json(1.25), 3)(Vec::Zero(3)), 1.25, 0.0);
}

TEST(Polynomial, RejectsMalformedJson) {
  EXPECT_THROW(Polynomial::from_json(nlohmann::json::parse(R"([[1.0, [1, 2]]])"), 3), UsageError);
  EXPECT_THROW(Polynomial::from_json(nlohmann::json("x"), 1), UsageError);
}

TEST(PolyMatrix, ConstantMatrixHasZeroPartials) {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  const PolyMatrix pm = PolyMatrix::constant(a, 2);
  EXPECT_TRUE(pm.is_constant());
  EXPECT_EQ(pm(Vec::Ones(2)), a);
  EXPECT_EQ(pm.partial(1)(Vec::Ones(2)), Mat::Zero(2, 2));
}
