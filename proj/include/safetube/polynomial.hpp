#pragma once

#include <nlohmann/json.hpp>

#include <vector>

#include "safetube/types.hpp"

namespace safetube {

/// Multivariate polynomial stored as a list of monomials c * x_0^e_0 * ... * x_{n-1}^e_{n-1}.
///
/// JSON form is a monomial-coefficient list: [[c, [e_0, ..., e_{n-1}]], ...].
class Polynomial {
 public:
  struct Term {
    double coeff = 0.0;
    std::vector<int> exponents;
  };

  Polynomial() = default;
  explicit Polynomial(int num_vars) : num_vars_(num_vars) {}
  Polynomial(int num_vars, std::vector<Term> terms);

  static Polynomial constant(int num_vars, double c);
  /// c * x_var
  static Polynomial linear(int num_vars, int var, double c = 1.0);

  int num_vars() const { return num_vars_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const;

  double operator()(const Vec& x) const;
  Polynomial partial(int var) const;

  nlohmann::json to_json() const;
  static Polynomial from_json(const nlohmann::json& j, int num_vars);

 private:
  void canonicalize();

  int num_vars_ = 0;
  std::vector<Term> terms_;
};

/// Matrix whose entries are polynomials in the state.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols, int num_vars);

  static PolyMatrix constant(const Mat& value, int num_vars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_vars() const { return num_vars_; }
  bool is_constant() const;

  Polynomial& at(int r, int c) { return entries_[r * cols_ + c]; }
  const Polynomial& at(int r, int c) const { return entries_[r * cols_ + c]; }

  Mat operator()(const Vec& x) const;
  PolyMatrix partial(int var) const;

  /// Row-major nested list of polynomial JSON objects.
  nlohmann::json to_json() const;
  static PolyMatrix from_json(const nlohmann::json& j, int num_vars);

 private:
  int rows_ = 0;
  int cols_ = 0;
  int num_vars_ = 0;
  std::vector<Polynomial> entries_;
};

}  // namespace safetube
