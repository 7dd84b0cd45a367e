#include "safetube/polynomial.hpp"

#include <algorithm>
#include <map>

#include "safetube/errors.hpp"

namespace safetube {

Polynomial::Polynomial(int num_vars, std::vector<Term> terms)
    : num_vars_(num_vars), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.exponents.size()) != num_vars_) {
      throw ContractViolation("polynomial term has " + std::to_string(t.exponents.size()) +
                              " exponents, expected " + std::to_string(num_vars_));
    }
    for (int e : t.exponents) {
      if (e < 0) throw ContractViolation("polynomial exponents must be nonnegative");
    }
  }
  canonicalize();
}

Polynomial Polynomial::constant(int num_vars, double c) {
  return Polynomial(num_vars, {Term{c, std::vector<int>(num_vars, 0)}});
}

Polynomial Polynomial::linear(int num_vars, int var, double c) {
  std::vector<int> e(num_vars, 0);
  e[var] = 1;
  return Polynomial(num_vars, {Term{c, e}});
}

void Polynomial::canonicalize() {
  // Merge duplicate monomials and drop zeros; order is lexicographic by exponent vector.
  std::map<std::vector<int>, double> merged;
  for (const auto& t : terms_) merged[t.exponents] += t.coeff;
  terms_.clear();
  for (const auto& [e, c] : merged) {
    if (c != 0.0) terms_.push_back(Term{c, e});
  }
}

bool Polynomial::is_constant() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
    return std::all_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e == 0; });
  });
}

double Polynomial::operator()(const Vec& x) const {
  if (x.size() != num_vars_) throw ContractViolation("polynomial evaluated with wrong dimension");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int i = 0; i < num_vars_; ++i) {
      for (int k = 0; k < t.exponents[i]; ++k) v *= x(i);
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::partial(int var) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    const int e = t.exponents[var];
    if (e == 0) continue;
    Term d = t;
    d.coeff *= e;
    d.exponents[var] = e - 1;
    out.push_back(std::move(d));
  }
  return Polynomial(num_vars_, std::move(out));
}

nlohmann::json Polynomial::to_json() const {
  auto j = nlohmann::json::array();
  for (const auto& t : terms_) j.push_back({t.coeff, t.exponents});
  return j;
}

Polynomial Polynomial::from_json(const nlohmann::json& j, int num_vars) {
  if (j.is_number()) return constant(num_vars, j.get<double>());
  if (!j.is_array()) throw UsageError("polynomial must be a number or a list of [coeff, [exponents]]");
  std::vector<Term> terms;
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_array()) {
      throw UsageError("polynomial term must be [coeff, [exponents]]");
    }
    Term t{item[0].get<double>(), item[1].get<std::vector<int>>()};
    if (static_cast<int>(t.exponents.size()) != num_vars) {
      throw UsageError("polynomial term exponent list has wrong length");
    }
    terms.push_back(std::move(t));
  }
  return Polynomial(num_vars, std::move(terms));
}

PolyMatrix::PolyMatrix(int rows, int cols, int num_vars)
    : rows_(rows), cols_(cols), num_vars_(num_vars),
      entries_(static_cast<std::size_t>(rows * cols), Polynomial(num_vars)) {}

PolyMatrix PolyMatrix::constant(const Mat& value, int num_vars) {
  PolyMatrix pm(static_cast<int>(value.rows()), static_cast<int>(value.cols()), num_vars);
  for (int r = 0; r < pm.rows_; ++r)
    for (int c = 0; c < pm.cols_; ++c) pm.at(r, c) = Polynomial::constant(num_vars, value(r, c));
  return pm;
}

bool PolyMatrix::is_constant() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Polynomial& p) { return p.is_constant(); });
}

Mat PolyMatrix::operator()(const Vec& x) const {
  Mat out(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out(r, c) = at(r, c)(x);
  return out;
}

PolyMatrix PolyMatrix::partial(int var) const {
  PolyMatrix out(rows_, cols_, num_vars_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out.at(r, c) = at(r, c).partial(var);
  return out;
}

nlohmann::json PolyMatrix::to_json() const {
  auto j = nlohmann::json::array();
  for (int r = 0; r < rows_; ++r) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < cols_; ++c) row.push_back(at(r, c).to_json());
    j.push_back(std::move(row));
  }
  return j;
}

PolyMatrix PolyMatrix::from_json(const nlohmann::json& j, int num_vars) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw UsageError("matrix must be a list of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  PolyMatrix pm(rows, cols, num_vars);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) throw UsageError("ragged matrix rows");
    for (int c = 0; c < cols; ++c) pm.at(r, c) = Polynomial::from_json(j[r][c], num_vars);
  }
  return pm;
}

}  // namespace safetube
