#pragma once

#include <array>
#include <map>
#include <span>
#include <string>

namespace fsi {

/// Sparse multivariate polynomial in up to four variables (x1, x2, x3, t).
/// Used for closed-form metric perturbations, escape fields and the
/// manufactured fields of the multiplier identities, where exact
/// differentiation matters.
class Polynomial {
 public:
  static constexpr int kMaxVars = 4;
  using Exponents = std::array<int, kMaxVars>;

  Polynomial() = default;
  explicit Polynomial(int nvars);

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int var);

  Polynomial& add_term(const Exponents& powers, double coef);

  int nvars() const { return nvars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double>& terms() const { return terms_; }

  /// Evaluates at x; x.size() must be at least nvars().
  double operator()(std::span<const double> x) const;

  Polynomial derivative(int var) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  std::string to_string() const;

 private:
  int nvars_ = 0;
  std::map<Exponents, double> terms_;
};

}  // namespace fsi
