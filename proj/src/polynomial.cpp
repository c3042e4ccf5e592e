#include "fsi/polynomial.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fsi {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars < 0 || nvars > kMaxVars) throw std::invalid_argument("Polynomial: bad variable count");
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term({0, 0, 0, 0}, c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int var) {
  Polynomial p(nvars);
  Exponents e{0, 0, 0, 0};
  e.at(static_cast<std::size_t>(var)) = 1;
  p.add_term(e, 1.0);
  return p;
}

Polynomial& Polynomial::add_term(const Exponents& powers, double coef) {
  for (int v = nvars_; v < kMaxVars; ++v) {
    if (powers[static_cast<std::size_t>(v)] != 0)
      throw std::invalid_argument("Polynomial: exponent on unused variable");
  }
  if (coef == 0.0) return *this;
  auto [it, inserted] = terms_.try_emplace(powers, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
  return *this;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2] + e[3]);
  return d;
}

double Polynomial::operator()(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& [e, c] : terms_) {
    double m = c;
    for (int v = 0; v < nvars_; ++v) m *= ipow(x[static_cast<std::size_t>(v)], e[static_cast<std::size_t>(v)]);
    s += m;
  }
  return s;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial d(nvars_);
  const auto k = static_cast<std::size_t>(var);
  for (const auto& [e, c] : terms_) {
    if (e[k] == 0) continue;
    Exponents f = e;
    f[k] -= 1;
    d.add_term(f, c * e[k]);
  }
  return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  nvars_ = std::max(nvars_, other.nvars_);
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r(std::max(a.nvars_, b.nvars_));
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      Polynomial::Exponents e{};
      for (std::size_t v = 0; v < Polynomial::kMaxVars; ++v) e[v] = ea[v] + eb[v];
      r.add_term(e, ca * cb);
    }
  }
  return r;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  static constexpr const char* names[] = {"x1", "x2", "x3", "t"};
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (int v = 0; v < nvars_; ++v) {
      const int p = e[static_cast<std::size_t>(v)];
      if (p == 1) os << "*" << names[v];
      if (p > 1) os << "*" << names[v] << "^" << p;
    }
  }
  return os.str();
}

}  // namespace fsi
