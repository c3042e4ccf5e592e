#pragma once

// Variable coefficient field G(x), the Riemannian metric g = G^{-1}, its
// Levi-Civita connection, and sampled certification of escape vector fields.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fsi/polynomial.hpp"

namespace fsi {

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// One symmetric perturbation term coef * x^powers * matrix.
struct MatrixTerm {
  double coef = 0.0;
  Polynomial::Exponents powers{0, 0, 0, 0};
  SmallMat matrix;
};

struct MetricSpec {
  enum class Kind { Identity, Diagonal, Conformal, PolynomialPerturbation };
  Kind kind = Kind::Identity;
  int dim = 2;
  std::vector<double> diagonal;   // Diagonal: constant entries
  Polynomial phi;                 // Conformal: G = exp(2 phi) I
  std::vector<MatrixTerm> terms;  // PolynomialPerturbation: G = I + sum of terms
};

std::string to_string(MetricSpec::Kind kind);

enum class DerivativeMode { Auto, FiniteDifference };

class MetricField {
 public:
  using Evaluator = std::function<SmallMat(const SmallVec&)>;
  /// gradient[k] = dG/dx_k (only the first dim entries are meaningful)
  using Gradient = std::array<SmallMat, 3>;

  explicit MetricField(MetricSpec spec);
  static MetricField identity(int dim) {
    MetricSpec s;
    s.dim = dim;
    return MetricField(std::move(s));
  }
  /// Evaluator without closed-form derivatives; derivatives fall back to
  /// central differences.
  static MetricField opaque(int dim, Evaluator G, std::string label = "opaque");

  int dim() const { return dim_; }
  const std::optional<MetricSpec>& spec() const { return spec_; }
  const std::string& label() const { return label_; }
  bool has_exact_derivatives() const { return spec_.has_value(); }

  SmallMat G(const SmallVec& x) const;
  /// g = G^{-1}; throws NotPositiveDefinite.
  SmallMat g(const SmallVec& x) const;

  /// dG/dx_k: closed form for builtin specs, otherwise central differences of
  /// step h. FiniteDifference forces the difference path.
  Gradient dG(const SmallVec& x, double h, DerivativeMode mode = DerivativeMode::Auto) const;
  /// dg/dx_k = -g (dG/dx_k) g on the closed-form path; central differences of
  /// g itself on the difference path.
  Gradient dg(const SmallVec& x, double h, DerivativeMode mode = DerivativeMode::Auto) const;

 private:
  MetricField(int dim, Evaluator G, std::string label);
  bool use_exact(DerivativeMode mode) const { return mode == DerivativeMode::Auto && spec_.has_value(); }

  int dim_ = 2;
  std::optional<MetricSpec> spec_;
  Evaluator evaluator_;
  std::string label_;
};

double min_eigenvalue(const SmallMat& sym);

/// Inverse of a symmetric positive definite coefficient matrix. Throws
/// NotPositiveDefinite when the smallest eigenvalue is <= 1e-12.
SmallMat invert_metric(const SmallMat& G);

/// Christoffel symbols of the second kind of g; symbol(k, i, j) = Gamma^k_ij.
struct Christoffel {
  int dim = 2;
  std::array<SmallMat, 3> upper;  // upper[k](i, j)
  double operator()(int k, int i, int j) const { return upper[static_cast<std::size_t>(k)](i, j); }
};

Christoffel christoffel_symbols(const MetricField& metric, const SmallVec& x, double h,
                                DerivativeMode mode = DerivativeMode::Auto);

/// Candidate escape field H, stored as one polynomial per component.
class VectorFieldH {
 public:
  enum class Kind { Radial, ScaledRadial, Polynomial };

  static VectorFieldH radial(const SmallVec& center);
  static VectorFieldH scaled_radial(double alpha, const SmallVec& center);
  static VectorFieldH polynomial(std::vector<Polynomial> components);

  int dim() const { return static_cast<int>(components_.size()); }
  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const SmallVec& center() const { return center_; }
  const std::vector<Polynomial>& components() const { return components_; }

  SmallVec operator()(const SmallVec& x) const;
  /// jacobian(k, j) = dH^k/dx_j
  SmallMat jacobian(const SmallVec& x) const;
  double divergence(const SmallVec& x) const;
  Polynomial divergence_polynomial() const;

  /// s * H (kind becomes Polynomial unless s > 0 on a radial field).
  VectorFieldH scaled(double s) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::Polynomial;
  double alpha_ = 1.0;
  SmallVec center_;
  std::vector<Polynomial> components_;
};

/// Symmetric matrix S with DH(X, X) = X^T S X, where DH is the covariant
/// differential of H with respect to g.
SmallMat covariant_differential(const MetricField& metric, const VectorFieldH& H, const SmallVec& x,
                                double h, DerivativeMode mode = DerivativeMode::Auto);

/// Smallest lambda with S v = lambda g v (g symmetric positive definite).
double min_generalized_eigenvalue(const SmallMat& S, const SmallMat& g);

struct BoundarySample {
  SmallVec point;
  SmallVec normal;  // Euclidean unit outward normal
};

struct EscapeThresholds {
  double rho0 = 1e-9;
  double gamma0 = 1e-9;
  double fd_step = 2e-5;
};

struct EscapeCertificate {
  enum class Verdict { Certified, Refuted };

  double rho0 = 0.0;
  double gamma0 = 0.0;
  std::size_t interior_count = 0;
  std::size_t boundary_count = 0;
  double min_interior_eigenvalue = 0.0;
  double min_boundary_inner_product = 0.0;
  Verdict verdict = Verdict::Refuted;

  bool certified() const { return verdict == Verdict::Certified; }
  /// Flat key=value lines.
  std::string to_report() const;
};

/// Sampled check of DH(X,X) >= rho0 |X|_g^2 in the interior and <H, nu> >= gamma0
/// on the boundary. Refutation is conclusive; certification means no
/// violation was found at the sampled resolution.
EscapeCertificate certify_escape(const MetricField& metric, const VectorFieldH& H,
                                 const std::vector<SmallVec>& interior_samples,
                                 const std::vector<BoundarySample>& boundary_samples,
                                 const EscapeThresholds& thresholds);

/// Tensor grid of n x n points over the bounding box, restricted to the closed disc.
std::vector<SmallVec> disc_interior_samples(const SmallVec& center, double radius, int n);
/// n equally spaced points on the circle with their outward normals.
std::vector<BoundarySample> disc_boundary_samples(const SmallVec& center, double radius, int n);

}  // namespace fsi
