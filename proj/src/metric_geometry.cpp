#include "fsi/metric_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fsi/error.hpp"
#include "fsi/parallel.hpp"

namespace fsi {

namespace {

constexpr double kPdFloor = 1e-12;

std::array<double, 4> coords(const SmallVec& x) {
  std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index i = 0; i < x.size() && i < 3; ++i) c[static_cast<std::size_t>(i)] = x(i);
  return c;
}

double monomial(const Polynomial::Exponents& e, const SmallVec& x) {
  double m = 1.0;
  for (Eigen::Index v = 0; v < x.size(); ++v) {
    for (int p = 0; p < e[static_cast<std::size_t>(v)]; ++p) m *= x(v);
  }
  return m;
}

double monomial_derivative(const Polynomial::Exponents& e, const SmallVec& x, int k) {
  const auto kk = static_cast<std::size_t>(k);
  if (e[kk] == 0) return 0.0;
  Polynomial::Exponents f = e;
  f[kk] -= 1;
  return e[kk] * monomial(f, x);
}

SmallMat zero(int dim) { return SmallMat::Zero(dim, dim); }

void validate_spec(const MetricSpec& spec) {
  if (spec.dim < 2 || spec.dim > 3) throw std::invalid_argument("MetricSpec: dim must be 2 or 3");
  if (spec.kind == MetricSpec::Kind::Diagonal &&
      static_cast<int>(spec.diagonal.size()) != spec.dim)
    throw std::invalid_argument("MetricSpec: diagonal needs dim entries");
  for (const auto& t : spec.terms) {
    if (t.matrix.rows() != spec.dim || t.matrix.cols() != spec.dim)
      throw std::invalid_argument("MetricSpec: perturbation matrix has wrong size");
  }
}

}  // namespace

std::string to_string(MetricSpec::Kind kind) {
  switch (kind) {
    case MetricSpec::Kind::Identity: return "identity";
    case MetricSpec::Kind::Diagonal: return "diagonal";
    case MetricSpec::Kind::Conformal: return "conformal";
    case MetricSpec::Kind::PolynomialPerturbation: return "polynomial-perturbation";
  }
  return "unknown";
}

MetricField::MetricField(MetricSpec spec) : dim_(spec.dim), label_(to_string(spec.kind)) {
  validate_spec(spec);
  spec_ = std::move(spec);
  const MetricSpec& s = *spec_;
  switch (s.kind) {
    case MetricSpec::Kind::Identity:
      evaluator_ = [d = s.dim](const SmallVec&) -> SmallMat { return SmallMat::Identity(d, d); };
      break;
    case MetricSpec::Kind::Diagonal:
      evaluator_ = [diag = s.diagonal](const SmallVec&) -> SmallMat {
        const auto d = static_cast<Eigen::Index>(diag.size());
        SmallMat G = SmallMat::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i) G(i, i) = diag[static_cast<std::size_t>(i)];
        return G;
      };
      break;
    case MetricSpec::Kind::Conformal:
      evaluator_ = [phi = s.phi, d = s.dim](const SmallVec& x) -> SmallMat {
        const auto c = coords(x);
        return std::exp(2.0 * phi(c)) * SmallMat::Identity(d, d);
      };
      break;
    case MetricSpec::Kind::PolynomialPerturbation:
      evaluator_ = [terms = s.terms, d = s.dim](const SmallVec& x) -> SmallMat {
        SmallMat G = SmallMat::Identity(d, d);
        for (const auto& t : terms) G += t.coef * monomial(t.powers, x) * t.matrix;
        return G;
      };
      break;
  }
}

MetricField::MetricField(int dim, Evaluator G, std::string label)
    : dim_(dim), evaluator_(std::move(G)), label_(std::move(label)) {}

MetricField MetricField::opaque(int dim, Evaluator G, std::string label) {
  return MetricField(dim, std::move(G), std::move(label));
}

SmallMat MetricField::G(const SmallVec& x) const { return evaluator_(x); }

SmallMat MetricField::g(const SmallVec& x) const { return invert_metric(G(x)); }

MetricField::Gradient MetricField::dG(const SmallVec& x, double h, DerivativeMode mode) const {
  Gradient out{zero(dim_), zero(dim_), zero(dim_)};
  if (use_exact(mode)) {
    const MetricSpec& s = *spec_;
    switch (s.kind) {
      case MetricSpec::Kind::Identity:
      case MetricSpec::Kind::Diagonal:
        break;
      case MetricSpec::Kind::Conformal: {
        const auto c = coords(x);
        const SmallMat G0 = G(x);
        for (int k = 0; k < dim_; ++k) out[static_cast<std::size_t>(k)] = 2.0 * s.phi.derivative(k)(c) * G0;
        break;
      }
      case MetricSpec::Kind::PolynomialPerturbation:
        for (int k = 0; k < dim_; ++k) {
          for (const auto& t : s.terms)
            out[static_cast<std::size_t>(k)] += t.coef * monomial_derivative(t.powers, x, k) * t.matrix;
        }
        break;
    }
    return out;
  }
  for (int k = 0; k < dim_; ++k) {
    SmallVec xp = x;
    SmallVec xm = x;
    xp(k) += h;
    xm(k) -= h;
    out[static_cast<std::size_t>(k)] = (G(xp) - G(xm)) / (2.0 * h);
  }
  return out;
}

MetricField::Gradient MetricField::dg(const SmallVec& x, double h, DerivativeMode mode) const {
  Gradient out{zero(dim_), zero(dim_), zero(dim_)};
  if (use_exact(mode)) {
    const SmallMat g0 = g(x);
    const Gradient dGx = dG(x, h, mode);
    for (int k = 0; k < dim_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out[kk] = -g0 * dGx[kk] * g0;
    }
    return out;
  }
  for (int k = 0; k < dim_; ++k) {
    SmallVec xp = x;
    SmallVec xm = x;
    xp(k) += h;
    xm(k) -= h;
    out[static_cast<std::size_t>(k)] = (g(xp) - g(xm)) / (2.0 * h);
  }
  return out;
}

double min_eigenvalue(const SmallMat& sym) {
  Eigen::SelfAdjointEigenSolver<SmallMat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SmallMat invert_metric(const SmallMat& G) {
  if (G.rows() != G.cols()) throw Error(ErrorCode::NotPositiveDefinite, "coefficient matrix is not square");
  if (!G.allFinite()) throw Error(ErrorCode::NotPositiveDefinite, "coefficient matrix has non-finite entries");
  const SmallMat sym = 0.5 * (G + G.transpose());
  const double lmin = min_eigenvalue(sym);
  if (!(lmin > kPdFloor)) {
    std::ostringstream os;
    os << "smallest eigenvalue " << lmin << " <= " << kPdFloor;
    throw Error(ErrorCode::NotPositiveDefinite, os.str());
  }
  Eigen::LLT<SmallMat> llt(sym);
  SmallMat inv = llt.solve(SmallMat::Identity(G.rows(), G.cols()));
  return 0.5 * (inv + inv.transpose());
}

Christoffel christoffel_symbols(const MetricField& metric, const SmallVec& x, double h,
                                DerivativeMode mode) {
  if (!(h > 0.0)) throw std::invalid_argument("christoffel_symbols: step must be positive");
  const int d = metric.dim();
  const SmallMat Ginv = metric.G(x);  // inverse metric g^{kl}
  const MetricField::Gradient dg = metric.dg(x, h, mode);
  Christoffel c;
  c.dim = d;
  for (int k = 0; k < 3; ++k) c.upper[static_cast<std::size_t>(k)] = zero(d);
  // first kind: [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) {
          const double first = dg[static_cast<std::size_t>(i)](j, l) + dg[static_cast<std::size_t>(j)](i, l) -
                               dg[static_cast<std::size_t>(l)](i, j);
          s += Ginv(k, l) * first;
        }
        c.upper[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
        c.upper[static_cast<std::size_t>(k)](j, i) = 0.5 * s;
      }
    }
  }
  return c;
}

VectorFieldH VectorFieldH::radial(const SmallVec& center) { return scaled_radial(1.0, center); }

VectorFieldH VectorFieldH::scaled_radial(double alpha, const SmallVec& center) {
  const int d = static_cast<int>(center.size());
  std::vector<Polynomial> comps;
  for (int k = 0; k < d; ++k) {
    Polynomial p = alpha * Polynomial::variable(d, k);
    p += Polynomial::constant(d, -alpha * center(k));
    comps.push_back(std::move(p));
  }
  VectorFieldH H;
  H.kind_ = alpha == 1.0 ? Kind::Radial : Kind::ScaledRadial;
  H.alpha_ = alpha;
  H.center_ = center;
  H.components_ = std::move(comps);
  return H;
}

VectorFieldH VectorFieldH::polynomial(std::vector<Polynomial> components) {
  if (components.size() < 2 || components.size() > 3)
    throw std::invalid_argument("VectorFieldH: 2 or 3 components required");
  VectorFieldH H;
  H.kind_ = Kind::Polynomial;
  H.center_ = SmallVec::Zero(static_cast<Eigen::Index>(components.size()));
  H.components_ = std::move(components);
  return H;
}

SmallVec VectorFieldH::operator()(const SmallVec& x) const {
  const auto c = coords(x);
  SmallVec v(dim());
  for (int k = 0; k < dim(); ++k) v(k) = components_[static_cast<std::size_t>(k)](c);
  return v;
}

SmallMat VectorFieldH::jacobian(const SmallVec& x) const {
  const auto c = coords(x);
  SmallMat J(dim(), dim());
  for (int k = 0; k < dim(); ++k) {
    for (int j = 0; j < dim(); ++j) J(k, j) = components_[static_cast<std::size_t>(k)].derivative(j)(c);
  }
  return J;
}

double VectorFieldH::divergence(const SmallVec& x) const { return jacobian(x).trace(); }

Polynomial VectorFieldH::divergence_polynomial() const {
  Polynomial d(dim());
  for (int k = 0; k < dim(); ++k) d += components_[static_cast<std::size_t>(k)].derivative(k);
  return d;
}

VectorFieldH VectorFieldH::scaled(double s) const {
  if (kind_ != Kind::Polynomial && s > 0.0) return scaled_radial(alpha_ * s, center_);
  std::vector<Polynomial> comps;
  for (const auto& p : components_) comps.push_back(s * p);
  return polynomial(std::move(comps));
}

std::string VectorFieldH::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Radial:
    case Kind::ScaledRadial:
      os << (kind_ == Kind::Radial ? "radial" : "scaled-radial") << " alpha=" << alpha_ << " center=(";
      for (Eigen::Index i = 0; i < center_.size(); ++i) os << (i ? "," : "") << center_(i);
      os << ")";
      break;
    case Kind::Polynomial:
      os << "polynomial [";
      for (std::size_t k = 0; k < components_.size(); ++k) os << (k ? "; " : "") << components_[k].to_string();
      os << "]";
      break;
  }
  return os.str();
}

SmallMat covariant_differential(const MetricField& metric, const VectorFieldH& H, const SmallVec& x,
                                double h, DerivativeMode mode) {
  const int d = metric.dim();
  if (H.dim() != d) throw std::invalid_argument("covariant_differential: dimension mismatch");
  const SmallMat g = metric.g(x);
  const Christoffel gamma = christoffel_symbols(metric, x, h, mode);
  const SmallVec Hx = H(x);
  const SmallMat J = H.jacobian(x);
  // nabla_j H^k = d_j H^k + Gamma^k_{jl} H^l
  SmallMat cov(d, d);
  for (int k = 0; k < d; ++k) {
    for (int j = 0; j < d; ++j) {
      double s = J(k, j);
      for (int l = 0; l < d; ++l) s += gamma(k, j, l) * Hx(l);
      cov(k, j) = s;
    }
  }
  // B(j, m) = g_{mk} nabla_j H^k
  const SmallMat B = (g * cov).transpose();
  return 0.5 * (B + B.transpose());
}

double min_generalized_eigenvalue(const SmallMat& S, const SmallMat& g) {
  Eigen::LLT<SmallMat> llt(g);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "metric Cholesky failed");
  const SmallMat L = llt.matrixL();
  const SmallMat Linv = L.inverse();
  const SmallMat C = Linv * S * Linv.transpose();
  return min_eigenvalue(0.5 * (C + C.transpose()));
}

std::string EscapeCertificate::to_report() const {
  std::ostringstream os;
  os.precision(17);
  os << "verdict=" << (certified() ? "certified" : "refuted") << "\n"
     << "rho0=" << rho0 << "\n"
     << "gamma0=" << gamma0 << "\n"
     << "min_interior_eigenvalue=" << min_interior_eigenvalue << "\n"
     << "min_boundary_inner_product=" << min_boundary_inner_product << "\n"
     << "interior_samples=" << interior_count << "\n"
     << "boundary_samples=" << boundary_count << "\n";
  return os.str();
}

EscapeCertificate certify_escape(const MetricField& metric, const VectorFieldH& H,
                                 const std::vector<SmallVec>& interior_samples,
                                 const std::vector<BoundarySample>& boundary_samples,
                                 const EscapeThresholds& thresholds) {
  if (interior_samples.empty()) throw Error(ErrorCode::EmptySampleSet, "no interior samples");
  if (boundary_samples.empty()) throw Error(ErrorCode::EmptySampleSet, "no boundary samples");

  std::vector<double> lam(interior_samples.size());
  parallel_for(interior_samples.size(), [&](std::size_t i) {
    const SmallVec& x = interior_samples[i];
    const SmallMat S = covariant_differential(metric, H, x, thresholds.fd_step);
    lam[i] = min_generalized_eigenvalue(S, metric.g(x));
  });
  double bip = std::numeric_limits<double>::infinity();
  for (const auto& b : boundary_samples) bip = std::min(bip, H(b.point).dot(b.normal));

  EscapeCertificate cert;
  cert.interior_count = interior_samples.size();
  cert.boundary_count = boundary_samples.size();
  cert.min_interior_eigenvalue = *std::min_element(lam.begin(), lam.end());
  cert.min_boundary_inner_product = bip;
  cert.rho0 = cert.min_interior_eigenvalue;
  cert.gamma0 = cert.min_boundary_inner_product;
  cert.verdict = (cert.min_interior_eigenvalue >= thresholds.rho0 && cert.min_boundary_inner_product >= thresholds.gamma0)
                     ? EscapeCertificate::Verdict::Certified
                     : EscapeCertificate::Verdict::Refuted;
  return cert;
}

std::vector<SmallVec> disc_interior_samples(const SmallVec& center, double radius, int n) {
  std::vector<SmallVec> pts;
  if (n < 2) return pts;
  const double step = 2.0 * radius / (n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      SmallVec p(2);
      p << center(0) - radius + i * step, center(1) - radius + j * step;
      if ((p - center).norm() <= radius * (1.0 + 1e-14)) pts.push_back(p);
    }
  }
  return pts;
}

std::vector<BoundarySample> disc_boundary_samples(const SmallVec& center, double radius, int n) {
  std::vector<BoundarySample> out;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n;
    SmallVec nu(2);
    nu << std::cos(th), std::sin(th);
    out.push_back({center + radius * nu, nu});
  }
  return out;
}

}  // namespace fsi
