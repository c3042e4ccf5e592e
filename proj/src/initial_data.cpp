#include "fsi/initial_data.hpp"

#include <cmath>
#include <stdexcept>

namespace fsi {

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"zero", "elastic-pulse", "shear", "combined"};
  return names;
}

double bump(const Point& x, double rho) {
  const double s = x.squaredNorm() / (rho * rho);
  if (s >= 1.0) return 0.0;
  const double u = 1.0 - s;
  return u * u * u * u;
}

Eigen::Vector2d bump_gradient(const Point& x, double rho) {
  const double s = x.squaredNorm() / (rho * rho);
  if (s >= 1.0) return Eigen::Vector2d::Zero();
  const double u = 1.0 - s;
  return -8.0 * u * u * u / (rho * rho) * x;
}

AnalyticVectorField shear_field(double r0, double r1) {
  const double d = r1 - r0;
  const double C = 3125.0 / (108.0 * std::pow(d, 5));
  // g = f / r and its first two radial derivatives
  auto radial = [=](double r) {
    const double s = r - r0;
    const double u = r1 - r;
    const double f = C * s * s * u * u * u;
    const double f1 = C * (2.0 * s * u * u * u - 3.0 * s * s * u * u);
    const double f2 = C * (2.0 * u * u * u - 12.0 * s * u * u + 6.0 * s * s * u);
    const double g = f / r;
    const double g1 = f1 / r - f / (r * r);
    const double g2 = f2 / r - 2.0 * f1 / (r * r) + 2.0 * f / (r * r * r);
    return std::array<double, 3>{g, g1, g2};
  };
  auto inside = [=](double r) { return r > r0 && r < r1; };
  AnalyticVectorField v;
  v.value = [=](const Point& x) -> Eigen::Vector2d {
    const double r = x.norm();
    if (!inside(r)) return Eigen::Vector2d::Zero();
    return radial(r)[0] * Eigen::Vector2d(-x.y(), x.x());
  };
  v.gradient = [=](const Point& x) -> Eigen::Matrix2d {
    const double r = x.norm();
    if (!inside(r)) return Eigen::Matrix2d::Zero();
    const auto g = radial(r);
    Eigen::Matrix2d J;
    J << 0.0, -1.0, 1.0, 0.0;
    return g[1] / r * Eigen::Vector2d(-x.y(), x.x()) * x.transpose() + g[0] * J;
  };
  v.laplacian = [=](const Point& x) -> Eigen::Vector2d {
    const double r = x.norm();
    if (!inside(r)) return Eigen::Vector2d::Zero();
    const auto g = radial(r);
    return (g[2] + 3.0 * g[1] / r) * Eigen::Vector2d(-x.y(), x.x());
  };
  return v;
}

InitialData make_initial_data(const std::string& preset, double amplitude, double r0, double r1) {
  const bool pulse = preset == "elastic-pulse" || preset == "combined";
  const bool shear = preset == "shear" || preset == "combined";
  if (!pulse && !shear && preset != "zero") throw std::invalid_argument("unknown initial-data preset: " + preset);

  InitialData d;
  const double rho = 0.5 * r0;
  const Eigen::Vector2d dir(1.0, 0.5);
  if (pulse) {
    d.w0 = [=](const Point& x) -> Eigen::Vector2d { return amplitude * bump(x, rho) * dir; };
    d.w0_gradient = [=](const Point& x) -> Eigen::Matrix2d {
      return amplitude * dir * bump_gradient(x, rho).transpose();
    };
  } else {
    d.w0 = [](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); };
    d.w0_gradient = [](const Point&) -> Eigen::Matrix2d { return Eigen::Matrix2d::Zero(); };
  }
  d.w1 = [](const Point&) -> Eigen::Vector2d { return Eigen::Vector2d::Zero(); };
  if (shear) {
    const AnalyticVectorField s = shear_field(r0, r1);
    d.v0.value = [=](const Point& x) -> Eigen::Vector2d { return amplitude * s.value(x); };
    d.v0.gradient = [=](const Point& x) -> Eigen::Matrix2d { return amplitude * s.gradient(x); };
    d.v0.laplacian = [=](const Point& x) -> Eigen::Vector2d { return amplitude * s.laplacian(x); };
  } else {
    d.v0 = AnalyticVectorField::zero();
  }
  return d;
}

}  // namespace fsi
