#include "sbvflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/core.h>

#include "sbvflow/errors.hpp"

namespace sbvflow {

namespace {

double radical_inverse(int index, int base) {
  double result = 0.0;
  double digit = 1.0 / base;
  while (index > 0) {
    result += digit * (index % base);
    index /= base;
    digit /= base;
  }
  return result;
}

ConvexDomain quadric_domain(std::string name, const Quadric& q, Box box, double theta) {
  const Mat2 form = q.form;
  const Vec2 center = q.center;
  const double level = q.level;
  return ConvexDomain(
      std::move(name),
      [=](const Vec2& p) {
        const Vec2 d = p - center;
        return level - d.dot(form * d);
      },
      [=](const Vec2& p) -> Vec2 { return -2.0 * form * (p - center); },
      [=](const Vec2&) -> Mat2 { return -2.0 * form; }, box, theta, q);
}

}  // namespace

ConvexDomain::ConvexDomain(std::string name, ScalarFn h, VectorFn dh, MatrixFn d2h, Box box,
                           double theta, std::optional<Quadric> quadric)
    : name_(std::move(name)),
      h_(std::move(h)),
      dh_(std::move(dh)),
      d2h_(std::move(d2h)),
      box_(std::move(box)),
      theta_(theta),
      quadric_(std::move(quadric)) {
  if (!(box_.hi.x() > box_.lo.x()) || !(box_.hi.y() > box_.lo.y())) {
    throw InvalidDomainError("bounding box of domain '" + name_ + "' is empty");
  }
}

ConvexDomain make_ellipse(double a, double b) { return make_ellipse(EllipseParams{a, b}); }

ConvexDomain make_ellipse(const EllipseParams& params) {
  const double a = params.a;
  const double b = params.b;
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidDomainError(fmt::format("ellipse semi-axes must be positive, got ({}, {})", a, b));
  }
  const double c = std::cos(params.angle);
  const double s = std::sin(params.angle);
  Mat2 rot;
  rot << c, -s, s, c;
  const Mat2 form = rot * Eigen::Vector2d(1.0 / (a * a), 1.0 / (b * b)).asDiagonal() * rot.transpose();

  const double wx = std::sqrt(a * a * c * c + b * b * s * s);
  const double wy = std::sqrt(a * a * s * s + b * b * c * c);
  Box box{params.center - Vec2(wx, wy), params.center + Vec2(wx, wy)};
  const double theta = 2.0 * std::min(1.0 / (a * a), 1.0 / (b * b));
  return quadric_domain(fmt::format("ellipse({}, {})", a, b), Quadric{form, params.center, 1.0}, box,
                        theta);
}

ConvexDomain make_blend(const std::vector<BlendTerm>& terms) {
  if (terms.empty()) throw InvalidDomainError("blend needs at least one component");
  for (const auto& t : terms) {
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw InvalidDomainError(fmt::format("blend weights must be positive, got {}", t.weight));
    }
  }

  Box box = terms.front().domain.bounding_box();
  double theta = 0.0;
  bool all_quadric = true;
  for (const auto& t : terms) {
    const Box& b = t.domain.bounding_box();
    box.lo = box.lo.cwiseMin(b.lo);
    box.hi = box.hi.cwiseMax(b.hi);
    theta += t.weight * t.domain.theta();
    all_quadric = all_quadric && t.domain.quadric().has_value();
  }

  if (all_quadric) {
    // sum_i w_i (l_i - (p - m_i)^T M_i (p - m_i)) is again a quadric.
    Mat2 form = Mat2::Zero();
    Vec2 linear = Vec2::Zero();
    double constant = 0.0;
    for (const auto& t : terms) {
      const Quadric& q = *t.domain.quadric();
      form += t.weight * q.form;
      linear += t.weight * q.form * q.center;
      constant += t.weight * (q.level - q.center.dot(q.form * q.center));
    }
    const Vec2 center = form.ldlt().solve(linear);
    const double level = constant + center.dot(form * center);
    if (!(level > 0.0)) throw InvalidDomainError("blend of ellipses has empty interior");
    return quadric_domain("blend", Quadric{form, center, level}, box, theta);
  }

  auto h = [terms](const Vec2& p) {
    double v = 0.0;
    for (const auto& t : terms) v += t.weight * t.domain.h(p);
    return v;
  };
  auto dh = [terms](const Vec2& p) -> Vec2 {
    Vec2 g = Vec2::Zero();
    for (const auto& t : terms) g += t.weight * t.domain.gradient(p);
    return g;
  };
  auto d2h = [terms](const Vec2& p) -> Mat2 {
    Mat2 m = Mat2::Zero();
    for (const auto& t : terms) m += t.weight * t.domain.hessian(p);
    return m;
  };
  return ConvexDomain("blend", h, dh, d2h, box, theta);
}

Vec2 inner_normal(const ConvexDomain& domain, const Vec2& p, double tolerance) {
  const double hp = domain.h(p);
  if (std::abs(hp) > tolerance) {
    throw InputError(fmt::format("point ({}, {}) is not on the boundary: h = {}", p.x(), p.y(), hp));
  }
  const Vec2 g = domain.gradient(p);
  const double norm = g.norm();
  if (!(norm > 1e-12)) {
    throw DegenerateNormalError(fmt::format("|Dh| = {} at ({}, {})", norm, p.x(), p.y()));
  }
  return g / norm;
}

Vec2 project_to_boundary(const ConvexDomain& domain, const Vec2& p) {
  const double h0 = domain.h(p);
  if (h0 == 0.0) return p;
  const Vec2 g = domain.gradient(p);
  const double gn = g.norm();
  if (!(gn > 0.0)) throw DegenerateNormalError("cannot project: Dh vanishes");
  // Outward when inside, inward when outside.
  const Vec2 dir = (h0 > 0.0 ? -1.0 : 1.0) * g / gn;
  auto phi = [&](double s) { return domain.h(p + s * dir); };

  double lo = 0.0;
  double hi = std::abs(h0) / gn;
  int expansions = 0;
  while ((phi(hi) > 0.0) == (h0 > 0.0)) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 200) throw DegenerateNormalError("boundary not reached while projecting");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((phi(mid) > 0.0) == (h0 > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return p + 0.5 * (lo + hi) * dir;
}

double concavity_modulus(const ConvexDomain& domain, int sample_count) {
  if (sample_count < 1) throw InputError("sample_count must be at least 1");
  const Box& box = domain.bounding_box();
  const Vec2 extent = box.hi - box.lo;

  double modulus = std::numeric_limits<double>::infinity();
  int accepted = 0;
  const int max_draws = 1000 * sample_count + 1000;
  for (int k = 1; accepted < sample_count && k <= max_draws; ++k) {
    const Vec2 p = box.lo + Vec2(radical_inverse(k, 2) * extent.x(), radical_inverse(k, 3) * extent.y());
    if (domain.h(p) < 0.0) continue;
    ++accepted;
    const Mat2 hess = domain.hessian(p);
    const double largest = Eigen::SelfAdjointEigenSolver<Mat2>(hess, Eigen::EigenvaluesOnly).eigenvalues()(1);
    if (largest >= 0.0) {
      throw ConcavityViolationError(fmt::format(
          "defining function of '{}' is not strictly concave at ({}, {}): largest Hessian eigenvalue {}",
          domain.name(), p.x(), p.y(), largest));
    }
    modulus = std::min(modulus, -largest);
  }
  if (accepted == 0) throw InvalidDomainError("no sample point falls inside '" + domain.name() + "'");
  return modulus;
}

GridDiscretization::GridDiscretization(double spacing, int i0, int j0, int nx, int ny,
                                       std::vector<NodeKind> kinds)
    : spacing_(spacing), i0_(i0), j0_(j0), nx_(nx), ny_(ny), kinds_(std::move(kinds)) {
  for (int node = 0; node < size(); ++node) {
    switch (kinds_[node]) {
      case NodeKind::kInterior:
        interior_.push_back(node);
        active_.push_back(node);
        break;
      case NodeKind::kBoundary:
        boundary_.push_back(node);
        active_.push_back(node);
        break;
      case NodeKind::kExterior:
        break;
    }
  }
}

std::pair<int, int> GridDiscretization::lattice_index(const Vec2& p) const {
  return {static_cast<int>(std::lround(p.x() / spacing_)) - i0_,
          static_cast<int>(std::lround(p.y() / spacing_)) - j0_};
}

GridDiscretization classify_grid(const ConvexDomain& domain, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw InputError(fmt::format("grid spacing must be positive, got {}", spacing));
  }
  const Box& box = domain.bounding_box();
  const int i_lo = static_cast<int>(std::floor(box.lo.x() / spacing)) - 1;
  const int i_hi = static_cast<int>(std::ceil(box.hi.x() / spacing)) + 1;
  const int j_lo = static_cast<int>(std::floor(box.lo.y() / spacing)) - 1;
  const int j_hi = static_cast<int>(std::ceil(box.hi.y() / spacing)) + 1;
  const int nx = i_hi - i_lo + 1;
  const int ny = j_hi - j_lo + 1;

  std::vector<char> inside(static_cast<std::size_t>(nx) * ny, 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 p((i_lo + i) * spacing, (j_lo + j) * spacing);
      inside[j * nx + i] = domain.h(p) > 0.0 ? 1 : 0;
    }
  }
  auto in = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny && inside[j * nx + i]; };

  std::vector<NodeKind> kinds(inside.size(), NodeKind::kExterior);
  int interior_count = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!in(i, j)) continue;
      const bool axes = in(i - 1, j) && in(i + 1, j) && in(i, j - 1) && in(i, j + 1);
      const bool diag = (in(i + 1, j + 1) && in(i - 1, j - 1)) || (in(i - 1, j + 1) && in(i + 1, j - 1));
      if (axes && diag) {
        kinds[j * nx + i] = NodeKind::kInterior;
        ++interior_count;
      } else {
        kinds[j * nx + i] = NodeKind::kBoundary;
      }
    }
  }
  if (interior_count == 0) {
    throw ResolutionError(
        fmt::format("spacing {} leaves no interior node inside '{}'", spacing, domain.name()));
  }
  return GridDiscretization(spacing, i_lo, j_lo, nx, ny, std::move(kinds));
}

}  // namespace sbvflow
