#include "sbvflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/core.h>

namespace sbvflow {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputError("matrix is not square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) throw InputError(fmt::format("matrix is not symmetric (|A - A^T| = {})", asym));
}

void require_cone(double lambda_min) {
  if (!(lambda_min > 0.0)) {
    throw OutsideConeError(fmt::format("eigenvalue {} is not positive", lambda_min));
  }
}

}  // namespace

std::string_view to_string(TauPreset preset) {
  switch (preset) {
    case TauPreset::kTau0:
      return "tau0";
    case TauPreset::kTauPi4:
      return "tau-pi4";
    case TauPreset::kTauPi2:
      return "tau-pi2";
  }
  return "unknown";
}

TauPreset parse_tau_preset(std::string_view text) {
  if (text == "tau0") return TauPreset::kTau0;
  if (text == "tau-pi4") return TauPreset::kTauPi4;
  if (text == "tau-pi2") return TauPreset::kTauPi2;
  throw InputError(fmt::format("unknown operator preset '{}' (expected tau0 | tau-pi4 | tau-pi2)", text));
}

std::string_view to_string(BandProvenance provenance) {
  return provenance == BandProvenance::kProven ? "proven" : "derived";
}

EigenProfile::EigenProfile(std::string name, std::optional<TauPreset> tau, Fn f, Fn fp, Fn fpp, Fn finv,
                           double lo, double hi)
    : name_(std::move(name)),
      tau_(tau),
      f_(std::move(f)),
      fp_(std::move(fp)),
      fpp_(std::move(fpp)),
      finv_(std::move(finv)),
      range_lo_(lo),
      range_hi_(hi) {}

EigenProfile EigenProfile::preset(TauPreset preset) {
  switch (preset) {
    case TauPreset::kTau0:
      return EigenProfile(
          "tau0", preset, [](double t) { return std::log(t); }, [](double t) { return 1.0 / t; },
          [](double t) { return -1.0 / (t * t); }, [](double v) { return std::exp(v); }, -kInf, kInf);
    case TauPreset::kTauPi4:
      return EigenProfile(
          "tau-pi4", preset, [](double t) { return -1.0 / (1.0 + t); },
          [](double t) { return 1.0 / ((1.0 + t) * (1.0 + t)); },
          [](double t) { return -2.0 / ((1.0 + t) * (1.0 + t) * (1.0 + t)); },
          [](double v) { return -1.0 / v - 1.0; }, -1.0, 0.0);
    case TauPreset::kTauPi2:
      return EigenProfile(
          "tau-pi2", preset, [](double t) { return std::atan(t); }, [](double t) { return 1.0 / (1.0 + t * t); },
          [](double t) { return -2.0 * t / ((1.0 + t * t) * (1.0 + t * t)); },
          [](double v) { return std::tan(v); }, 0.0, std::numbers::pi / 2.0);
  }
  throw InputError("unknown operator preset");
}

EigenProfile EigenProfile::custom(std::string name, Fn f, Fn fp, Fn fpp, Fn f_inverse, double range_lo,
                                  double range_hi) {
  return EigenProfile(std::move(name), std::nullopt, std::move(f), std::move(fp), std::move(fpp),
                      std::move(f_inverse), range_lo, range_hi);
}

EigenProfile dual_profile(const EigenProfile& profile) {
  // f*(t) = -f(1/t); f*'(t) = f'(1/t)/t^2; f*''(t) = -2 f'(1/t)/t^3 - f''(1/t)/t^4.
  const EigenProfile p = profile;
  return EigenProfile::custom(
      "dual(" + p.name() + ")", [p](double t) { return -p.f(1.0 / t); },
      [p](double t) { return p.fp(1.0 / t) / (t * t); },
      [p](double t) { return -2.0 * p.fp(1.0 / t) / (t * t * t) - p.fpp(1.0 / t) / (t * t * t * t); },
      [p](double v) { return 1.0 / p.f_inverse(-v); }, -p.range_hi(), -p.range_lo());
}

Spectral2 eigen_sym(const Eigen::Matrix2d& a) {
  const double b = a(0, 1);
  if (std::abs(b - a(1, 0)) > kSymmetryTol) {
    throw InputError(fmt::format("matrix is not symmetric (|A - A^T| = {})", std::abs(b - a(1, 0))));
  }
  const double p = a(0, 0);
  const double q = a(1, 1);
  const double mean = 0.5 * (p + q);
  const double r = std::hypot(0.5 * (p - q), b);
  const double det = p * q - b * b;

  Spectral2 out;
  double lo;
  double hi;
  if (mean > 0.0) {
    hi = mean + r;
    lo = det / hi;
  } else {
    lo = mean - r;
    hi = lo != 0.0 ? det / lo : mean + r;
  }
  out.values << lo, hi;

  if (r == 0.0) {
    out.vectors.setIdentity();
    return out;
  }
  // Eigenvector of the larger eigenvalue; pick the better-conditioned form.
  Eigen::Vector2d v_hi = p >= q ? Eigen::Vector2d(0.5 * (p - q) + r, b) : Eigen::Vector2d(b, 0.5 * (q - p) + r);
  v_hi.normalize();
  out.vectors.col(1) = v_hi;
  out.vectors.col(0) = Eigen::Vector2d(-v_hi.y(), v_hi.x());
  return out;
}

SpectralN eigen_sym(const Eigen::MatrixXd& a) {
  require_symmetric(a);
  SpectralN out;
  if (a.rows() == 2) {
    const Spectral2 s = eigen_sym(Eigen::Matrix2d(a));
    out.values = s.values;
    out.vectors = s.vectors;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

double sum_profile(const EigenProfile& profile, const Eigen::Ref<const Eigen::VectorXd>& lambda) {
  require_cone(lambda.minCoeff());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) sum += profile.f(lambda(i));
  return sum;
}

double evaluate_F(const EigenProfile& profile, const Eigen::Matrix2d& a) {
  const Spectral2 s = eigen_sym(a);
  require_cone(s.values(0));
  return profile.f(s.values(0)) + profile.f(s.values(1));
}

double evaluate_F(const EigenProfile& profile, const Eigen::MatrixXd& a) {
  const SpectralN s = eigen_sym(a);
  return sum_profile(profile, s.values);
}

Eigen::Matrix2d gradient_F(const EigenProfile& profile, const Eigen::Matrix2d& a) {
  const Spectral2 s = eigen_sym(a);
  require_cone(s.values(0));
  const Eigen::Vector2d d(profile.fp(s.values(0)), profile.fp(s.values(1)));
  return s.vectors * d.asDiagonal() * s.vectors.transpose();
}

Eigen::MatrixXd gradient_F(const EigenProfile& profile, const Eigen::MatrixXd& a) {
  const SpectralN s = eigen_sym(a);
  require_cone(s.values.minCoeff());
  Eigen::VectorXd d(s.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = profile.fp(s.values(i));
  return s.vectors * d.asDiagonal() * s.vectors.transpose();
}

ThetaBounds positive_pi4_bounds(const ThetaBounds& theta) { return {-theta.hi, -theta.lo}; }

EnvelopeBounds envelope_bounds(const EigenProfile& profile, const ThetaBounds& theta, int n) {
  if (n < 1) throw InputError("dimension must be positive");
  if (theta.lo > theta.hi) throw InputError("Theta_0 must not exceed Theta_1");
  auto in_range = [&](double v) { return v > profile.range_lo() && v < profile.range_hi(); };
  if (!in_range(theta.lo / n) || !in_range(theta.hi / n)) {
    throw InfeasibleBoundError(fmt::format("Theta bounds [{}, {}] outside the range of {} f", theta.lo,
                                           theta.hi, n));
  }
  if (profile.is_preset(TauPreset::kTauPi4)) {
    const ThetaBounds pos = positive_pi4_bounds(theta);
    return {n / pos.lo - 1.0, n / pos.hi - 1.0};
  }
  return {profile.f_inverse(theta.hi / n), profile.f_inverse(theta.lo / n)};
}

StructureBand structure_band(const EigenProfile& profile, const Eigen::Ref<const Eigen::VectorXd>& lambda,
                             const ThetaBounds& theta, double band_tol, double eigen_slack) {
  require_cone(lambda.minCoeff());
  const int n = static_cast<int>(lambda.size());
  StructureBand band{};
  for (int i = 0; i < n; ++i) {
    const double d = profile.fp(lambda(i));
    band.sum_fp += d;
    band.sum_fp_lambda2 += d * lambda(i) * lambda(i);
  }

  if (profile.is_preset(TauPreset::kTauPi4)) {
    const ThetaBounds pos = positive_pi4_bounds(theta);
    const double nn = static_cast<double>(n) * n;
    band.fp_band = {pos.lo * pos.lo / nn, static_cast<double>(n)};
    band.fp_lambda2_band = {(n - pos.hi) * (n - pos.hi) / nn, static_cast<double>(n)};
    band.provenance = BandProvenance::kProven;
  } else {
    const EnvelopeBounds mu = envelope_bounds(profile, theta, n);
    const double lo = std::max(std::min(mu.mu1, mu.mu2) - eigen_slack, 1e-12);
    const double hi = std::max(mu.mu1, mu.mu2) + eigen_slack;
    // f' and f' t^2 are monotone on (0, inf) for every preset; sample anyway
    // so that custom profiles are handled.
    constexpr int kSamples = 64;
    Interval g1{kInf, -kInf};
    Interval g2{kInf, -kInf};
    for (int k = 0; k <= kSamples; ++k) {
      const double t = lo + (hi - lo) * k / kSamples;
      const double d = profile.fp(t);
      g1 = {std::min(g1.lo, d), std::max(g1.hi, d)};
      g2 = {std::min(g2.lo, d * t * t), std::max(g2.hi, d * t * t)};
    }
    band.fp_band = {n * g1.lo, n * g1.hi};
    band.fp_lambda2_band = {n * g2.lo, n * g2.hi};
    band.provenance = BandProvenance::kDerived;
  }
  band.pass = band.fp_band.contains(band.sum_fp, band_tol) &&
              band.fp_lambda2_band.contains(band.sum_fp_lambda2, band_tol);
  return band;
}

std::optional<double> check_concavity(const EigenProfile& profile, const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b, double eps) {
  require_symmetric(b);
  try {
    const double fa = evaluate_F(profile, a);
    const double fplus = evaluate_F(profile, Eigen::MatrixXd(a + eps * b));
    const double fminus = evaluate_F(profile, Eigen::MatrixXd(a - eps * b));
    return (fplus - 2.0 * fa + fminus) / (eps * eps);
  } catch (const OutsideConeError&) {
    return std::nullopt;
  }
}

}  // namespace sbvflow
