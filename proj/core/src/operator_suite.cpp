#include "sbvflow/operator_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

namespace sbvflow {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  MatrixXd orthogonal(int n) {
    MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = normal_(rng_);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    return qr.householderQ() * MatrixXd::Identity(n, n);
  }

  VectorXd eigenvalues(int n, double lo = 0.2, double hi = 5.0) {
    VectorXd lambda(n);
    for (int i = 0; i < n; ++i) lambda(i) = log_uniform(lo, hi);
    std::sort(lambda.data(), lambda.data() + n);
    return lambda;
  }

  MatrixXd spd(int n) {
    const MatrixXd q = orthogonal(n);
    const VectorXd lambda = eigenvalues(n);
    MatrixXd a = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
  }

  MatrixXd symmetric_unit(int n) {
    MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) b(i, j) = b(j, i) = normal_(rng_);
    return b / b.norm();
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::string matrix_text(const MatrixXd& a) {
  std::string s = "[";
  for (int i = 0; i < a.rows(); ++i) {
    s += i ? "; " : "";
    for (int j = 0; j < a.cols(); ++j) s += fmt::format("{}{:.17g}", j ? ", " : "", a(i, j));
  }
  return s + "]";
}

/// Records the worst value seen; a sample fails when value > threshold.
void observe(SuiteCheck& check, double value, const std::string& where) {
  ++check.samples;
  if (!(value <= check.threshold) && check.pass) {
    check.pass = false;
    check.counterexample = where;
  }
  if (!std::isfinite(value) || value > check.worst || check.samples == 1) check.worst = value;
}

MatrixXd finite_difference_gradient(const EigenProfile& profile, const MatrixXd& a, double step) {
  const int n = static_cast<int>(a.rows());
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      MatrixXd e = MatrixXd::Zero(n, n);
      e(i, j) = e(j, i) = step;
      const double diff = evaluate_F(profile, MatrixXd(a + e)) - evaluate_F(profile, MatrixXd(a - e));
      // Off-diagonal perturbations move two entries at once.
      const double d = diff / (2.0 * step) / (i == j ? 1.0 : 2.0);
      g(i, j) = g(j, i) = d;
    }
  }
  return g;
}

}  // namespace

bool OperatorSuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.pass || !c.gating; });
}

const SuiteCheck* OperatorSuiteReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

SuiteCheck make_check(std::string name, double threshold, bool gating) {
  SuiteCheck c;
  c.name = std::move(name);
  c.gating = gating;
  c.threshold = threshold;
  return c;
}

}  // namespace

OperatorSuiteReport run_operator_suite(const EigenProfile& profile, const OperatorSuiteOptions& options) {
  Sampler rng(options.seed);
  const EigenProfile dual = dual_profile(profile);
  const EigenProfile dual_dual = dual_profile(dual);

  SuiteCheck gradient = make_check("gradient_fd", 1e-6, true);
  SuiteCheck involution = make_check("dual_involution", 1e-10, true);
  SuiteCheck inverse = make_check("dual_inverse_identity", 1e-10, true);
  SuiteCheck concave = make_check("concavity", 1e-6, true);
  SuiteCheck concave_dual = make_check("concavity_dual", 1e-6, true);
  SuiteCheck monotone = make_check("monotonicity", 1e-12, true);
  SuiteCheck envelope = make_check("envelope_consistency", 1e-12, true);
  SuiteCheck consistency = make_check("profile_consistency", 1e-6, true);
  SuiteCheck inverse_roundtrip = make_check("profile_inverse", 1e-10, true);
  SuiteCheck band = make_check("structure_band", 0.0, profile.is_preset(TauPreset::kTauPi4));

  for (const int n : options.dims) {
    for (int s = 0; s < options.samples; ++s) {
      const MatrixXd a = rng.spd(n);
      const std::string where = fmt::format("n={} A={}", n, matrix_text(a));

      const MatrixXd g = gradient_F(profile, a);
      const MatrixXd g_fd = finite_difference_gradient(profile, a, 1e-5);
      observe(gradient, (g - g_fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff(), where);

      const double fa = evaluate_F(profile, a);
      observe(involution, std::abs(evaluate_F(dual_dual, a) - fa) / std::max(1.0, std::abs(fa)), where);
      const double dual_value = evaluate_F(dual, a);
      const double direct = -evaluate_F(profile, MatrixXd(a.inverse()));
      observe(inverse, std::abs(dual_value - direct) / std::max(1.0, std::abs(direct)), where);

      const MatrixXd b = rng.symmetric_unit(n);
      const std::string where_b = where + " B=" + matrix_text(b);
      if (auto v = check_concavity(profile, a, b, 1e-3)) {
        observe(concave, *v, where_b);
      } else {
        ++concave.skipped;
      }
      if (auto v = check_concavity(dual, a, b, 1e-3)) {
        observe(concave_dual, *v, where_b);
      } else {
        ++concave_dual.skipped;
      }

      const MatrixXd r = rng.symmetric_unit(n);
      const MatrixXd larger = a + r * r.transpose();
      observe(monotone, evaluate_F(profile, a) - evaluate_F(profile, larger), where);
    }

    // Envelope consistency: Theta bounds from two random tuples, then brute
    // force over tuples whose F value lands inside them.
    for (int s = 0; s < std::max(1, options.samples / 10); ++s) {
      const double f1 = sum_profile(profile, rng.eigenvalues(n));
      const double f2 = sum_profile(profile, rng.eigenvalues(n));
      const ThetaBounds theta{std::min(f1, f2), std::max(f1, f2)};
      const EnvelopeBounds mu = envelope_bounds(profile, theta, n);
      for (int k = 0; k < 200; ++k) {
        const VectorXd lambda = rng.eigenvalues(n, 0.05, 20.0);
        const double value = sum_profile(profile, lambda);
        if (value < theta.lo || value > theta.hi) {
          ++envelope.skipped;
          continue;
        }
        const std::string where = fmt::format("n={} lambda=({}, .., {}) Theta=[{}, {}]", n, lambda(0),
                                              lambda(n - 1), theta.lo, theta.hi);
        const double scale = std::max({1.0, mu.mu1, mu.mu2});
        observe(envelope, std::max(lambda(0) - mu.mu1, mu.mu2 - lambda(n - 1)) / scale, where);

        const StructureBand sb = structure_band(profile, lambda, theta);
        observe(band, sb.pass ? 0.0 : 1.0, where);
      }
    }
  }

  for (int s = 0; s < options.samples; ++s) {
    const double t = rng.log_uniform(1e-3, 1e3);
    const std::string where = fmt::format("t={:.17g}", t);
    const double step = 1e-5 * t;
    const double fp_fd = (profile.f(t + step) - profile.f(t - step)) / (2.0 * step);
    const double fpp_fd = (profile.fp(t + step) - profile.fp(t - step)) / (2.0 * step);
    const double err_fp = std::abs(fp_fd - profile.fp(t)) / std::max(std::abs(profile.fp(t)), 1e-300);
    const double err_fpp = std::abs(fpp_fd - profile.fpp(t)) / (std::abs(profile.fpp(t)) + std::abs(profile.fp(t)) / t);
    const double err_inv = std::abs(profile.f_inverse(profile.f(t)) - t) / std::max(1.0, t);
    const double sign = profile.fpp(t) > 0.0 ? 1.0 : 0.0;  // concave profile: f'' <= 0
    const double monotone_f = profile.fp(t) > 0.0 ? 0.0 : 1.0;
    observe(consistency, std::max({err_fp, err_fpp, sign, monotone_f}), where);
    observe(inverse_roundtrip, err_inv, where);
  }

  OperatorSuiteReport report;
  report.profile = profile.name();
  report.checks = {gradient, involution, inverse, concave, concave_dual, monotone, envelope, consistency,
                   inverse_roundtrip, band};
  return report;
}

}  // namespace sbvflow
