#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "sbvflow/errors.hpp"

namespace sbvflow {

/// The three solved members of the operator family.
///
///   kTau0    f(t) = ln t              (Monge-Ampere)
///   kTauPi4  f(t) = -1 / (1 + t)      (negated so that F is increasing)
///   kTauPi2  f(t) = arctan t          (Lagrangian angle)
enum class TauPreset { kTau0, kTauPi4, kTauPi2 };

std::string_view to_string(TauPreset preset);
/// Accepts "tau0" | "tau-pi4" | "tau-pi2".
TauPreset parse_tau_preset(std::string_view text);

/// Scalar profile f generating the symmetric eigenvalue function
/// F(A) = sum_i f(lambda_i(A)) on positive-definite matrices.
class EigenProfile {
 public:
  using Fn = std::function<double(double)>;

  static EigenProfile preset(TauPreset preset);

  /// Profile built from user callables; `range_lo`/`range_hi` bound f over (0, inf).
  static EigenProfile custom(std::string name, Fn f, Fn fp, Fn fpp, Fn f_inverse, double range_lo,
                             double range_hi);

  double f(double t) const { return f_(t); }
  double fp(double t) const { return fp_(t); }
  double fpp(double t) const { return fpp_(t); }
  /// Inverse of f on its range over (0, inf).
  double f_inverse(double v) const { return finv_(v); }

  double range_lo() const { return range_lo_; }
  double range_hi() const { return range_hi_; }

  const std::string& name() const { return name_; }
  /// Set for the three preset profiles, empty for duals and custom profiles.
  const std::optional<TauPreset>& tau() const { return tau_; }
  bool is_preset(TauPreset p) const { return tau_ && *tau_ == p; }

 private:
  EigenProfile(std::string name, std::optional<TauPreset> tau, Fn f, Fn fp, Fn fpp, Fn finv, double lo,
               double hi);

  std::string name_;
  std::optional<TauPreset> tau_;
  Fn f_;
  Fn fp_;
  Fn fpp_;
  Fn finv_;
  double range_lo_;
  double range_hi_;
};

/// Profile of F*(A) = -F(A^{-1}), i.e. f*(t) = -f(1/t).
EigenProfile dual_profile(const EigenProfile& profile);

template <int N>
struct SpectralDecomposition {
  Eigen::Matrix<double, N, 1> values;   // ascending
  Eigen::Matrix<double, N, N> vectors;  // orthonormal columns
};

using Spectral2 = SpectralDecomposition<2>;
using SpectralN = SpectralDecomposition<Eigen::Dynamic>;

/// Closed form for 2x2; throws InputError when |A - A^T| > 1e-12.
Spectral2 eigen_sym(const Eigen::Matrix2d& a);
SpectralN eigen_sym(const Eigen::MatrixXd& a);

double evaluate_F(const EigenProfile& profile, const Eigen::Matrix2d& a);
double evaluate_F(const EigenProfile& profile, const Eigen::MatrixXd& a);

/// F^{ij} = dF/da_ij = Q diag(f'(lambda)) Q^T.
Eigen::Matrix2d gradient_F(const EigenProfile& profile, const Eigen::Matrix2d& a);
Eigen::MatrixXd gradient_F(const EigenProfile& profile, const Eigen::MatrixXd& a);

/// sum_i f(lambda_i) from sorted eigenvalues; throws OutsideConeError for lambda_1 <= 0.
double sum_profile(const EigenProfile& profile, const Eigen::Ref<const Eigen::VectorXd>& lambda);

/// Bounds on the time derivative, always expressed in the sign of F (the
/// flow operator), i.e. lo = min F(D^2 u_0), hi = max F(D^2 u_0).
struct ThetaBounds {
  double lo;
  double hi;
};

/// For kTauPi4 the bounds of the positive operator sum 1/(1+lambda_i) = -F:
/// lo_positive = -hi, hi_positive = -lo.
ThetaBounds positive_pi4_bounds(const ThetaBounds& theta);

struct Interval {
  double lo;
  double hi;

  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  /// Signed distance outside the interval (negative when strictly inside).
  double excess(double v) const { return std::max(lo - v, v - hi); }
};

enum class BandProvenance { kProven, kDerived };
std::string_view to_string(BandProvenance provenance);

struct StructureBand {
  double sum_fp;            // sum_i f'(lambda_i)
  double sum_fp_lambda2;    // sum_i f'(lambda_i) lambda_i^2
  Interval fp_band;
  Interval fp_lambda2_band;
  BandProvenance provenance;
  bool pass;
};

struct EnvelopeBounds {
  double mu1;  // upper bound for the smallest eigenvalue
  double mu2;  // lower bound for the largest eigenvalue
};

/// mu1 = f^{-1}(Theta_1 / n), mu2 = f^{-1}(Theta_0 / n), valid because every
/// preset has envelopes f_1 = f_2 = n f. For kTauPi4 the explicit form
/// mu1 = n / Theta_0^+ - 1, mu2 = n / Theta_1^+ - 1 is used.
EnvelopeBounds envelope_bounds(const EigenProfile& profile, const ThetaBounds& theta, int n);

/// Structure sums at one eigenvalue tuple and their admissible band.
///
/// kTauPi4 uses [Theta_0^+^2 / n^2, n] and [(n - Theta_1^+)^2 / n^2, n].
/// Other profiles get bands of n f' and n f' t^2 over the eigenvalue range
/// [mu2 - eigen_slack, mu1 + eigen_slack] (provenance kDerived).
StructureBand structure_band(const EigenProfile& profile, const Eigen::Ref<const Eigen::VectorXd>& lambda,
                             const ThetaBounds& theta, double band_tol = 1e-9, double eigen_slack = 0.0);

/// Second difference [F(A + eB) - 2F(A) + F(A - eB)] / e^2, or nullopt when
/// A + eB or A - eB leaves the positive cone.
std::optional<double> check_concavity(const EigenProfile& profile, const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& b, double eps);

}  // namespace sbvflow
