#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbvflow/operators.hpp"

namespace sbvflow {

struct SuiteCheck {
  std::string name;
  bool pass = true;
  /// Informational checks are reported but do not affect the verdict.
  bool gating = true;
  double worst = 0.0;
  double threshold = 0.0;
  int samples = 0;
  int skipped = 0;
  std::string counterexample;
};

struct OperatorSuiteReport {
  std::string profile;
  std::vector<SuiteCheck> checks;

  bool pass() const;
  const SuiteCheck* find(const std::string& name) const;
};

struct OperatorSuiteOptions {
  std::uint64_t seed = 1;
  int samples = 100;
  std::vector<int> dims{2, 3};
};

/// Sampled property checks of a profile: spectral gradient against finite
/// differences, duality identities, concavity of F and F*, monotonicity,
/// envelope consistency, profile self-consistency and structure bands.
OperatorSuiteReport run_operator_suite(const EigenProfile& profile, const OperatorSuiteOptions& options = {});

}  // namespace sbvflow
