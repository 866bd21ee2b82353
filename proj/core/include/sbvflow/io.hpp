#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sbvflow/diagnostics.hpp"
#include "sbvflow/solver.hpp"

namespace sbvflow {

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double value);

inline constexpr std::string_view kTimeseriesHeader =
    "t,udot_min,udot_max,theta0,theta1,lam_min,lam_max,mu1,mu2,obliq_min,band_sum_fp,band_sum_fpl2,"
    "stat_residual,hausdorff";
inline constexpr std::string_view kFinalFieldHeader = "x1,x2,u,du1,du2,hess11,hess12,hess22";

void write_timeseries(const std::filesystem::path& path, std::span<const DiagnosticsRecord> records);

struct FieldRow {
  double x1, x2, u, du1, du2, hess11, hess12, hess22;
};

/// One row per active node in row-major order.
std::vector<FieldRow> field_rows(const FlowProblem& problem, const GridField& field);
void write_final_field(const std::filesystem::path& path, std::span<const FieldRow> rows);
/// Throws InputError when the file is missing, has the wrong header or a
/// malformed row.
std::vector<FieldRow> read_final_field(const std::filesystem::path& path);

/// summary.json with c_infty, c_infty_crosscheck, stat_residual, hausdorff,
/// steps, termination and one entry per verdict under "checks".
std::string summary_json(const std::string& name, const FlowSummary& summary, std::span<const SuiteVerdict> checks);

struct DualityMetrics {
  double residual;
  double coverage;
  double flow_residual;
  double identity_residual;
  double tolerance;
  bool pass;
};

/// Adds or replaces the "duality" object of an existing summary.json.
/// Throws InputError when the file is missing or not valid JSON.
void merge_duality(const std::filesystem::path& path, const DualityMetrics& metrics);

void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

}  // namespace sbvflow
