#include "sbvflow/app.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "sbvflow/errors.hpp"
#include "sbvflow/io.hpp"
#include "sbvflow/legendre.hpp"
#include "sbvflow/operator_suite.hpp"

namespace sbvflow {

namespace fs = std::filesystem;

namespace {

fs::path run_directory(const ExperimentConfig& config, const std::optional<fs::path>& out) {
  if (out) return *out;
  if (!config.output_dir.empty()) return config.output_dir;
  return fs::path("runs") / config.name;
}

int exit_code_for(const FlowResult& result) {
  switch (result.summary.termination) {
    case Termination::kConverged:
      return result.all_checks_pass() ? kExitOk : kExitInvariantViolation;
    case Termination::kMaxTime:
      return kExitMaxTime;
    case Termination::kInvariantViolation:
      return kExitInvariantViolation;
  }
  return kExitFailure;
}

/// Rebuilds the grid field from final_u.csv rows; rows must match the active
/// nodes one to one.
GridField field_from_rows(const FlowProblem& problem, const std::vector<FieldRow>& rows, const fs::path& path) {
  const GridDiscretization& grid = problem.grid();
  if (rows.size() != grid.active_nodes().size())
    throw InputError(fmt::format("{}: {} rows for {} active nodes", path.string(), rows.size(),
                                 grid.active_nodes().size()));
  GridField field;
  field.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  const double tol = 1e-9 * grid.spacing();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int node = grid.active_nodes()[k];
    const Vec2 x = grid.coord(node);
    if (std::abs(x.x() - rows[k].x1) > tol || std::abs(x.y() - rows[k].x2) > tol || !std::isfinite(rows[k].u))
      throw InputError(fmt::format("{}: row {} does not match the run grid", path.string(), k + 2));
    field.values[node] = rows[k].u;
  }
  return field;
}

std::string describe(const DomainSpec& spec) {
  std::string out;
  for (const auto& t : spec.terms) {
    if (!out.empty()) out += " + ";
    if (spec.kind == "blend") out += fmt::format("{:g}*", t.weight);
    out += fmt::format("ellipse({:g}, {:g}", t.ellipse.a, t.ellipse.b);
    if (t.ellipse.angle != 0.0) out += fmt::format(", rot {:.4g}", t.ellipse.angle);
    if (t.ellipse.center != Vec2::Zero()) out += fmt::format(", at ({:g}, {:g})", t.ellipse.center.x(), t.ellipse.center.y());
    out += ")";
  }
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::string& config_or_preset) {
  std::error_code ec;
  if (fs::is_regular_file(config_or_preset, ec)) {
    try {
      return parse_config(read_text(config_or_preset));
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  if (is_preset(config_or_preset)) return preset(config_or_preset);
  throw ConfigError(fmt::format("'{}' is neither a config file nor a preset", config_or_preset));
}

int run_command(const RunRequest& request, std::ostream& log) {
  ExperimentConfig config;
  fs::path dir;
  try {
    config = load_config(request.config);
    if (request.seed) config.seed = *request.seed;
    dir = run_directory(config, request.out);
    config.output_dir = dir.string();
  } catch (const Error& e) {
    fmt::print(log, "error: {}\n", e.what());
    return kExitInvalidConfig;
  }

  std::optional<ExperimentRun> run;
  try {
    run.emplace(run_experiment(config));
  } catch (const Error& e) {
    fmt::print(log, "error: {}\n", e.what());
    return kExitInvalidConfig;
  }
  const FlowResult& r = run->result;
  write_text(dir / "config.json", config_to_json(config));
  write_timeseries(dir / "timeseries.csv", r.trajectory);
  write_final_field(dir / "final_u.csv", field_rows(run->problem, r.final_field));
  write_text(dir / "summary.json", summary_json(config.name, r.summary, r.checks));

  const int code = exit_code_for(r);
  fmt::print(log, "{}: {} after {} steps (t = {}), C_infty = {}, residual = {}\n", config.name,
             to_string(r.summary.termination), r.summary.steps, format_number(r.summary.final_time),
             format_number(r.summary.c_infty), format_number(r.summary.stat_residual));
  for (const auto& c : r.checks) {
    if (!c.pass) {
      fmt::print(log, "  {} {}: value {} threshold {}\n", c.gating ? "FAIL" : "note", c.name, format_number(c.value),
                 format_number(c.threshold));
    }
  }
  if (!r.summary.message.empty() && code != kExitOk) fmt::print(log, "  {}\n", r.summary.message);
  return code;
}

int check_operators_command(const std::vector<EigenProfile>& profiles, std::uint64_t seed, std::ostream& log) {
  OperatorSuiteOptions options;
  options.seed = seed;
  bool ok = true;
  for (const auto& profile : profiles) {
    const OperatorSuiteReport report = run_operator_suite(profile, options);
    fmt::print(log, "{}: {}\n", profile.name(), report.pass() ? "pass" : "FAIL");
    for (const auto& c : report.checks) {
      fmt::print(log, "  {:<24} {:<4} worst {:<13.6g} threshold {:<8.3g} samples {}{}\n", c.name,
                 c.pass ? "ok" : (c.gating ? "FAIL" : "note"), c.worst, c.threshold,
                 c.samples, c.skipped > 0 ? fmt::format(" (skipped {})", c.skipped) : "");
      if (!c.pass && c.gating) fmt::print(log, "    counterexample: {}\n", c.counterexample);
    }
    ok = ok && report.pass();
  }
  return ok ? kExitOk : kExitInvariantViolation;
}

int check_operators_command(std::uint64_t seed, std::ostream& log) {
  return check_operators_command({EigenProfile::preset(TauPreset::kTau0), EigenProfile::preset(TauPreset::kTauPi4),
                                  EigenProfile::preset(TauPreset::kTauPi2)},
                                 seed, log);
}

int legendre_test_command(const LegendreRequest& request, std::ostream& log) {
  ExperimentConfig config;
  fs::path dir;
  GridField u;
  std::optional<FlowProblem> problem;
  try {
    if (request.out) {
      dir = *request.out;
      config = request.config ? load_config(*request.config) : parse_config(read_text(dir / "config.json"));
    } else if (request.config) {
      config = load_config(*request.config);
      dir = run_directory(config, std::nullopt);
    } else {
      throw ConfigError("legendre-test needs --config or --out");
    }
    if (!fs::is_regular_file(dir / "summary.json")) throw InputError(fmt::format("missing {}", (dir / "summary.json").string()));
    problem.emplace(make_problem(config));
    const fs::path field_path = dir / "final_u.csv";
    u = field_from_rows(*problem, read_final_field(field_path), field_path);
  } catch (const Error& e) {
    fmt::print(log, "error: {}\n", e.what());
    return kExitInvalidConfig;
  }

  const double tol = config.effective_duality_tolerance();
  DualityMetrics metrics{};
  metrics.tolerance = tol;
  try {
    const Discretization dual(problem->target(), config.spacing);
    const GridField u_star = legendre(problem->source(), u, dual.grid(), LegendreMode::kQuadraticRefined);
    const DualityReport duality = duality_residual(problem->source(), u, dual, u_star);

    GridField next = interior_step(u, problem->grid(), problem->profile(),
                                   stable_dt(u, problem->profile(), problem->grid(), config.sigma));
    enforce_boundary(next, problem->source(), problem->target(), config.run_options().boundary);
    const GridField u_star_next = legendre(problem->source(), next, dual.grid(), LegendreMode::kQuadraticRefined);
    const DualFlowReport flow =
        dual_flow_residual(problem->source(), u, next, dual, u_star, u_star_next, problem->profile());

    metrics.residual = duality.residual;
    metrics.coverage = duality.coverage();
    metrics.flow_residual = flow.residual;
    metrics.identity_residual = flow.identity_residual;
    metrics.pass = duality.matched > 0 && duality.residual <= tol;
  } catch (const Error& e) {
    fmt::print(log, "error: {}\n", e.what());
    metrics.residual = std::numeric_limits<double>::quiet_NaN();
    metrics.pass = false;
  }
  try {
    merge_duality(dir / "summary.json", metrics);
  } catch (const Error& e) {
    fmt::print(log, "error: {}\n", e.what());
    return kExitInvalidConfig;
  }
  fmt::print(log, "{}: duality residual {} (tolerance {}, coverage {}), dual flow residual {}, identity {}\n",
             config.name, format_number(metrics.residual), format_number(tol), format_number(metrics.coverage),
             format_number(metrics.flow_residual), format_number(metrics.identity_residual));
  return metrics.pass ? kExitOk : kExitInvariantViolation;
}

int presets_command(bool run, const std::optional<fs::path>& out, int jobs, std::optional<std::uint64_t> seed,
                    std::ostream& log) {
  const std::vector<std::string> names = preset_names();
  if (!run) {
    for (const auto& name : names) {
      const ExperimentConfig c = preset(name);
      fmt::print(log, "{:<28} {:<8} {} -> {}, {}\n", name, to_string(c.tau), describe(c.source), describe(c.target),
                 c.initial.kind);
    }
    return kExitOk;
  }
  const fs::path root = out.value_or("runs");
  std::vector<int> codes(names.size(), kExitOk);
  std::vector<std::string> logs(names.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < names.size(); k = next++) {
      std::ostringstream buffer;
      codes[k] = run_command({names[k], root / names[k], seed}, buffer);
      logs[k] = buffer.str();
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(names.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  int worst = kExitOk;
  for (std::size_t k = 0; k < names.size(); ++k) {
    log << logs[k];
    worst = std::max(worst, codes[k]);
  }
  return worst;
}

}  // namespace sbvflow
