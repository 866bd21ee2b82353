#include "sbvflow/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "sbvflow/errors.hpp"

namespace sbvflow {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

void emit(const ordered_json& j, std::string& out, int depth) {
  const std::string pad(2 * (depth + 1), ' ');
  const std::string close(2 * depth, ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& item : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + ordered_json(item.key()).dump() + ": ";
        emit(item.value(), out, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k > 0) out += ",\n";
        out += pad;
        emit(j[k], out, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case ordered_json::value_t::number_float:
      out += json_number(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

std::string render(const ordered_json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

double parse_double(const std::string& cell, const std::filesystem::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw InputError(fmt::format("{}:{}: malformed number '{}'", path.string(), line, cell));
  }
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << content;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_timeseries(const std::filesystem::path& path, std::span<const DiagnosticsRecord> records) {
  std::string out(kTimeseriesHeader);
  out += "\n";
  for (const auto& r : records) {
    const double row[] = {r.t,        r.udot_min, r.udot_max, r.theta0,      r.theta1,
                          r.lam_min,  r.lam_max,  r.mu1,      r.mu2,         r.obliq_min,
                          r.band_sum_fp, r.band_sum_fpl2, r.stat_residual, r.hausdorff};
    for (std::size_t k = 0; k < std::size(row); ++k) {
      if (k > 0) out += ",";
      out += format_number(row[k]);
    }
    out += "\n";
  }
  write_text(path, out);
}

std::vector<FieldRow> field_rows(const FlowProblem& problem, const GridField& field) {
  const Discretization& disc = problem.source();
  std::vector<FieldRow> rows;
  rows.reserve(disc.grid().active_nodes().size());
  for (int node : disc.grid().active_nodes()) {
    const Vec2 x = disc.grid().coord(node);
    const Vec2 g = disc.gradient(field, node);
    const Mat2 hs = disc.hessian(field, node);
    rows.push_back({x.x(), x.y(), field.values[node], g.x(), g.y(), hs(0, 0), hs(0, 1), hs(1, 1)});
  }
  return rows;
}

void write_final_field(const std::filesystem::path& path, std::span<const FieldRow> rows) {
  std::string out(kFinalFieldHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(r.x1), format_number(r.x2), format_number(r.u),
                       format_number(r.du1), format_number(r.du2), format_number(r.hess11),
                       format_number(r.hess12), format_number(r.hess22));
  }
  write_text(path, out);
}

std::vector<FieldRow> read_final_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("missing {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kFinalFieldHeader)
    throw InputError(fmt::format("{}: unexpected header", path.string()));
  std::vector<FieldRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(parse_double(cell, path, lineno));
    if (cells.size() != 8) throw InputError(fmt::format("{}:{}: expected 8 columns", path.string(), lineno));
    rows.push_back({cells[0], cells[1], cells[2], cells[3], cells[4], cells[5], cells[6], cells[7]});
  }
  if (rows.empty()) throw InputError(fmt::format("{}: no rows", path.string()));
  return rows;
}

std::string summary_json(const std::string& name, const FlowSummary& s, std::span<const SuiteVerdict> checks) {
  ordered_json doc;
  doc["name"] = name;
  doc["c_infty"] = s.c_infty;
  doc["c_infty_crosscheck"] = s.c_infty_crosscheck;
  doc["stat_residual"] = s.stat_residual;
  doc["hausdorff"] = s.hausdorff;
  doc["steps"] = s.steps;
  doc["final_time"] = s.final_time;
  doc["termination"] = std::string(to_string(s.termination));
  doc["message"] = s.message;
  ordered_json verdicts = ordered_json::object();
  for (const auto& c : checks) {
    verdicts[c.name] = ordered_json{{"pass", c.pass},       {"gating", c.gating}, {"value", c.value},
                                    {"threshold", c.threshold}, {"note", c.note}};
  }
  doc["checks"] = verdicts;
  return render(doc);
}

void merge_duality(const std::filesystem::path& path, const DualityMetrics& m) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_text(path));
  } catch (const ordered_json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  doc["duality"] = ordered_json{{"residual", m.residual},
                                {"coverage", m.coverage},
                                {"flow_residual", m.flow_residual},
                                {"identity_residual", m.identity_residual},
                                {"tolerance", m.tolerance},
                                {"pass", m.pass}};
  write_text(path, render(doc));
}

}  // namespace sbvflow
