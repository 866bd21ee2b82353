#include "sbvflow/experiment.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <fmt/core.h>
#include <json.hpp>

#include "sbvflow/errors.hpp"

namespace sbvflow {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigError(fmt::format("{}: unknown key '{}'", where, item.key()));
  }
}

double number(const json& v, std::string_view key) {
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

long integer(const json& v, std::string_view key) {
  if (!v.is_number_integer()) throw ConfigError(fmt::format("'{}' must be an integer", key));
  return v.get<long>();
}

std::string text(const json& v, std::string_view key) {
  if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", key));
  return v.get<std::string>();
}

Vec2 pair(const json& v, std::string_view key) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(fmt::format("'{}' must be a pair of numbers", key));
  return Vec2(number(v[0], key), number(v[1], key));
}

EllipseParams parse_ellipse(const json& obj, std::string_view where, bool weighted, double* weight) {
  if (weighted) {
    reject_unknown(obj, where, {"weight", "semi_axes", "center", "angle"});
  } else {
    reject_unknown(obj, where, {"kind", "semi_axes", "center", "angle"});
  }
  EllipseParams e;
  if (!obj.contains("semi_axes")) throw ConfigError(fmt::format("{}: missing 'semi_axes'", where));
  const Vec2 axes = pair(obj["semi_axes"], "semi_axes");
  e.a = axes.x();
  e.b = axes.y();
  if (obj.contains("center")) e.center = pair(obj["center"], "center");
  if (obj.contains("angle")) e.angle = number(obj["angle"], "angle");
  if (weighted) *weight = obj.contains("weight") ? number(obj["weight"], "weight") : 1.0;
  return e;
}

DomainSpec parse_domain(const json& obj, std::string_view where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  DomainSpec spec;
  spec.kind = obj.contains("kind") ? text(obj["kind"], "kind") : "ellipse";
  if (spec.kind == "ellipse") {
    spec.terms = {{1.0, parse_ellipse(obj, where, false, nullptr)}};
  } else if (spec.kind == "blend") {
    reject_unknown(obj, where, {"kind", "terms"});
    if (!obj.contains("terms") || !obj["terms"].is_array() || obj["terms"].empty())
      throw ConfigError(fmt::format("{}: blend needs a non-empty 'terms' array", where));
    spec.terms.clear();
    for (const auto& t : obj["terms"]) {
      DomainSpec::Term term;
      term.ellipse = parse_ellipse(t, fmt::format("{}.terms", where), true, &term.weight);
      spec.terms.push_back(term);
    }
  } else {
    throw ConfigError(fmt::format("{}: unknown domain kind '{}'", where, spec.kind));
  }
  return spec;
}

json ellipse_json(const EllipseParams& e) {
  return json{{"semi_axes", {e.a, e.b}}, {"center", {e.center.x(), e.center.y()}}, {"angle", e.angle}};
}

json domain_json(const DomainSpec& spec) {
  if (spec.kind == "ellipse") {
    json out = ellipse_json(spec.terms.front().ellipse);
    out["kind"] = "ellipse";
    return out;
  }
  json terms = json::array();
  for (const auto& t : spec.terms) {
    json e = ellipse_json(t.ellipse);
    e["weight"] = t.weight;
    terms.push_back(e);
  }
  return json{{"kind", spec.kind}, {"terms", terms}};
}

std::string_view stencil_name(BoundaryStencilKind kind) {
  return kind == BoundaryStencilKind::kTwoPoint ? "two-point" : "quadratic-fit";
}

Mat2 sym_sqrt(const Mat2& m) {
  const Spectral2 s = eigen_sym(Mat2(0.5 * (m + m.transpose())));
  return s.vectors * s.values.cwiseSqrt().asDiagonal() * s.vectors.transpose();
}

struct PresetShape {
  std::string_view suffix;
  DomainSpec source;
  DomainSpec target;
  InitialSpec initial;
};

std::vector<PresetShape> preset_shapes() {
  const double tilt = std::numbers::pi / 6.0;
  DomainSpec blend;
  blend.kind = "blend";
  blend.terms = {{0.5, {1.2, 0.9, Vec2::Zero(), tilt}}, {0.5, {1.1, 1.0, Vec2(0.1, 0.0), 0.0}}};
  return {
      {"disk", DomainSpec::ellipse(1.0, 1.0), DomainSpec::ellipse(1.0, 1.0), {"quadratic", 0.0, 1.0, 0.0}},
      {"disk-scaled", DomainSpec::ellipse(1.0, 1.0), DomainSpec::ellipse(2.0, 2.0), {"quadratic", 0.0, 1.0, 0.0}},
      {"disk-ellipse", DomainSpec::ellipse(1.0, 1.0), DomainSpec::ellipse(1.3, 0.8),
       {"quadratic-perturbed", 0.05, 1.0, 0.0}},
      {"ellipse", DomainSpec::ellipse(1.0, 0.75),
       DomainSpec::ellipse(1.2, 0.9, Vec2(0.1, -0.05), tilt), {"quadratic", 0.0, 1.0, 0.0}},
      {"blend", DomainSpec::ellipse(1.0, 0.75), blend, {"quadratic-perturbed", 0.03, 1.0, 0.0}},
  };
}

constexpr std::array<std::pair<std::string_view, TauPreset>, 3> kFamilies{{
    {"ma-urbas", TauPreset::kTau0},
    {"warren-pi4", TauPreset::kTauPi4},
    {"brendle-warren", TauPreset::kTauPi2},
}};

}  // namespace

DomainSpec DomainSpec::ellipse(double a, double b, Vec2 center, double angle) {
  DomainSpec spec;
  spec.terms = {{1.0, {a, b, center, angle}}};
  return spec;
}

ConvexDomain DomainSpec::build() const {
  if (kind == "ellipse") {
    if (terms.size() != 1) throw ConfigError("ellipse domain needs exactly one term");
    return make_ellipse(terms.front().ellipse);
  }
  if (kind == "blend") {
    std::vector<BlendTerm> parts;
    for (const auto& t : terms) parts.push_back({t.weight, make_ellipse(t.ellipse)});
    return make_blend(parts);
  }
  throw ConfigError(fmt::format("unknown domain kind '{}'", kind));
}

void ExperimentConfig::validate() const {
  auto positive = [](double v, std::string_view key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("'{}' must be positive, got {}", key, v));
  };
  positive(spacing, "spacing");
  positive(sigma, "sigma");
  positive(t_max, "t_max");
  positive(convergence_tolerance, "convergence_tolerance");
  positive(boundary_tolerance, "boundary_tolerance");
  if (max_steps <= 0) throw ConfigError("'max_steps' must be positive");
  if (burn_in_steps < 0) throw ConfigError("'burn_in_steps' must be non-negative");
  if (record_interval <= 0) throw ConfigError("'record_interval' must be positive");
  if (duality_tolerance == 0.0) throw ConfigError("'duality_tolerance' must be positive");
  if (initial.kind != "quadratic" && initial.kind != "quadratic-perturbed")
    throw ConfigError(fmt::format("unknown initial data '{}'", initial.kind));
  if (!std::isfinite(initial.amplitude) || !std::isfinite(initial.offset) || !(initial.scale > 0.0))
    throw ConfigError("initial data parameters must be finite with positive scale");
}

RunOptions ExperimentConfig::run_options() const {
  RunOptions o;
  o.spacing = spacing;
  o.sigma = sigma;
  o.t_max = t_max;
  o.max_steps = max_steps;
  o.convergence_tolerance = convergence_tolerance;
  o.boundary.tolerance = boundary_tolerance;
  o.burn_in_steps = burn_in_steps;
  o.record_interval = record_interval;
  o.stencil = stencil;
  return o;
}

double ExperimentConfig::effective_duality_tolerance() const {
  return duality_tolerance > 0.0 ? duality_tolerance : 20.0 * spacing * spacing;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON: {}", e.what()));
  }
  reject_unknown(doc, "config",
                 {"name", "source", "target", "tau", "spacing", "sigma", "t_max", "max_steps",
                  "convergence_tolerance", "boundary_tolerance", "burn_in_steps", "record_interval", "output_dir",
                  "initial", "seed", "boundary_stencil", "duality_tolerance"});
  ExperimentConfig c;
  if (doc.contains("name")) c.name = text(doc["name"], "name");
  if (!doc.contains("source") || !doc.contains("target")) throw ConfigError("config needs 'source' and 'target'");
  c.source = parse_domain(doc["source"], "source");
  c.target = parse_domain(doc["target"], "target");
  if (doc.contains("tau")) {
    try {
      c.tau = parse_tau_preset(text(doc["tau"], "tau"));
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  if (doc.contains("spacing")) c.spacing = number(doc["spacing"], "spacing");
  if (doc.contains("sigma")) c.sigma = number(doc["sigma"], "sigma");
  if (doc.contains("t_max")) c.t_max = number(doc["t_max"], "t_max");
  if (doc.contains("max_steps")) c.max_steps = integer(doc["max_steps"], "max_steps");
  if (doc.contains("convergence_tolerance"))
    c.convergence_tolerance = number(doc["convergence_tolerance"], "convergence_tolerance");
  if (doc.contains("boundary_tolerance"))
    c.boundary_tolerance = number(doc["boundary_tolerance"], "boundary_tolerance");
  if (doc.contains("burn_in_steps")) c.burn_in_steps = static_cast<int>(integer(doc["burn_in_steps"], "burn_in_steps"));
  if (doc.contains("record_interval"))
    c.record_interval = static_cast<int>(integer(doc["record_interval"], "record_interval"));
  if (doc.contains("output_dir")) c.output_dir = text(doc["output_dir"], "output_dir");
  if (doc.contains("initial")) {
    const json& init = doc["initial"];
    reject_unknown(init, "initial", {"kind", "amplitude", "scale", "offset"});
    if (init.contains("kind")) c.initial.kind = text(init["kind"], "kind");
    if (init.contains("amplitude")) c.initial.amplitude = number(init["amplitude"], "amplitude");
    if (init.contains("scale")) c.initial.scale = number(init["scale"], "scale");
    if (init.contains("offset")) c.initial.offset = number(init["offset"], "offset");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("boundary_stencil")) {
    const std::string s = text(doc["boundary_stencil"], "boundary_stencil");
    if (s == "quadratic-fit") {
      c.stencil = BoundaryStencilKind::kQuadraticFit;
    } else if (s == "two-point") {
      c.stencil = BoundaryStencilKind::kTwoPoint;
    } else {
      throw ConfigError(fmt::format("unknown boundary stencil '{}'", s));
    }
  }
  if (doc.contains("duality_tolerance")) c.duality_tolerance = number(doc["duality_tolerance"], "duality_tolerance");
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc{
      {"name", c.name},
      {"source", domain_json(c.source)},
      {"target", domain_json(c.target)},
      {"tau", std::string(to_string(c.tau))},
      {"spacing", c.spacing},
      {"sigma", c.sigma},
      {"t_max", c.t_max},
      {"max_steps", c.max_steps},
      {"convergence_tolerance", c.convergence_tolerance},
      {"boundary_tolerance", c.boundary_tolerance},
      {"burn_in_steps", c.burn_in_steps},
      {"record_interval", c.record_interval},
      {"output_dir", c.output_dir},
      {"initial",
       {{"kind", c.initial.kind}, {"amplitude", c.initial.amplitude}, {"scale", c.initial.scale},
        {"offset", c.initial.offset}}},
      {"seed", c.seed},
      {"boundary_stencil", std::string(stencil_name(c.stencil))},
  };
  if (c.duality_tolerance > 0.0) doc["duality_tolerance"] = c.duality_tolerance;
  return doc.dump(2) + "\n";
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [family, tau] : kFamilies)
    for (const auto& shape : preset_shapes()) names.push_back(fmt::format("{}-{}", family, shape.suffix));
  return names;
}

bool is_preset(std::string_view name) {
  for (const auto& n : preset_names())
    if (n == name) return true;
  return false;
}

ExperimentConfig preset(std::string_view name) {
  for (const auto& [family, tau] : kFamilies) {
    for (const auto& shape : preset_shapes()) {
      if (fmt::format("{}-{}", family, shape.suffix) != name) continue;
      ExperimentConfig c;
      c.name = std::string(name);
      c.source = shape.source;
      c.target = shape.target;
      c.tau = tau;
      c.initial = shape.initial;
      c.output_dir = fmt::format("runs/{}", name);
      return c;
    }
  }
  throw ConfigError(fmt::format("unknown preset '{}'", name));
}

AffineMap transport_map(const ConvexDomain& source, const ConvexDomain& target) {
  if (!source.quadric() || !target.quadric())
    throw ConfigError("quadratic initial data needs quadric source and target domains");
  const Mat2 ps = source.quadric()->shape();
  const Mat2 pt = target.quadric()->shape();
  const Mat2 pt_half = sym_sqrt(pt);
  const Mat2 pt_half_inv = pt_half.inverse();
  Mat2 a = pt_half_inv * sym_sqrt(pt_half * ps * pt_half) * pt_half_inv;
  a = 0.5 * (a + a.transpose());
  // Du(x) = A (x - c_s) + c_t
  return {a, target.quadric()->center - a * source.quadric()->center};
}

GridField initial_field(const ExperimentConfig& config, const FlowProblem& problem) {
  const AffineMap map = transport_map(problem.source().domain(), problem.target());
  const InitialSpec& init = config.initial;
  Vec2 tilt = Vec2::Zero();
  double amplitude = 0.0;
  if (init.kind == "quadratic-perturbed") {
    std::mt19937_64 gen(config.seed);
    auto unit = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    tilt = Vec2(unit() - 0.5, unit() - 0.5);
    amplitude = init.amplitude;
  }
  const ConvexDomain& source = problem.source().domain();
  const Vec2 c_s = source.quadric() ? source.quadric()->center : Vec2::Zero();
  return problem.sample([&](const Vec2& x) {
    const double quad = 0.5 * x.dot(map.matrix * x) + map.shift.dot(x);
    const double hs = source.h(x);
    return init.scale * quad + amplitude * hs * hs * (1.0 + tilt.dot(x - c_s)) + init.offset;
  });
}

FlowProblem make_problem(const ExperimentConfig& config) {
  config.validate();
  return FlowProblem(config.source.build(), config.target.build(), EigenProfile::preset(config.tau), config.spacing,
                     config.stencil);
}

ExperimentRun run_experiment(const ExperimentConfig& config, const StepObserver& observer) {
  FlowProblem problem = make_problem(config);
  const GridField u0 = initial_field(config, problem);
  FlowResult result = run_flow(problem, u0, config.run_options(), observer);
  return {config, std::move(problem), std::move(result)};
}

}  // namespace sbvflow
