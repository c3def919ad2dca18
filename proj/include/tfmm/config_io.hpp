#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tfmm/bench.hpp"

namespace tfmm {

inline constexpr const char* kConfigSchema = "tfmm-config/1";

namespace detail {

using nlohmann::json;

inline json matrix_to_json(const MatrixX<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixX<double> matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("config: expected matrix");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  MatrixX<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[i].size()) != cols)
      throw std::invalid_argument("config: ragged matrix");
    for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline json vector_to_json(const VectorX<double>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline VectorX<double> vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("config: expected vector");
  VectorX<double> v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::json model_to_json(const StateSpaceModel<double>& m) {
  using namespace detail;
  return {{"A", matrix_to_json(m.A)},       {"C", matrix_to_json(m.C)},
          {"Q", matrix_to_json(m.Q)},       {"sigma", vector_to_json(m.sigma)},
          {"nu", vector_to_json(m.nu)},     {"x0_mean", vector_to_json(m.x0_mean)},
          {"P0", matrix_to_json(m.P0)}};
}

inline StateSpaceModel<double> model_from_json(const nlohmann::json& j) {
  using namespace detail;
  StateSpaceModel<double> m;
  m.A = matrix_from_json(j.at("A"));
  m.C = matrix_from_json(j.at("C"));
  m.Q = matrix_from_json(j.at("Q"));
  m.sigma = vector_from_json(j.at("sigma"));
  m.nu = vector_from_json(j.at("nu"));
  m.x0_mean = vector_from_json(j.at("x0_mean"));
  m.P0 = matrix_from_json(j.at("P0"));
  m.validate();
  return m;
}

inline nlohmann::json noise_to_json(const MeasurementNoiseSpec<double>& n) {
  using namespace detail;
  if (n.kind == NoiseKind::StudentT)
    return {{"kind", "student_t"}, {"sigma", vector_to_json(n.sigma)},
            {"nu", vector_to_json(n.nu)}};
  return {{"kind", "contaminated_gaussian"},
          {"p_outlier", vector_to_json(n.p_outlier)},
          {"var_nominal", vector_to_json(n.var_nominal)},
          {"var_outlier", vector_to_json(n.var_outlier)}};
}

inline MeasurementNoiseSpec<double> noise_from_json(const nlohmann::json& j) {
  using namespace detail;
  const std::string kind = j.at("kind").get<std::string>();
  MeasurementNoiseSpec<double> n;
  if (kind == "student_t") {
    n = MeasurementNoiseSpec<double>::student_t(vector_from_json(j.at("sigma")),
                                                vector_from_json(j.at("nu")));
  } else if (kind == "contaminated_gaussian") {
    n = MeasurementNoiseSpec<double>::contaminated_gaussian(
        vector_from_json(j.at("p_outlier")), vector_from_json(j.at("var_nominal")),
        vector_from_json(j.at("var_outlier")));
  } else {
    throw std::invalid_argument("config: unknown noise kind '" + kind + "'");
  }
  n.validate();
  return n;
}

inline nlohmann::json constraint_to_json(const Constraint<double>& c) {
  using namespace detail;
  nlohmann::json j;
  switch (c.kind) {
    case ConstraintKind::LinearEq:
      j = {{"kind", "linear_eq"}, {"a", vector_to_json(c.q)}, {"b", -c.r}};
      break;
    case ConstraintKind::LinearIneq:
      j = {{"kind", "linear_ineq"}, {"a", vector_to_json(c.q)}, {"b", -c.r}};
      break;
    case ConstraintKind::ConvexQuad:
      j = {{"kind", "convex_quad"}, {"M", matrix_to_json(c.M)}, {"q", vector_to_json(c.q)},
           {"r", c.r}};
      break;
    case ConstraintKind::AnnulusOuter:
    case ConstraintKind::AnnulusInner: {
      nlohmann::json idx = nlohmann::json::array();
      for (Index i : c.indices) idx.push_back(i);
      j = {{"kind", c.kind == ConstraintKind::AnnulusOuter ? "annulus_outer" : "annulus_inner"},
           {"radius", c.radius},
           {"epsilon", c.epsilon},
           {"indices", std::move(idx)}};
      break;
    }
    case ConstraintKind::IndefQuad:
      j = {{"kind", "indef_quad"}, {"D", matrix_to_json(c.M)}};
      break;
  }
  return j;
}

inline Constraint<double> constraint_from_json(const nlohmann::json& j, Index state_dim) {
  using namespace detail;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear_eq")
    return Constraint<double>::linear_eq(vector_from_json(j.at("a")), j.at("b").get<double>());
  if (kind == "linear_ineq")
    return Constraint<double>::linear_ineq(vector_from_json(j.at("a")), j.at("b").get<double>());
  if (kind == "convex_quad")
    return Constraint<double>::convex_quad(matrix_from_json(j.at("M")),
                                           vector_from_json(j.at("q")), j.at("r").get<double>());
  if (kind == "annulus_outer" || kind == "annulus_inner") {
    std::vector<Index> idx;
    for (const auto& v : j.at("indices")) idx.push_back(v.get<Index>());
    const double radius = j.at("radius").get<double>();
    const double epsilon = j.at("epsilon").get<double>();
    return kind == "annulus_outer"
               ? Constraint<double>::annulus_outer(radius, epsilon, std::move(idx), state_dim)
               : Constraint<double>::annulus_inner(radius, epsilon, std::move(idx), state_dim);
  }
  if (kind == "indef_quad") return Constraint<double>::indef_quad(matrix_from_json(j.at("D")));
  throw std::invalid_argument("config: unknown constraint kind '" + kind + "'");
}

namespace detail {

inline std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Exp1Rotation: return "exp1";
    case Scenario::Exp2CircularRoad: return "exp2";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

inline std::string truth_name(TruthMode t) {
  switch (t) {
    case TruthMode::Model: return "model";
    case TruthMode::Circle: return "circle";
    case TruthMode::CircleReprojected: return "circle_reprojected";
  }
  return "model";
}

inline std::string method_name(FilterMethod m) {
  switch (m) {
    case FilterMethod::Tfmm: return "tfmm";
    case FilterMethod::Kf: return "kf";
    case FilterMethod::Pf: return "pf";
    case FilterMethod::Projection: return "projection";
  }
  return "tfmm";
}

}  // namespace detail

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  using namespace detail;
  nlohmann::json j;
  j["schema"] = kConfigSchema;
  j["scenario"] = scenario_name(spec.scenario);
  j["model"] = model_to_json(spec.model);
  j["noise"] = noise_to_json(spec.noise);
  j["constraints"] = nlohmann::json::array();
  for (const auto& c : spec.constraints) j["constraints"].push_back(constraint_to_json(c));
  j["filters"] = nlohmann::json::array();
  for (const auto& f : spec.filters) {
    nlohmann::json jf = {{"name", f.name}, {"method", method_name(f.method)}};
    if (f.method == FilterMethod::Tfmm) {
      jf["surrogate"] = f.surrogate == SurrogateKind::Log ? "log" : "smooth";
      jf["constrained"] = f.constrained;
    }
    if (f.method == FilterMethod::Pf) jf["particles"] = f.particles;
    j["filters"].push_back(std::move(jf));
  }
  j["steps"] = spec.steps;
  j["runs"] = spec.runs;
  j["base_seed"] = spec.base_seed;
  nlohmann::json truth = {{"mode", truth_name(spec.truth_mode)}};
  if (spec.truth_mode != TruthMode::Model) {
    truth["radius"] = spec.circle_radius;
    truth["speed"] = spec.circle_speed;
  }
  j["truth"] = std::move(truth);
  nlohmann::json panels;
  panels["position_indices"] = nlohmann::json::array();
  for (Index i : spec.position_indices) panels["position_indices"].push_back(i);
  panels["velocity_indices"] = nlohmann::json::array();
  for (Index i : spec.velocity_indices) panels["velocity_indices"].push_back(i);
  j["rmse"] = std::move(panels);
  j["mm"] = {{"tol", spec.mm_tol},
             {"max_iter", spec.mm_max_iter},
             {"r_variant", spec.r_variant == RVariant::LogRatio ? "log_ratio" : "inverse_weight"}};
  return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  using namespace detail;
  if (j.value("schema", "") != kConfigSchema)
    throw std::invalid_argument("config: missing or unsupported schema tag");
  ExperimentSpec spec;
  const std::string scenario = j.value("scenario", "custom");
  if (scenario == "exp1") spec.scenario = Scenario::Exp1Rotation;
  else if (scenario == "exp2") spec.scenario = Scenario::Exp2CircularRoad;
  else if (scenario == "custom") spec.scenario = Scenario::Custom;
  else throw std::invalid_argument("config: unknown scenario '" + scenario + "'");

  spec.model = model_from_json(j.at("model"));
  spec.noise = noise_from_json(j.at("noise"));
  if (j.contains("constraints"))
    for (const auto& jc : j.at("constraints"))
      spec.constraints.push_back(constraint_from_json(jc, spec.model.state_dim()));

  for (const auto& jf : j.at("filters")) {
    FilterUnderTest f;
    f.name = jf.at("name").get<std::string>();
    const std::string method = jf.at("method").get<std::string>();
    if (method == "tfmm") f.method = FilterMethod::Tfmm;
    else if (method == "kf") f.method = FilterMethod::Kf;
    else if (method == "pf") f.method = FilterMethod::Pf;
    else if (method == "projection") f.method = FilterMethod::Projection;
    else throw std::invalid_argument("config: unknown filter method '" + method + "'");
    if (f.method == FilterMethod::Tfmm) {
      const std::string surrogate = jf.value("surrogate", "log");
      if (surrogate == "log") f.surrogate = SurrogateKind::Log;
      else if (surrogate == "smooth") f.surrogate = SurrogateKind::Smooth;
      else throw std::invalid_argument("config: unknown surrogate '" + surrogate + "'");
      f.constrained = jf.value("constrained", false);
    }
    if (f.method == FilterMethod::Pf) f.particles = jf.value("particles", 10000);
    spec.filters.push_back(std::move(f));
  }

  spec.steps = j.at("steps").get<int>();
  spec.runs = j.at("runs").get<int>();
  spec.base_seed = j.value("base_seed", std::uint64_t{12345});

  if (j.contains("truth")) {
    const auto& jt = j.at("truth");
    const std::string mode = jt.value("mode", "model");
    if (mode == "model") spec.truth_mode = TruthMode::Model;
    else if (mode == "circle") spec.truth_mode = TruthMode::Circle;
    else if (mode == "circle_reprojected") spec.truth_mode = TruthMode::CircleReprojected;
    else throw std::invalid_argument("config: unknown truth mode '" + mode + "'");
    spec.circle_radius = jt.value("radius", 0.0);
    spec.circle_speed = jt.value("speed", 0.0);
  }
  if (j.contains("rmse")) {
    for (const auto& v : j.at("rmse").value("position_indices", nlohmann::json::array()))
      spec.position_indices.push_back(v.get<Index>());
    for (const auto& v : j.at("rmse").value("velocity_indices", nlohmann::json::array()))
      spec.velocity_indices.push_back(v.get<Index>());
  }
  if (j.contains("mm")) {
    const auto& jm = j.at("mm");
    spec.mm_tol = jm.value("tol", 1e-6);
    spec.mm_max_iter = jm.value("max_iter", 50);
    const std::string rv = jm.value("r_variant", "log_ratio");
    if (rv == "log_ratio") spec.r_variant = RVariant::LogRatio;
    else if (rv == "inverse_weight") spec.r_variant = RVariant::InverseWeight;
    else throw std::invalid_argument("config: unknown r_variant '" + rv + "'");
  }
  spec.validate();
  return spec;
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return spec_from_json(j);
}

inline void save_spec(const ExperimentSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("config: cannot write '" + path + "'");
  out << spec_to_json(spec).dump(2) << "\n";
}

}  // namespace tfmm
