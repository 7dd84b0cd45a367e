#include "safetube/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "safetube/builtin.hpp"
#include "safetube/errors.hpp"

namespace safetube {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw UsageError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw UsageError(where + ": must be finite");
  return v;
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? get_number(j.at(key), where + "." + key) : fallback;
}

Vec get_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw UsageError(where + ": expected a list of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = get_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

SafeSet parse_safe_set(const json& j, const std::string& where) {
  require_keys(j, where, {"kind", "center", "half_widths", "radius"});
  const std::string kind = j.value("kind", "");
  const Vec c = get_vec(j.at("center"), where + ".center");
  try {
    if (kind == "box") return SafeSet::box(c, get_vec(j.at("half_widths"), where + ".half_widths"));
    if (kind == "ball") return SafeSet::ball(c, get_number(j.at("radius"), where + ".radius"));
  } catch (const json::exception& e) {
    throw UsageError(where + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw UsageError(where + ": " + e.what());
  }
  throw UsageError(where + ".kind: expected 'box' or 'ball'");
}

json safe_set_json(const SafeSet& s) {
  json j;
  j["center"] = vec_json(s.center());
  if (s.kind() == SafeSet::Kind::Box) {
    j["kind"] = "box";
    j["half_widths"] = vec_json(s.half_widths());
  } else {
    j["kind"] = "ball";
    j["radius"] = s.radius();
  }
  return j;
}

const std::vector<std::pair<const char*, std::optional<double> AssumptionBounds::*>>& bound_fields() {
  static const std::vector<std::pair<const char*, std::optional<double> AssumptionBounds::*>> fields = {
      {"delta_f", &AssumptionBounds::delta_f},
      {"delta_fx", &AssumptionBounds::delta_fx},
      {"delta_B", &AssumptionBounds::delta_B},
      {"delta_Bx", &AssumptionBounds::delta_Bx},
      {"delta_bx", &AssumptionBounds::delta_bx},
      {"delta_h", &AssumptionBounds::delta_h},
      {"delta_hx", &AssumptionBounds::delta_hx},
      {"delta_ht", &AssumptionBounds::delta_ht},
      {"delta_B_pinv", &AssumptionBounds::delta_B_pinv},
      {"delta_B_pinv_x", &AssumptionBounds::delta_B_pinv_x},
      {"delta_ustar", &AssumptionBounds::delta_ustar},
  };
  return fields;
}

Mat diag_or(const Vec& d, int n, double fallback) {
  if (d.size() == 0) return fallback * Mat::Identity(n, n);
  if (d.size() != n) throw UsageError("diagonal has the wrong length");
  return d.asDiagonal();
}

DynamicsModel model_from_spec(const ModelSpec& spec) {
  DynamicsModel m;
  m.name = "inline";
  m.n = spec.n;
  m.m = spec.m;
  const auto f = spec.f;
  std::vector<std::vector<Polynomial>> jac(spec.n);
  for (int i = 0; i < spec.n; ++i)
    for (int k = 0; k < spec.n; ++k) jac[i].push_back(f[i].partial(k));
  m.f = [f](const Vec& x) {
    Vec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out(i) = f[i](x);
    return out;
  };
  m.jac_f = [jac](const Vec& x) {
    const int n = static_cast<int>(jac.size());
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) a(i, k) = jac[i][k](x);
    return a;
  };
  const PolyMatrix b = spec.B;
  std::vector<PolyMatrix> db;
  for (int k = 0; k < spec.n; ++k) db.push_back(b.partial(k));
  m.B = [b](const Vec& x) { return b(x); };
  m.dB = [db](const Vec& x) {
    std::vector<Mat> out;
    for (const auto& d : db) out.push_back(d(x));
    return out;
  };
  if (spec.uncertainty) {
    const UncertaintySpec u = *spec.uncertainty;
    m.h = [u](double t, const Vec& x) {
      const int mm = static_cast<int>(u.state.size());
      Vec out(mm);
      const double nx = x.norm();
      for (int j = 0; j < mm; ++j) {
        double v = u.state[j](x) + u.norm_gain[j] * nx;
        for (const auto& s : u.sinusoids[j]) v += s[0] * std::sin(s[1] * t + s[2]);
        out(j) = v;
      }
      return out;
    };
  }
  return m;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  require_keys(j, "scenario", {"schema_version", "name", "model", "metric", "bounds", "safe_set", "initial_state",
                               "desired", "tube", "l1", "sim", "sampling", "obstacles", "outputs"});
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kScenarioSchemaVersion) {
    throw UsageError("scenario.schema_version: expected " + std::to_string(kScenarioSchemaVersion));
  }
  Scenario s;
  s.name = j.value("name", "");

  if (!j.contains("model")) throw UsageError("scenario.model: missing");
  const json& jm = j.at("model");
  require_keys(jm, "model", {"builtin", "n", "m", "f", "B", "uncertainty"});
  int n = 0;
  if (jm.contains("builtin")) {
    if (!jm.at("builtin").is_string()) throw UsageError("model.builtin: expected a string");
    s.model.builtin = jm.at("builtin").get<std::string>();
    if (*s.model.builtin != "ex1" && *s.model.builtin != "ex2") {
      throw UsageError("model.builtin: unknown example '" + *s.model.builtin + "'");
    }
    n = *s.model.builtin == "ex1" ? 3 : 2;
  } else {
    for (const char* key : {"n", "m", "f", "B"})
      if (!jm.contains(key)) throw UsageError(std::string("model.") + key + ": missing");
    if (!jm.at("n").is_number_integer() || !jm.at("m").is_number_integer()) {
      throw UsageError("model.n/model.m: expected integers");
    }
    s.model.n = n = jm.at("n").get<int>();
    s.model.m = jm.at("m").get<int>();
    if (n <= 0 || s.model.m <= 0) throw UsageError("model.n/model.m: must be positive");
    if (!jm.at("f").is_array() || static_cast<int>(jm.at("f").size()) != n) {
      throw UsageError("model.f: expected n polynomials");
    }
    for (const auto& p : jm.at("f")) s.model.f.push_back(Polynomial::from_json(p, n));
    s.model.B = PolyMatrix::from_json(jm.at("B"), n);
    if (s.model.B.rows() != n || s.model.B.cols() != s.model.m) throw UsageError("model.B: expected n x m");
    if (jm.contains("uncertainty")) {
      const json& ju = jm.at("uncertainty");
      require_keys(ju, "model.uncertainty", {"state", "norm_gain", "sinusoids"});
      UncertaintySpec u;
      const int m = s.model.m;
      u.state.assign(m, Polynomial(n));
      u.norm_gain.assign(m, 0.0);
      u.sinusoids.assign(m, {});
      if (ju.contains("state")) {
        if (!ju.at("state").is_array() || static_cast<int>(ju.at("state").size()) != m)
          throw UsageError("model.uncertainty.state: expected m polynomials");
        for (int k = 0; k < m; ++k) u.state[k] = Polynomial::from_json(ju.at("state")[k], n);
      }
      if (ju.contains("norm_gain")) {
        const Vec g = get_vec(ju.at("norm_gain"), "model.uncertainty.norm_gain");
        if (g.size() != m) throw UsageError("model.uncertainty.norm_gain: expected m entries");
        for (int k = 0; k < m; ++k) u.norm_gain[k] = g(k);
      }
      if (ju.contains("sinusoids")) {
        const json& js = ju.at("sinusoids");
        if (!js.is_array() || static_cast<int>(js.size()) != m)
          throw UsageError("model.uncertainty.sinusoids: expected one list per input");
        for (int k = 0; k < m; ++k) {
          for (const auto& term : js[k]) {
            const Vec t = get_vec(term, "model.uncertainty.sinusoids");
            if (t.size() != 3) throw UsageError("model.uncertainty.sinusoids: expected [amplitude, frequency, phase]");
            u.sinusoids[k].push_back({t(0), t(1), t(2)});
          }
        }
      }
      s.model.uncertainty = u;
    }
  }

  if (j.contains("metric")) {
    const json& jw = j.at("metric");
    require_keys(jw, "metric", {"dual", "lambda", "alpha_lower", "alpha_upper"});
    MetricSpec ms;
    ms.dual = PolyMatrix::from_json(jw.at("dual"), n);
    if (ms.dual.rows() != n || ms.dual.cols() != n) throw UsageError("metric.dual: expected n x n");
    ms.lambda = get_number(jw.at("lambda"), "metric.lambda");
    ms.alpha_lower = get_number(jw.at("alpha_lower"), "metric.alpha_lower");
    ms.alpha_upper = get_number(jw.at("alpha_upper"), "metric.alpha_upper");
    s.metric = ms;
  } else if (!s.model.builtin) {
    throw UsageError("metric: required for inline models");
  }

  if (j.contains("bounds")) {
    const json& jb = j.at("bounds");
    std::set<std::string> names;
    for (const auto& [name, _] : bound_fields()) names.insert(name);
    require_keys(jb, "bounds", names);
    for (const auto& [name, member] : bound_fields())
      if (jb.contains(name)) s.bounds.*member = get_number(jb.at(name), std::string("bounds.") + name);
    try {
      s.bounds.validate(false);
    } catch (const ContractViolation& e) {
      throw UsageError(std::string("bounds: ") + e.what());
    }
  }

  if (j.contains("safe_set")) s.safe_set = parse_safe_set(j.at("safe_set"), "safe_set");

  if (!j.contains("initial_state")) throw UsageError("initial_state: missing");
  s.initial_state = get_vec(j.at("initial_state"), "initial_state");
  if (s.initial_state.size() != n) throw UsageError("initial_state: expected n entries");

  if (!j.contains("desired")) throw UsageError("desired: missing");
  const json& jd = j.at("desired");
  require_keys(jd, "desired", {"kind", "state", "input", "target", "Q_diag", "R_diag", "Qf_diag", "horizon", "dt"});
  s.desired.kind = jd.value("kind", "constant");
  if (s.desired.kind == "constant") {
    s.desired.state = get_vec(jd.at("state"), "desired.state");
    s.desired.input = get_vec(jd.at("input"), "desired.input");
  } else if (s.desired.kind == "ilqr") {
    s.desired.target = get_vec(jd.at("target"), "desired.target");
    s.desired.Q_diag = get_vec(jd.at("Q_diag"), "desired.Q_diag");
    s.desired.R_diag = get_vec(jd.at("R_diag"), "desired.R_diag");
    s.desired.Qf_diag = get_vec(jd.at("Qf_diag"), "desired.Qf_diag");
    s.desired.horizon = get_number(jd.at("horizon"), "desired.horizon");
    s.desired.dt = get_number(jd.at("dt"), "desired.dt");
  } else {
    throw UsageError("desired.kind: expected 'constant' or 'ilqr'");
  }

  if (j.contains("tube")) {
    const json& jt = j.at("tube");
    require_keys(jt, "tube", {"eps", "rho_a"});
    s.eps = number_or(jt, "eps", s.eps, "tube");
    s.rho_a = number_or(jt, "rho_a", s.rho_a, "tube");
  }
  if (!(s.eps > 0.0) || !(s.rho_a > 0.0)) throw UsageError("tube: eps and rho_a must be positive");

  if (j.contains("l1")) {
    const json& jl = j.at("l1");
    require_keys(jl, "l1", {"omega", "gamma", "A_m_diag", "Q_diag", "eps_proj", "omega_range", "search_margin"});
    auto auto_or_number = [&](const char* key) -> std::optional<double> {
      if (!jl.contains(key)) return std::nullopt;
      if (jl.at(key).is_string()) {
        if (jl.at(key).get<std::string>() != "auto") throw UsageError(std::string("l1.") + key + ": expected a number or \"auto\"");
        return std::nullopt;
      }
      return get_number(jl.at(key), std::string("l1.") + key);
    };
    s.l1.omega = auto_or_number("omega");
    s.l1.gamma = auto_or_number("gamma");
    if (jl.contains("A_m_diag")) s.l1.A_m_diag = get_vec(jl.at("A_m_diag"), "l1.A_m_diag");
    if (jl.contains("Q_diag")) s.l1.Q_diag = get_vec(jl.at("Q_diag"), "l1.Q_diag");
    s.l1.eps_proj = number_or(jl, "eps_proj", s.l1.eps_proj, "l1");
    s.l1.search_margin = number_or(jl, "search_margin", s.l1.search_margin, "l1");
    if (jl.contains("omega_range")) {
      const Vec r = get_vec(jl.at("omega_range"), "l1.omega_range");
      if (r.size() != 2 || !(r(0) > 0.0) || !(r(1) >= r(0))) throw UsageError("l1.omega_range: expected [lo, hi]");
      s.l1.omega_min = r(0);
      s.l1.omega_max = r(1);
    }
  }
  if (!s.l1.omega.has_value() && s.l1.gamma.has_value()) {
    throw UsageError("l1: gamma cannot be fixed while omega is \"auto\"");
  }

  if (j.contains("sim")) {
    const json& js = j.at("sim");
    require_keys(js, "sim", {"dt", "horizon", "geodesic_segments", "seed"});
    s.sim_dt = number_or(js, "dt", s.sim_dt, "sim");
    s.sim_horizon = number_or(js, "horizon", s.sim_horizon, "sim");
    if (js.contains("geodesic_segments")) {
      if (!js.at("geodesic_segments").is_number_integer()) throw UsageError("sim.geodesic_segments: expected an integer");
      s.geodesic_segments = js.at("geodesic_segments").get<int>();
    }
    if (js.contains("seed")) {
      if (!js.at("seed").is_number_unsigned()) throw UsageError("sim.seed: expected an unsigned integer");
      s.seed = js.at("seed").get<std::uint64_t>();
    }
  }
  if (!(s.sim_dt > 0.0) || !(s.sim_horizon >= s.sim_dt)) throw UsageError("sim: need dt > 0 and horizon >= dt");
  if (s.geodesic_segments < 4 || s.geodesic_segments % 2) throw UsageError("sim.geodesic_segments: even and >= 4");

  if (j.contains("sampling")) {
    const json& js = j.at("sampling");
    require_keys(js, "sampling", {"time_points", "ball_points", "inflation", "seed"});
    if (js.contains("time_points")) s.sampling.time_points = js.at("time_points").get<int>();
    if (js.contains("ball_points")) s.sampling.ball_points = js.at("ball_points").get<int>();
    s.sampling.inflation = number_or(js, "inflation", s.sampling.inflation, "sampling");
    if (js.contains("seed")) s.sampling.seed = js.at("seed").get<std::uint64_t>();
  }

  if (j.contains("obstacles")) {
    if (!j.at("obstacles").is_array()) throw UsageError("obstacles: expected a list");
    for (const auto& jo : j.at("obstacles")) {
      require_keys(jo, "obstacles[]", {"vertices"});
      Obstacle o;
      for (const auto& v : jo.at("vertices")) {
        const Vec p = get_vec(v, "obstacles[].vertices");
        if (p.size() != 2) throw UsageError("obstacles[].vertices: expected 2-D points");
        o.vertices.push_back({p(0), p(1)});
      }
      if (o.vertices.size() < 3) throw UsageError("obstacles[]: a polygon needs at least 3 vertices");
      s.obstacles.push_back(std::move(o));
    }
  }

  if (j.contains("outputs")) {
    require_keys(j.at("outputs"), "outputs", {"dir"});
    s.output_dir = j.at("outputs").value("dir", s.output_dir);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError("scenario file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_scenario(j);
  } catch (const json::exception& e) {
    throw UsageError(std::string("scenario schema error: ") + e.what());
  }
}

json to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;

  json jm;
  if (s.model.builtin) {
    jm["builtin"] = *s.model.builtin;
  } else {
    jm["n"] = s.model.n;
    jm["m"] = s.model.m;
    json f = json::array();
    for (const auto& p : s.model.f) f.push_back(p.to_json());
    jm["f"] = f;
    jm["B"] = s.model.B.to_json();
    if (s.model.uncertainty) {
      const auto& u = *s.model.uncertainty;
      json ju;
      json st = json::array();
      for (const auto& p : u.state) st.push_back(p.to_json());
      ju["state"] = st;
      ju["norm_gain"] = u.norm_gain;
      json sn = json::array();
      for (const auto& per : u.sinusoids) {
        json row = json::array();
        for (const auto& t : per) row.push_back({t[0], t[1], t[2]});
        sn.push_back(row);
      }
      ju["sinusoids"] = sn;
      jm["uncertainty"] = ju;
    }
  }
  j["model"] = jm;

  if (s.metric) {
    j["metric"] = {{"dual", s.metric->dual.to_json()},
                   {"lambda", s.metric->lambda},
                   {"alpha_lower", s.metric->alpha_lower},
                   {"alpha_upper", s.metric->alpha_upper}};
  }
  json jb = json::object();
  for (const auto& [name, member] : bound_fields())
    if ((s.bounds.*member).has_value()) jb[name] = *(s.bounds.*member);
  j["bounds"] = jb;
  if (s.safe_set) j["safe_set"] = safe_set_json(*s.safe_set);
  j["initial_state"] = vec_json(s.initial_state);

  json jd;
  jd["kind"] = s.desired.kind;
  if (s.desired.kind == "constant") {
    jd["state"] = vec_json(s.desired.state);
    jd["input"] = vec_json(s.desired.input);
  } else {
    jd["target"] = vec_json(s.desired.target);
    jd["Q_diag"] = vec_json(s.desired.Q_diag);
    jd["R_diag"] = vec_json(s.desired.R_diag);
    jd["Qf_diag"] = vec_json(s.desired.Qf_diag);
    jd["horizon"] = s.desired.horizon;
    jd["dt"] = s.desired.dt;
  }
  j["desired"] = jd;
  j["tube"] = {{"eps", s.eps}, {"rho_a", s.rho_a}};

  json jl;
  jl["omega"] = s.l1.omega ? json(*s.l1.omega) : json("auto");
  jl["gamma"] = s.l1.gamma ? json(*s.l1.gamma) : json("auto");
  if (s.l1.A_m_diag.size()) jl["A_m_diag"] = vec_json(s.l1.A_m_diag);
  if (s.l1.Q_diag.size()) jl["Q_diag"] = vec_json(s.l1.Q_diag);
  jl["eps_proj"] = s.l1.eps_proj;
  jl["omega_range"] = {s.l1.omega_min, s.l1.omega_max};
  jl["search_margin"] = s.l1.search_margin;
  j["l1"] = jl;

  j["sim"] = {{"dt", s.sim_dt}, {"horizon", s.sim_horizon}, {"geodesic_segments", s.geodesic_segments}, {"seed", s.seed}};
  j["sampling"] = {{"time_points", s.sampling.time_points},
                   {"ball_points", s.sampling.ball_points},
                   {"inflation", s.sampling.inflation},
                   {"seed", s.sampling.seed}};
  json jo = json::array();
  for (const auto& o : s.obstacles) {
    json verts = json::array();
    for (const auto& v : o.vertices) verts.push_back({v[0], v[1]});
    jo.push_back({{"vertices", verts}});
  }
  j["obstacles"] = jo;
  j["outputs"] = {{"dir", s.output_dir}};
  return j;
}

std::string canonical_dump(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

Scenario builtin_scenario(const std::string& id) {
  Scenario s;
  s.model.builtin = id;
  if (id == "ex1") {
    s.name = "ex1";
    s.initial_state = Vec(3);
    s.initial_state << 0.01, -0.01, 0.01;
    s.desired.kind = "constant";
    s.desired.state = Vec::Zero(3);
    s.desired.input = Vec::Zero(1);
    s.eps = 0.01;
    s.rho_a = 0.01;
    s.l1.omega = 50.0;
    s.l1.gamma = 5e6;
    s.sim_dt = 1e-4;
    s.sim_horizon = 10.0;
    s.output_dir = "out/ex1";
    return s;
  }
  if (id == "ex2") {
    s.name = "ex2";
    s.initial_state = Vec(2);
    s.initial_state << 3.4, -2.4;
    s.desired.kind = "ilqr";
    s.desired.target = Vec::Zero(2);
    s.desired.Q_diag = Vec::Constant(2, 0.5);
    s.desired.R_diag = Vec::Constant(1, 1.0);
    s.desired.Qf_diag = Vec::Constant(2, 100.0);
    s.desired.horizon = 5.0;
    s.desired.dt = 0.01;
    s.eps = 0.4;
    s.rho_a = 0.1;
    s.l1.omega = 90.0;
    s.l1.gamma = 4e7;
    s.sim_dt = 1e-4;
    s.sim_horizon = 5.0;
    s.obstacles.push_back(Obstacle{{{-1.4, -2.5}, {0.2, -2.5}, {0.2, -0.9}, {-1.4, -0.9}}});
    s.output_dir = "out/ex2";
    return s;
  }
  throw UsageError("unknown builtin example '" + id + "' (expected ex1 or ex2)");
}

ResolvedScenario resolve(const Scenario& s) {
  std::optional<BuiltinExample> ex;
  if (s.model.builtin) ex = builtin_example(*s.model.builtin);

  DynamicsModel model = ex ? ex->model : model_from_spec(s.model);
  std::optional<MetricField> metric;
  if (s.metric) {
    try {
      metric = MetricField::from_polynomial(s.metric->dual, s.metric->lambda, s.metric->alpha_lower,
                                            s.metric->alpha_upper);
    } catch (const ContractViolation& e) {
      throw UsageError(std::string("metric: ") + e.what());
    }
  } else {
    metric = ex->metric;
  }

  AssumptionBounds bounds = ex ? ex->bounds : AssumptionBounds{};
  for (const auto& [name, member] : bound_fields())
    if ((s.bounds.*member).has_value()) bounds.*member = s.bounds.*member;

  const int n = model.n;
  SafeSet safe = s.safe_set ? *s.safe_set : (ex ? ex->safe_set : SafeSet::linf_ball(n, 1e3));
  SafeSet domain = ex && !s.metric ? ex->metric_domain : safe;

  SimConfig sim;
  sim.dt = s.sim_dt;
  sim.horizon = s.sim_horizon;
  sim.geodesic.segments = s.geodesic_segments;
  sim.seed = s.seed;

  DesiredTrajectory desired;
  if (s.desired.kind == "constant") {
    if (s.desired.state.size() != n || s.desired.input.size() != model.m) throw UsageError("desired: wrong dimensions");
    desired = DesiredTrajectory::constant(s.desired.state, s.desired.input, sim.dt, sim.horizon);
  } else {
    IlqrCost cost;
    cost.Q = diag_or(s.desired.Q_diag, n, 1.0);
    cost.R = diag_or(s.desired.R_diag, model.m, 1.0);
    cost.Qf = diag_or(s.desired.Qf_diag, n, 1.0);
    if (s.desired.target.size() != n) throw UsageError("desired.target: wrong dimension");
    const DesiredTrajectory plan = ilqr_plan(model, cost, s.initial_state, s.desired.target, s.desired.horizon,
                                             s.desired.dt);
    try {
      desired = plan.refined(model, sim.dt);
    } catch (const ContractViolation& e) {
      throw UsageError(std::string("sim.dt must divide desired.dt: ") + e.what());
    }
  }

  L1Config l1;
  try {
    l1 = L1Config::make(s.l1.omega.value_or(1.0), s.l1.gamma.value_or(1.0), 1.0, diag_or(s.l1.A_m_diag, n, -10.0),
                        diag_or(s.l1.Q_diag, n, 1.0), s.l1.eps_proj);
  } catch (const ContractViolation& e) {
    throw UsageError(std::string("l1: ") + e.what());
  }

  return ResolvedScenario{std::move(model), std::move(*metric), bounds, safe, domain, std::move(desired),
                          s.initial_state, sim, l1};
}

}  // namespace safetube
