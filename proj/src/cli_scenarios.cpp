#include "cislunar/cli_scenarios.hpp"

#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#ifndef CISLUNAR_DATA_DIR
#define CISLUNAR_DATA_DIR "data"
#endif

namespace cislunar {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that the
// rest can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidInput("config key '" + where() + "': expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  long integer(const std::string& key, long fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t count,
                              const std::vector<double>& fallback) {
    if (!take(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != count)
      fail(key, "expected an array of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::optional<ObjectReader> object(const std::string& key) {
    if (!take(key)) return std::nullopt;
    return ObjectReader(j_.at(key), path_ + key + ".");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw InvalidInput("config key '" + path_ + key + "': " + why);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw InvalidInput("config key '" + path_ + item.key() + "': unknown key");
  }

 private:
  bool take(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  std::string where() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

bool terrestrial_case(CaseId c) {
  return c == CaseId::GATEWAY_TO_LEO || c == CaseId::LEO_TO_GATEWAY;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double wrap_deg(double rad) {
  double d = wrap_pi(rad) / kDeg;
  if (d <= -180.0) d += 360.0;
  return d;
}

Vec3 spacecraft_eci(const TrajectorySample& s, const EphemerisProvider& ephem) {
  const auto& c = constants_of(s.center);
  OrbitStateMee m = OrbitStateMee::from_vec(s.x, s.center);
  m.p *= c.radius_km;
  const CartesianState st = mee_to_cartesian(m, c.mu_km3s2);
  if (s.center == BodyId::EARTH) return st.position;
  return mci_to_eci(st.position) + ephem.body_state(BodyId::MOON, s.epoch, BodyId::EARTH).position;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

void write_artifacts(const fs::path& dir, const SolutionRecord& rec, const std::string& json_name,
                     const std::string& json_text, const EphemerisProvider& ephem) {
  fs::create_directories(dir);
  write_file(dir / json_name, json_text);
  if (!rec.evaluation.trajectory) return;
  const Trajectory& t = *rec.evaluation.trajectory;
  write_file(dir / "trajectory.csv", render([&](std::ostream& o) { write_trajectory_csv(o, t); }));
  write_file(dir / "elements.csv", render([&](std::ostream& o) { write_elements_csv(o, t); }));
  write_file(dir / "angles.csv", render([&](std::ostream& o) { write_angles_csv(o, t); }));
  write_file(dir / "synodic.csv",
             render([&](std::ostream& o) { write_synodic_csv(o, t, ephem); }));
}

double two_body_energy(const TrajectorySample& s) {
  const auto& c = constants_of(s.center);
  OrbitStateMee m = OrbitStateMee::from_vec(s.x, s.center);
  m.p *= c.radius_km;
  const CartesianState st = mee_to_cartesian(m, c.mu_km3s2);
  return 0.5 * st.velocity.squaredNorm() - c.mu_km3s2 / st.position.norm();
}

}  // namespace

std::string_view to_string(CaseId c) {
  switch (c) {
    case CaseId::GATEWAY_TO_LLO: return "gateway-to-llo";
    case CaseId::LLO_TO_GATEWAY: return "llo-to-gateway";
    case CaseId::GATEWAY_TO_LEO: return "gateway-to-leo";
    case CaseId::LEO_TO_GATEWAY: return "leo-to-gateway";
    case CaseId::PROPAGATE_ONLY: return "propagate-only";
    case CaseId::VALIDATE: return "validate";
    case CaseId::CUSTOM: return "custom";
  }
  return "?";
}

CaseId case_from_string(std::string_view s) {
  for (CaseId c : {CaseId::GATEWAY_TO_LLO, CaseId::LLO_TO_GATEWAY, CaseId::GATEWAY_TO_LEO,
                   CaseId::LEO_TO_GATEWAY, CaseId::PROPAGATE_ONLY, CaseId::VALIDATE,
                   CaseId::CUSTOM})
    if (to_string(c) == s) return c;
  throw InvalidInput("unknown case id '" + std::string(s) + "'");
}

RunMode mode_from_string(std::string_view s) {
  if (s == "solve") return RunMode::SOLVE;
  if (s == "propagate") return RunMode::PROPAGATE;
  if (s == "validate") return RunMode::VALIDATE;
  throw InvalidInput("unknown mode '" + std::string(s) + "'");
}

std::string default_gateway_csv() { return std::string(CISLUNAR_DATA_DIR) + "/gateway_surrogate.csv"; }

ScenarioConfig parse_config(std::string_view document, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader r(root, "");
  ScenarioConfig cfg;
  const std::string case_text = r.string("case", "");
  if (case_text.empty()) r.fail("case", "required");
  try {
    cfg.case_id = case_from_string(case_text);
  } catch (const InvalidInput&) {
    r.fail("case", "unknown case id '" + case_text + "'");
  }
  const CaseId c = cfg.case_id;
  const bool free_shape = c == CaseId::CUSTOM || c == CaseId::PROPAGATE_ONLY;

  // Case-driven defaults.
  if (terrestrial_case(c)) {
    cfg.target = {bodies::earth.radius_km + 463.0, 0.0, 51.6 * kDeg, BodyId::EARTH};
    cfg.tof_lo_days = 100.0;
    cfg.tof_hi_days = 170.0;
    cfg.multi_arc = true;
  } else {
    cfg.target = {bodies::moon.radius_km + 100.0, 0.0, 90.0 * kDeg, BodyId::MOON};
  }
  cfg.direction = (c == CaseId::LLO_TO_GATEWAY || c == CaseId::LEO_TO_GATEWAY)
                      ? Direction::BACKWARD
                      : Direction::FORWARD;

  if (auto t = r.object("target")) {
    cfg.target.p_km = t->number("p_km", cfg.target.p_km);
    cfg.target.e = t->number("e", cfg.target.e);
    cfg.target.i_rad = t->number("i_deg", cfg.target.i_rad / kDeg) * kDeg;
    if (t->has("center") && !free_shape) t->fail("center", "only allowed for custom and propagate-only cases");
    const std::string center = t->string("center", std::string(to_string(cfg.target.center)));
    try {
      cfg.target.center = body_from_string(center);
    } catch (const std::exception&) {
      t->fail("center", "expected MOON or EARTH");
    }
    if (cfg.target.center != BodyId::MOON && cfg.target.center != BodyId::EARTH)
      t->fail("center", "expected MOON or EARTH");
    const double radius = constants_of(cfg.target.center).radius_km;
    if (!(cfg.target.p_km > radius)) t->fail("p_km", "must exceed the central-body radius");
    if (!(cfg.target.e >= 0.0 && cfg.target.e < 1.0)) t->fail("e", "must lie in [0, 1)");
    if (!(cfg.target.i_rad >= 0.0 && cfg.target.i_rad < kPi)) t->fail("i_deg", "must lie in [0, 180)");
    t->finish();
  }
  if (auto p = r.object("propulsion")) {
    cfg.u_max_kms2 = p->number("u_max_kms2", cfg.u_max_kms2);
    cfg.c_kms = p->number("c_kms", cfg.c_kms);
    if (!(cfg.u_max_kms2 >= 0.0)) p->fail("u_max_kms2", "must be non-negative");
    if (!(cfg.c_kms > 0.0)) p->fail("c_kms", "must be positive");
    p->finish();
  }
  if (auto w = r.object("epoch_window")) {
    cfg.window_begin_utc = w->string("begin_utc", cfg.window_begin_utc);
    cfg.window_end_utc = w->string("end_utc", cfg.window_end_utc);
    auto epoch_of = [&](const char* key, const std::string& text) {
      try {
        return utc_to_tdb(text);
      } catch (const Error& e) {
        w->fail(key, e.what());
      }
      return 0.0;
    };
    if (!(epoch_of("begin_utc", cfg.window_begin_utc) <= epoch_of("end_utc", cfg.window_end_utc)))
      w->fail("end_utc", "must not precede begin_utc");
    w->finish();
  }
  {
    const auto tof = r.numbers("tof_days", 2, {cfg.tof_lo_days, cfg.tof_hi_days});
    if (!(tof[0] > 0.0 && tof[1] >= tof[0])) r.fail("tof_days", "bounds must be positive and ordered");
    cfg.tof_lo_days = tof[0];
    cfg.tof_hi_days = tof[1];
  }
  {
    const auto& w0 = cfg.settings.weights.w;
    const auto w = r.numbers("weights", 7, std::vector<double>(w0.begin(), w0.end()));
    for (std::size_t k = 0; k < 7; ++k) {
      if (!(w[k] >= 0.0)) r.fail("weights", "entries must be non-negative");
      cfg.settings.weights.w[k] = w[k];
    }
  }
  if (auto d = r.object("de")) {
    cfg.de.population = static_cast<int>(d->integer("population", cfg.de.population));
    cfg.de.weight = d->number("weight", cfg.de.weight);
    cfg.de.crossover = d->number("crossover", cfg.de.crossover);
    cfg.de.max_generations = static_cast<int>(d->integer("max_generations", cfg.de.max_generations));
    cfg.de.stall_limit = static_cast<int>(d->integer("stall_limit", cfg.de.stall_limit));
    cfg.de.threshold = d->number("threshold", cfg.de.threshold);
    const long seed = d->integer("seed", static_cast<long>(cfg.de.seed));
    if (seed < 0) d->fail("seed", "must be non-negative");
    cfg.de.seed = static_cast<std::uint64_t>(seed);
    cfg.de.parallel = d->boolean("parallel", cfg.de.parallel);
    try {
      cfg.de.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("config key '") + e.what() + "'");
    }
    d->finish();
  }
  if (auto l = r.object("local")) {
    auto& nm = cfg.settings.local;
    cfg.settings.refine = l->boolean("enabled", cfg.settings.refine);
    nm.max_evaluations = static_cast<int>(l->integer("max_evaluations", nm.max_evaluations));
    nm.initial_step = l->number("initial_step", nm.initial_step);
    nm.x_tol = l->number("x_tol", nm.x_tol);
    nm.f_tol = l->number("f_tol", nm.f_tol);
    nm.restarts = static_cast<int>(l->integer("restarts", nm.restarts));
    if (!(nm.initial_step > 0.0 && nm.initial_step < 1.0)) l->fail("initial_step", "must lie in (0, 1)");
    l->finish();
  }
  if (auto i = r.object("integrator")) {
    auto& p = cfg.settings.propagation;
    p.rtol = i->number("rtol", p.rtol);
    p.atol = i->number("atol", p.atol);
    p.max_step_tu = i->number("max_step_tu", p.max_step_tu);
    p.event_tol_km = i->number("event_tol_km", p.event_tol_km);
    p.sample_spacing_s = i->number("sample_spacing_s", p.sample_spacing_s);
    if (!(p.rtol > 0.0)) i->fail("rtol", "must be positive");
    if (!(p.atol > 0.0)) i->fail("atol", "must be positive");
    if (!(p.event_tol_km > 0.0)) i->fail("event_tol_km", "must be positive");
    if (!(p.max_step_tu >= 0.0)) i->fail("max_step_tu", "must be non-negative");
    if (!(p.sample_spacing_s >= 0.0)) i->fail("sample_spacing_s", "must be non-negative");
    i->finish();
  }
  if (auto e = r.object("ephemeris")) {
    cfg.gateway_csv = resolve(e->string("gateway_csv", ""), base_dir);
    e->finish();
  }
  if (cfg.gateway_csv.empty()) cfg.gateway_csv = default_gateway_csv();
  cfg.rho_e_km = r.number("transition_radius_km", cfg.rho_e_km);
  if (!(cfg.rho_e_km > bodies::earth.radius_km)) r.fail("transition_radius_km", "must exceed the Earth radius");
  cfg.perturbations = r.boolean("perturbations", cfg.perturbations);
  cfg.settings.penalty = r.number("penalty", cfg.settings.penalty);
  if (!(cfg.settings.penalty > 0.0)) r.fail("penalty", "must be positive");
  cfg.settings.converged_below = r.number("converged_below", cfg.settings.converged_below);
  cfg.output_dir = r.string("output_dir", cfg.output_dir);

  if ((r.has("direction") || r.has("multi_arc") || r.has("departure")) && !free_shape) {
    const std::string key = r.has("direction") ? "direction" : r.has("multi_arc") ? "multi_arc" : "departure";
    r.fail(key, "only allowed for custom and propagate-only cases");
  }
  {
    const std::string d = r.string("direction", std::string(to_string(cfg.direction)));
    try {
      cfg.direction = direction_from_string(d);
    } catch (const std::exception&) {
      r.fail("direction", "expected forward or backward");
    }
  }
  cfg.multi_arc = r.boolean("multi_arc", cfg.multi_arc);
  if (auto d = r.object("departure")) {
    FixedDeparture fd;
    try {
      fd.center = body_from_string(d->string("center", "MOON"));
    } catch (const std::exception&) {
      d->fail("center", "expected MOON or EARTH");
    }
    if (fd.center != BodyId::MOON && fd.center != BodyId::EARTH) d->fail("center", "expected MOON or EARTH");
    auto& el = fd.elements;
    el.a = d->number("a_km", 0.0);
    el.e = d->number("e", 0.0);
    el.i = d->number("i_deg", 0.0) * kDeg;
    el.raan = d->number("raan_deg", 0.0) * kDeg;
    el.argp = d->number("argp_deg", 0.0) * kDeg;
    el.true_anomaly = d->number("true_anomaly_deg", 0.0) * kDeg;
    if (!(el.a > constants_of(fd.center).radius_km)) d->fail("a_km", "must exceed the central-body radius");
    if (!(el.e >= 0.0 && el.e < 1.0)) d->fail("e", "must lie in [0, 1)");
    if (!(el.i >= 0.0 && el.i < kPi)) d->fail("i_deg", "must lie in [0, 180)");
    d->finish();
    cfg.departure = fd;
  }
  if (cfg.multi_arc && cfg.departure && cfg.departure->center != BodyId::MOON)
    r.fail("departure", "a two-arc transfer departs in the lunar regime");
  if (cfg.multi_arc && cfg.target.center != BodyId::EARTH)
    r.fail("multi_arc", "a two-arc transfer needs a terrestrial target");
  if (!cfg.multi_arc && free_shape) {
    const BodyId dep = cfg.departure ? cfg.departure->center : BodyId::MOON;
    if (dep != cfg.target.center) r.fail("target", "single-arc target must share the departure center");
  }

  if (auto p = r.object("propagate")) {
    PropagateRequest req;
    req.epoch_utc = p->string("epoch_utc", cfg.window_begin_utc);
    req.tof_days = p->number("tof_days", cfg.tof_lo_days);
    const auto lam = p->numbers("lambda", 6, {0, 0, 0, 0, 0, 0});
    for (int k = 0; k < 6; ++k) req.lambda[k] = lam[static_cast<std::size_t>(k)];
    req.thrust = p->boolean("thrust", true);
    if (!(req.tof_days > 0.0)) p->fail("tof_days", "must be positive");
    try {
      utc_to_tdb(req.epoch_utc);
    } catch (const Error& e) {
      p->fail("epoch_utc", e.what());
    }
    p->finish();
    cfg.propagate = req;
  }
  if (c == CaseId::PROPAGATE_ONLY && !cfg.propagate) r.fail("propagate", "required for propagate-only");
  r.finish();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string());
}

TransferScenario build_scenario(const ScenarioConfig& cfg) {
  TransferScenario s;
  s.id = std::string(to_string(cfg.case_id));
  s.direction = cfg.direction;
  s.target = cfg.target;
  s.u_max_kms2 = cfg.u_max_kms2;
  s.c_kms = cfg.c_kms;
  s.epoch_lo = utc_to_tdb(cfg.window_begin_utc);
  s.epoch_hi = utc_to_tdb(cfg.window_end_utc);
  s.tof_lo_s = cfg.tof_lo_days * kSecondsPerDay;
  s.tof_hi_s = cfg.tof_hi_days * kSecondsPerDay;
  s.multi_arc = cfg.multi_arc;
  s.rho_e_km = cfg.rho_e_km;
  s.perturbations = cfg.perturbations;
  if (cfg.departure) {
    s.departure = DepartureKind::FIXED_ORBIT;
    s.departure_center = cfg.departure->center;
    s.fixed_departure = coe_to_mee(cfg.departure->elements, cfg.departure->center);
    s.ephemeris = make_default_ephemeris();
  } else {
    s.departure = DepartureKind::GATEWAY;
    s.departure_center = BodyId::MOON;
    s.ephemeris = make_default_ephemeris(cfg.gateway_csv);
  }
  return s;
}

// ---------------------------------------------------------------------------

const char* const kElementsHeader = "t_days,arc,p_km,e,i_deg,raan_deg,argp_deg,mass_ratio";
const char* const kAnglesHeader = "t_days,arc,alpha_deg,beta_deg";
const char* const kSynodicHeader = "t_days,arc,x_km,y_km,z_km";

void write_elements_csv(std::ostream& out, const Trajectory& traj) {
  out << kElementsHeader << '\n';
  for (const auto& s : traj.samples) {
    const Vec6& x = s.x;
    const double e = std::hypot(x[1], x[2]);
    const double i = 2.0 * std::atan(std::hypot(x[3], x[4]));
    const double raan = std::atan2(x[4], x[3]);
    const double argp = std::atan2(x[2], x[1]) - raan;
    out << fmt(s.tau_s / kSecondsPerDay) << ',' << s.arc << ','
        << fmt(x[0] * constants_of(s.center).radius_km) << ',' << fmt(e) << ',' << fmt(i / kDeg)
        << ',' << fmt(wrap_deg(raan)) << ',' << fmt(wrap_deg(argp)) << ',' << fmt(s.mass_ratio)
        << '\n';
  }
}

void write_angles_csv(std::ostream& out, const Trajectory& traj) {
  out << kAnglesHeader << '\n';
  for (const auto& s : traj.samples)
    out << fmt(s.tau_s / kSecondsPerDay) << ',' << s.arc << ',' << fmt(wrap_deg(s.controls.alpha))
        << ',' << fmt(s.controls.beta / kDeg) << '\n';
}

void write_synodic_csv(std::ostream& out, const Trajectory& traj, const EphemerisProvider& ephem) {
  out << kSynodicHeader << '\n';
  const double k = bodies::moon.mu_km3s2 / (bodies::moon.mu_km3s2 + bodies::earth.mu_km3s2);
  for (const auto& s : traj.samples) {
    const CartesianState moon = ephem.body_state(BodyId::MOON, s.epoch, BodyId::EARTH);
    const Vec3 r = spacecraft_eci(s, ephem) - k * moon.position;
    const Vec3 y = synodic_basis(moon).matrix() * r;
    out << fmt(s.tau_s / kSecondsPerDay) << ',' << s.arc << ',' << fmt(y.x()) << ',' << fmt(y.y())
        << ',' << fmt(y.z()) << '\n';
  }
}

CsvTable read_csv_table(std::istream& in, std::string_view expected_header) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty CSV", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) throw ParseError("unexpected header '" + line + "'", line_no);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::logic_error&) {
        throw ParseError("bad number '" + cell + "'", line_no);
      }
      if (used != cell.size()) throw ParseError("bad number '" + cell + "'", line_no);
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " columns", line_no);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------

std::vector<ValidationCheck> run_validation(const std::shared_ptr<const EphemerisProvider>& ephem) {
  std::vector<ValidationCheck> out;
  std::mt19937_64 rng(20250525);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double epoch = utc_to_tdb("2025-05-25T16:51:30Z");

  {
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      ClassicalElements c{1.1 + 20.0 * u(rng), 0.95 * u(rng), 3.1 * u(rng), kPi * (2 * u(rng) - 1),
                          kPi * (2 * u(rng) - 1), kPi * (2 * u(rng) - 1)};
      const OrbitStateMee m = coe_to_mee(c, BodyId::MOON);
      const OrbitStateMee back = cartesian_to_mee(mee_to_cartesian(m, 1.0), 1.0);
      Vec6 d = back.vec() - m.vec();
      d[5] = wrap_pi(d[5]);
      worst = std::max(worst, d.norm() / std::max(1.0, m.vec().norm()));
    }
    out.push_back({"mee_cartesian_round_trip", worst, 1e-10, worst < 1e-10});
  }
  {
    ClassicalElements c{3.916e4, 0.923, 98.53 * kDeg, -60.75 * kDeg, 84.05 * kDeg, 168.22 * kDeg};
    Vec6 x0 = coe_to_mee(c, BodyId::MOON).vec();
    x0[0] /= bodies::moon.radius_km;
    const double period = 2.0 * kPi * std::sqrt(std::pow(c.a, 3) / bodies::moon.mu_km3s2);
    const ArcModel m = make_arc_model(BodyId::MOON, Direction::FORWARD, epoch, period, 0.0, 30.0,
                                      PerturbationSet::none(BodyId::MOON));
    PropagationConfig pc;
    pc.record = false;
    const ArcResult r = propagate_arc(x0, Costate::Zero(), 0.0, period, m, pc);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k)
      worst = std::max(worst, std::abs(r.x_final[k] - x0[k]) / std::max(1e-3, std::abs(x0[k])));
    out.push_back({"keplerian_element_conservation", worst, 1e-9, worst < 1e-9});
  }
  if (ephem && ephem->serves(BodyId::GATEWAY)) {
    const EpochSpan span = ephem->span(BodyId::GATEWAY);
    double margin = 1e300;
    for (double t = span.begin; t <= span.end; t += 600.0)
      margin = std::min(margin, ephem->body_state(BodyId::GATEWAY, t, BodyId::EARTH).position.norm() -
                                    kDefaultTransitionRadiusKm);
    out.push_back({"gateway_outside_transition_sphere", margin, 0.0, margin > 0.0});
  }
  if (ephem) {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      ClassicalElements c{3.0e5 + 1.0e5 * u(rng), 0.3 * u(rng), 3.0 * u(rng), kPi * u(rng),
                          kPi * u(rng), kPi * u(rng)};
      Vec6 x = coe_to_mee(c, BodyId::MOON).vec();
      x[0] /= bodies::moon.radius_km;
      std::array<Mat6, 4> jac;
      Vec6 y = x;
      const ChainStep steps[4] = {ChainStep::A, ChainStep::B, ChainStep::C, ChainStep::D};
      for (int k = 0; k < 4; ++k) {
        jac[static_cast<std::size_t>(k)] = transform_jacobian(steps[k], y, epoch, *ephem);
        y = apply_step(steps[k], y, epoch, *ephem);
      }
      Costate lam;
      for (int k = 0; k < 6; ++k) lam[k] = 2 * u(rng) - 1;
      const Costate lam5 = costate_chain(lam, jac);
      const Mat6 total = jac[3] * jac[2] * jac[1] * jac[0];
      for (int k = 0; k < 10; ++k) {
        Vec6 dx;
        for (int a = 0; a < 6; ++a) dx[a] = 2 * u(rng) - 1;
        const double before = lam.dot(dx);
        const double after = lam5.dot(total * dx);
        worst = std::max(worst, std::abs(after - before) / std::max(1.0, std::abs(before)));
      }
    }
    out.push_back({"costate_chain_pairing", worst, 1e-9, worst < 1e-9});
  }
  {
    int violations = 0;
    for (int k = 0; k < 200; ++k) {
      HamiltonianSplit h{2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1};
      const ControlAngles a = optimal_controls(h);
      const auto value = [&](double al, double be) {
        return h.reassemble(Vec3(std::sin(al) * std::cos(be), std::cos(al) * std::cos(be), std::sin(be)));
      };
      const double best = value(a.alpha, a.beta);
      for (int s = 0; s < 1000; ++s)
        if (value(kPi * (2 * u(rng) - 1), 0.5 * kPi * (2 * u(rng) - 1)) < best - 1e-14) ++violations;
    }
    out.push_back({"control_law_sampled_minimality", static_cast<double>(violations), 0.0,
                   violations == 0});
  }
  return out;
}

// ---------------------------------------------------------------------------

int run(const ScenarioConfig& cfg_in, const RunOptions& options, std::ostream& log) {
  ScenarioConfig cfg = cfg_in;
  if (options.seed) cfg.de.seed = *options.seed;
  const fs::path dir = options.output_dir ? *options.output_dir : cfg.output_dir;
  try {
    RunMode mode = options.mode;
    if (cfg.case_id == CaseId::VALIDATE) mode = RunMode::VALIDATE;

    if (mode == RunMode::VALIDATE) {
      std::shared_ptr<const EphemerisProvider> eph;
      if (fs::exists(cfg.gateway_csv)) eph = make_default_ephemeris(cfg.gateway_csv);
      else eph = make_default_ephemeris();
      const auto checks = run_validation(eph);
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      bool ok = true;
      for (const auto& c : checks) {
        log << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value
            << " tol=" << c.tolerance << "\n";
        j.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
        ok = ok && c.pass;
      }
      fs::create_directories(dir);
      write_file(dir / "validate.json", j.dump(2) + "\n");
      return ok ? 0 : 2;
    }

    if (cfg.case_id == CaseId::PROPAGATE_ONLY) mode = RunMode::PROPAGATE;
    const TransferScenario scenario = build_scenario(cfg);

    if (mode == RunMode::PROPAGATE) {
      if (!cfg.propagate) throw InvalidInput("config key 'propagate': required for propagate mode");
      const PropagateRequest& req = *cfg.propagate;
      TransferScenario s = scenario;
      if (!req.thrust) s.u_max_kms2 = 0.0;
      SolverSettings settings = cfg.settings;
      settings.normalize_costate = req.lambda.norm() > 0.0;
      UnknownVector x;
      x.epoch = utc_to_tdb(req.epoch_utc);
      x.tof_s = req.tof_days * kSecondsPerDay;
      x.lambda = req.lambda;
      SolutionRecord rec = record_for(s, settings, x);
      rec.status = rec.evaluation.trajectory ? "propagated" : "failed";
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(solution_json(rec));
      if (rec.evaluation.trajectory && !rec.evaluation.trajectory->samples.empty()) {
        const auto& samples = rec.evaluation.trajectory->samples;
        const double e0 = two_body_energy(samples.front());
        const double e1 = two_body_energy(samples.back());
        j["energy"] = {{"initial_kms2", e0},
                       {"final_kms2", e1},
                       {"relative_drift", std::abs(e1 - e0) / std::abs(e0)},
                       {"thrust", req.thrust},
                       {"perturbations", s.perturbations},
                       {"same_center", samples.front().center == samples.back().center}};
      }
      write_artifacts(dir, rec, "solution.json", j.dump(2) + "\n", *s.ephemeris);
      log << "propagated " << req.tof_days << " days, status " << rec.status << "\n";
      if (!rec.evaluation.failure.empty()) log << "note: " << rec.evaluation.failure << "\n";
      return rec.evaluation.trajectory ? 0 : 2;
    }

    DeConfig de = cfg.de;
    de.progress = [&log](const DeGeneration& g) {
      if (g.generation % 10 == 0) log << "generation " << g.generation << " best " << g.best << std::endl;
    };
    const SolutionRecord rec = solve_scenario(scenario, cfg.settings, de);
    write_artifacts(dir, rec, "solution.json", solution_json(rec), *scenario.ephemeris);
    log << scenario.id << ": J=" << rec.j << " tof=" << rec.tof_s / kSecondsPerDay
        << " d status=" << rec.status << "\n";
    return rec.status == "converged" ? 0 : 2;
  } catch (const InvalidInput& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cislunar
