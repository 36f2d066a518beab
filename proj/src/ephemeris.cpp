#include "cislunar/ephemeris.hpp"

#include "cislunar/error.hpp"
#include "cislunar/mee_dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cislunar {
namespace {

// Mean orbital elements of a body about the Earth, angles in degrees and
// rates in degrees per Julian century (TDB).
struct MeanElements {
  double a_km;
  double e;
  double i_deg;
  double raan0, raan_rate;
  double argp0, argp_rate;
  double mean_anom0, mean_anom_rate;
};

// Moon: mean longitude 218.3164477 + 481267.88123421 T, mean anomaly
// 134.9633964 + 477198.8675055 T, node 125.0445479 - 1934.1362891 T.
// Argument of perigee = (mean longitude - mean anomaly) - node.
constexpr MeanElements kMoon{
    384400.0,
    0.0549,
    5.145,
    125.0445479,
    -1934.1362891,
    (218.3164477 - 134.9633964) - 125.0445479,
    (481267.88123421 - 477198.8675055) + 1934.1362891,
    134.9633964,
    477198.8675055,
};

// Sun about the Earth: geometric mean longitude 280.46646 + 36000.76983 T,
// mean anomaly 357.52911 + 35999.05029 T, in the ecliptic (i = 0).
constexpr MeanElements kSun{
    149598023.0, 0.016708634, 0.0, 0.0, 0.0, 280.46646 - 357.52911, 36000.76983 - 35999.05029,
    357.52911,   35999.05029,
};

constexpr double kCenturyS = 36525.0 * 86400.0;

Mat3 rz(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}
Mat3 drz(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}
Mat3 rx(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

// Ecliptic state; velocity is the exact time derivative of the position
// model, secular rates included.
CartesianState kepler_state(const MeanElements& el, double epoch) {
  const double T = epoch / kCenturyS;
  const double raan = (el.raan0 + el.raan_rate * T) * kDeg;
  const double argp = (el.argp0 + el.argp_rate * T) * kDeg;
  const double M = wrap_pi((el.mean_anom0 + el.mean_anom_rate * T) * kDeg);
  const double raan_dot = el.raan_rate * kDeg / kCenturyS;
  const double argp_dot = el.argp_rate * kDeg / kCenturyS;
  const double n = el.mean_anom_rate * kDeg / kCenturyS;
  const double e = el.e;

  double E = M + e * std::sin(M);
  for (int k = 0; k < 20; ++k) {
    const double dE = (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
    E -= dE;
    if (std::abs(dE) < 1e-15) break;
  }
  const double cE = std::cos(E), sE = std::sin(E);
  const double b = el.a_km * std::sqrt(1.0 - e * e);
  const Vec3 r_pf(el.a_km * (cE - e), b * sE, 0.0);
  const double Edot = n / (1.0 - e * cE);
  const Vec3 v_pf(-el.a_km * sE * Edot, b * cE * Edot, 0.0);

  const Mat3 Rn = rz(raan), Ri = rx(el.i_deg * kDeg), Rw = rz(argp);
  const Mat3 R = Rn * Ri * Rw;
  const Mat3 Rdot = drz(raan) * raan_dot * Ri * Rw + Rn * Ri * drz(argp) * argp_dot;
  return CartesianState{R * r_pf, R * v_pf + Rdot * r_pf, FrameTag::MCI, BodyId::EARTH};
}

CartesianState geocentric_ecliptic(BodyId body, double epoch) {
  switch (body) {
    case BodyId::EARTH: return CartesianState{Vec3::Zero(), Vec3::Zero(), FrameTag::MCI, BodyId::EARTH};
    case BodyId::MOON: return kepler_state(kMoon, epoch);
    case BodyId::SUN: return kepler_state(kSun, epoch);
    case BodyId::GATEWAY: break;
  }
  throw InvalidInput("analytic ephemeris does not serve GATEWAY");
}

// Re-express a geocentric ecliptic vector pair relative to `center`.
CartesianState recenter_from_geo_ecliptic(const CartesianState& geo_ecl, double epoch,
                                          BodyId center, const EphemerisProvider* moon_source) {
  switch (center) {
    case BodyId::EARTH:
      return CartesianState{mci_to_eci(geo_ecl.position), mci_to_eci(geo_ecl.velocity),
                            FrameTag::ECI, BodyId::EARTH};
    case BodyId::MOON: {
      CartesianState moon_geo;
      if (moon_source) {
        const CartesianState m = moon_source->body_state(BodyId::MOON, epoch, BodyId::EARTH);
        moon_geo = CartesianState{eci_to_mci(m.position), eci_to_mci(m.velocity), FrameTag::MCI,
                                  BodyId::EARTH};
      } else {
        moon_geo = kepler_state(kMoon, epoch);
      }
      return CartesianState{geo_ecl.position - moon_geo.position,
                            geo_ecl.velocity - moon_geo.velocity, FrameTag::MCI, BodyId::MOON};
    }
    default: break;
  }
  throw InvalidInput("unsupported ephemeris center " + std::string(to_string(center)));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

CartesianState AnalyticProvider::moon_geocentric_ecliptic(double epoch) {
  return kepler_state(kMoon, epoch);
}

CartesianState AnalyticProvider::sun_geocentric_ecliptic(double epoch) {
  return kepler_state(kSun, epoch);
}

CartesianState AnalyticProvider::body_state(BodyId body, double epoch, BodyId center) const {
  const CartesianState geo = geocentric_ecliptic(body, epoch);
  return recenter_from_geo_ecliptic(geo, epoch, center, nullptr);
}

// ---------------------------------------------------------------------------

StateTable load_state_table(std::string_view document) {
  StateTable table;
  bool have_header = false;
  bool have_frame = false;
  std::size_t line_no = 0;
  std::size_t data_row = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    const auto nl = document.find('\n', pos);
    const std::string_view raw =
        document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? document.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        try {
          if (key == "frame") {
            table.frame = frame_from_string(val);
            have_frame = true;
          } else if (key == "center") {
            table.center = body_from_string(val);
          }
        } catch (const InvalidInput& e) {
          throw ParseError(e.what(), line_no);
        }
      }
      continue;
    }
    if (!have_header) {
      if (line != "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms")
        throw ParseError("missing or malformed header row", line_no);
      have_header = true;
      continue;
    }
    ++data_row;
    double v[7];
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell =
          trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                : comma - start));
      if (col >= 7) throw ParseError("too many columns (data row " + std::to_string(data_row) + ")", line_no);
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, v[col]);
      if (ec != std::errc() || ptr != last || cell.empty())
        throw ParseError("bad number '" + cell + "' (data row " + std::to_string(data_row) + ")",
                         line_no);
      if (!std::isfinite(v[col]))
        throw ParseError("non-finite value (data row " + std::to_string(data_row) + ")", line_no);
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != 7)
      throw ParseError("expected 7 columns, got " + std::to_string(col) + " (data row " +
                           std::to_string(data_row) + ")",
                       line_no);
    if (!table.epochs.empty() && !(v[0] > table.epochs.back()))
      throw ParseError("epochs not strictly increasing at data row " + std::to_string(data_row),
                       line_no);
    table.epochs.push_back(v[0]);
    table.positions.emplace_back(v[1], v[2], v[3]);
    table.velocities.emplace_back(v[4], v[5], v[6]);
  }
  if (!have_frame) throw ParseError("missing '# frame=... center=...' comment", 1);
  if (!have_header) throw ParseError("missing header row", line_no);
  if (table.size() < 4) throw ParseError("state table needs at least 4 nodes", line_no);
  return table;
}

StateTable load_state_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open state table '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_state_table(ss.str());
}

std::string format_state_table(const StateTable& table) {
  std::ostringstream out;
  out << "# frame=" << to_string(table.frame) << " center=" << to_string(table.center) << "\n";
  out << "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& r = table.positions[k];
    const auto& v = table.velocities[k];
    out << table.epochs[k] << ',' << r.x() << ',' << r.y() << ',' << r.z() << ',' << v.x() << ','
        << v.y() << ',' << v.z() << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

TabulatedProvider::TabulatedProvider(BodyId body, StateTable table,
                                     std::shared_ptr<const EphemerisProvider> fallback)
    : body_(body), table_(std::move(table)), fallback_(std::move(fallback)) {
  if (table_.size() < 4) throw InvalidInput("TabulatedProvider: fewer than 4 nodes");
  if (table_.center != BodyId::EARTH && table_.center != BodyId::MOON)
    throw InvalidInput("TabulatedProvider: table center must be EARTH or MOON");
}

EpochSpan TabulatedProvider::span(BodyId) const {
  return {table_.begin_epoch(), table_.end_epoch()};
}

CartesianState TabulatedProvider::interpolate(double epoch) const {
  const auto& t = table_.epochs;
  if (!(epoch >= t.front() && epoch <= t.back()))
    throw RangeError("epoch " + std::to_string(epoch) + " outside table span [" +
                         std::to_string(t.front()) + ", " + std::to_string(t.back()) + "]",
                     t.front(), t.back());
  auto it = std::upper_bound(t.begin(), t.end(), epoch);
  std::size_t k1 = static_cast<std::size_t>(it - t.begin());
  if (k1 == t.size()) k1 = t.size() - 1;
  if (k1 == 0) k1 = 1;
  const std::size_t k0 = k1 - 1;
  if (epoch == t[k0])
    return CartesianState{table_.positions[k0], table_.velocities[k0], table_.frame, table_.center};
  if (epoch == t[k1])
    return CartesianState{table_.positions[k1], table_.velocities[k1], table_.frame, table_.center};

  const double h = t[k1] - t[k0];
  const double s = (epoch - t[k0]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  const Vec3& p0 = table_.positions[k0];
  const Vec3& p1 = table_.positions[k1];
  const Vec3& v0 = table_.velocities[k0];
  const Vec3& v1 = table_.velocities[k1];
  const Vec3 pos = h00 * p0 + h10 * h * v0 + h01 * p1 + h11 * h * v1;
  const Vec3 vel = (d00 * p0 + d01 * p1) / h + d10 * v0 + d11 * v1;
  return CartesianState{pos, vel, table_.frame, table_.center};
}

CartesianState TabulatedProvider::body_state(BodyId body, double epoch, BodyId center) const {
  if (body != body_) throw InvalidInput("TabulatedProvider does not serve " + std::string(to_string(body)));
  const CartesianState s = interpolate(epoch);
  if (center == table_.center) {
    const FrameTag want = center == BodyId::EARTH ? FrameTag::ECI : FrameTag::MCI;
    if (s.frame == want) return s;
    // Same origin, other axes.
    if (want == FrameTag::MCI)
      return CartesianState{eci_to_mci(s.position), eci_to_mci(s.velocity), want, center};
    return CartesianState{mci_to_eci(s.position), mci_to_eci(s.velocity), want, center};
  }
  // Bring to geocentric ecliptic axes, then re-center.
  CartesianState ecl = s;
  if (s.frame == FrameTag::ECI) {
    ecl.position = eci_to_mci(s.position);
    ecl.velocity = eci_to_mci(s.velocity);
  }
  if (s.center == BodyId::MOON) {
    CartesianState m = fallback_ ? fallback_->body_state(BodyId::MOON, epoch, BodyId::EARTH)
                                 : AnalyticProvider{}.body_state(BodyId::MOON, epoch, BodyId::EARTH);
    ecl.position += eci_to_mci(m.position);
    ecl.velocity += eci_to_mci(m.velocity);
  }
  return recenter_from_geo_ecliptic(ecl, epoch, center, fallback_.get());
}

// ---------------------------------------------------------------------------

void CompositeProvider::add(std::shared_ptr<const EphemerisProvider> provider) {
  providers_.push_back(std::move(provider));
}

const EphemerisProvider& CompositeProvider::route(BodyId body) const {
  for (const auto& p : providers_)
    if (p->serves(body)) return *p;
  throw InvalidInput("no ephemeris provider serves " + std::string(to_string(body)));
}

CartesianState CompositeProvider::body_state(BodyId body, double epoch, BodyId center) const {
  return route(body).body_state(body, epoch, center);
}

bool CompositeProvider::serves(BodyId body) const {
  return std::any_of(providers_.begin(), providers_.end(),
                     [body](const auto& p) { return p->serves(body); });
}

EpochSpan CompositeProvider::span(BodyId body) const { return route(body).span(body); }

CartesianState body_state(const EphemerisProvider& provider, BodyId body, double epoch,
                          BodyId center) {
  if (!provider.span(body).contains(epoch)) {
    const auto sp = provider.span(body);
    throw RangeError("epoch outside ephemeris span of " + std::string(to_string(body)), sp.begin,
                     sp.end);
  }
  return provider.body_state(body, epoch, center);
}

OrbitStateMee gateway_state(const EphemerisProvider& provider, double epoch) {
  const CartesianState s = body_state(provider, BodyId::GATEWAY, epoch, BodyId::MOON);
  return cartesian_to_mee(s, bodies::moon.mu_km3s2);
}

std::shared_ptr<const CompositeProvider> make_default_ephemeris(const std::string& gateway_csv) {
  auto analytic = std::make_shared<AnalyticProvider>();
  auto composite = std::make_shared<CompositeProvider>();
  composite->add(analytic);
  if (!gateway_csv.empty()) {
    composite->add(std::make_shared<TabulatedProvider>(
        BodyId::GATEWAY, load_state_table_file(gateway_csv), analytic));
  }
  return composite;
}

}  // namespace cislunar
