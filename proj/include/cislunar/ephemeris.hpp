#pragma once

#include "cislunar/units_frames.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cislunar {

struct OrbitStateMee;

// Tabulated position/velocity nodes of one body.
struct StateTable {
  std::vector<double> epochs;  // s past J2000 TDB, strictly increasing
  std::vector<Vec3> positions;   // km
  std::vector<Vec3> velocities;  // km/s
  FrameTag frame = FrameTag::MCI;
  BodyId center = BodyId::MOON;

  std::size_t size() const { return epochs.size(); }
  double begin_epoch() const { return epochs.front(); }
  double end_epoch() const { return epochs.back(); }
};

// CSV: a "# frame=MCI center=MOON" comment, a mandatory header row
// "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms", then one node per row.
StateTable load_state_table(std::string_view document);
StateTable load_state_table_file(const std::string& path);
std::string format_state_table(const StateTable& table);

struct EpochSpan {
  double begin = -1e300;
  double end = 1e300;
  bool contains(double t) const { return t >= begin && t <= end; }
};

class EphemerisProvider {
 public:
  virtual ~EphemerisProvider() = default;

  // State of `body` relative to `center` (EARTH -> ECI axes, MOON -> MCI axes).
  virtual CartesianState body_state(BodyId body, double epoch, BodyId center) const = 0;
  virtual bool serves(BodyId body) const = 0;
  virtual EpochSpan span(BodyId body) const = 0;
};

// Mean Keplerian elements with linear secular rates for the Moon (geocentric)
// and the Sun (geocentric), referred to the ecliptic.
class AnalyticProvider final : public EphemerisProvider {
 public:
  CartesianState body_state(BodyId body, double epoch, BodyId center) const override;
  bool serves(BodyId body) const override { return body != BodyId::GATEWAY; }
  EpochSpan span(BodyId) const override { return {}; }

  // Geocentric ecliptic (= MCI axes) states.
  static CartesianState moon_geocentric_ecliptic(double epoch);
  static CartesianState sun_geocentric_ecliptic(double epoch);
};

// One body served from a StateTable by cubic Hermite interpolation over
// position/velocity nodes. Re-centering (when the requested center differs
// from the table's) uses `fallback`.
class TabulatedProvider final : public EphemerisProvider {
 public:
  TabulatedProvider(BodyId body, StateTable table,
                    std::shared_ptr<const EphemerisProvider> fallback = nullptr);

  CartesianState body_state(BodyId body, double epoch, BodyId center) const override;
  bool serves(BodyId body) const override { return body == body_; }
  EpochSpan span(BodyId body) const override;

  const StateTable& table() const { return table_; }
  // Interpolated state in the table's own frame/center.
  CartesianState interpolate(double epoch) const;

 private:
  BodyId body_;
  StateTable table_;
  std::shared_ptr<const EphemerisProvider> fallback_;
};

// Dispatches each body to the first provider that serves it.
class CompositeProvider final : public EphemerisProvider {
 public:
  void add(std::shared_ptr<const EphemerisProvider> provider);

  CartesianState body_state(BodyId body, double epoch, BodyId center) const override;
  bool serves(BodyId body) const override;
  EpochSpan span(BodyId body) const override;

 private:
  const EphemerisProvider& route(BodyId body) const;
  std::vector<std::shared_ptr<const EphemerisProvider>> providers_;
};

CartesianState body_state(const EphemerisProvider& provider, BodyId body, double epoch,
                          BodyId center);

// Gateway osculating lunar MEE (p in km, angles rad) at an epoch.
OrbitStateMee gateway_state(const EphemerisProvider& provider, double epoch);

// Standard provider stack: analytic Sun/Earth/Moon plus, if a path is
// given, the Gateway table.
std::shared_ptr<const CompositeProvider> make_default_ephemeris(const std::string& gateway_csv = "");

}  // namespace cislunar
