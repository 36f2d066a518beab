#include "cislunar/surrogate.hpp"

#include "cislunar/epoch.hpp"
#include "cislunar/error.hpp"
#include "cislunar/propagation.hpp"

#include <cmath>

namespace cislunar {
namespace {

// One ballistic leg from the anchor, samples ordered by increasing tau.
Trajectory ballistic_leg(const Vec6& x0, double anchor_epoch, double duration_s, Direction dir,
                         double spacing_s, std::shared_ptr<const EphemerisProvider> ephem) {
  const ArcModel model = make_arc_model(BodyId::MOON, dir, anchor_epoch, duration_s, 0.0, 30.0,
                                        PerturbationSet::standard(BodyId::MOON, ephem));
  PropagationConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  cfg.sample_spacing_s = spacing_s;
  return propagate_arc(x0, Costate::Zero(), 0.0, duration_s, model, cfg).trajectory;
}

}  // namespace

GatewayAnchor default_gateway_anchor() {
  GatewayAnchor a;
  a.epoch = utc_to_tdb("2025-05-25T16:51:30Z");
  a.elements = {3.916e4, 0.923, 98.53 * kDeg, -60.75 * kDeg, 84.05 * kDeg, 168.22 * kDeg};
  return a;
}

StateTable generate_gateway_surrogate(const GatewayAnchor& anchor, double begin, double end,
                                      double spacing_s,
                                      std::shared_ptr<const EphemerisProvider> ephem) {
  if (!(begin <= anchor.epoch && anchor.epoch <= end))
    throw InvalidInput("surrogate span must contain the anchor epoch");
  if (!(spacing_s > 0.0)) throw InvalidInput("surrogate spacing must be positive");
  // Whole multiples of the spacing on both sides keep the grid aligned.
  const double back = std::ceil((anchor.epoch - begin) / spacing_s) * spacing_s;
  const double fwd = std::ceil((end - anchor.epoch) / spacing_s) * spacing_s;

  Vec6 x0 = coe_to_mee(anchor.elements, BodyId::MOON).vec();
  x0[0] /= bodies::moon.radius_km;
  const Trajectory before =
      ballistic_leg(x0, anchor.epoch, back, Direction::BACKWARD, spacing_s, ephem);
  const Trajectory after =
      ballistic_leg(x0, anchor.epoch, fwd, Direction::FORWARD, spacing_s, ephem);

  StateTable table;
  table.frame = FrameTag::MCI;
  table.center = BodyId::MOON;
  auto push = [&](const TrajectorySample& s) {
    OrbitStateMee m = OrbitStateMee::from_vec(s.x, BodyId::MOON);
    m.p *= bodies::moon.radius_km;
    const CartesianState c = mee_to_cartesian(m, bodies::moon.mu_km3s2);
    table.epochs.push_back(s.epoch);
    table.positions.push_back(c.position);
    table.velocities.push_back(c.velocity);
  };
  for (auto it = before.samples.rbegin(); it != before.samples.rend(); ++it) push(*it);
  for (std::size_t k = 1; k < after.samples.size(); ++k) push(after.samples[k]);
  return table;
}

}  // namespace cislunar
