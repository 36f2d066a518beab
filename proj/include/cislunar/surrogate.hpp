#pragma once

#include "cislunar/ephemeris.hpp"
#include "cislunar/mee_dynamics.hpp"

namespace cislunar {

// Gateway osculating elements at the anchor epoch (lunar, km and rad).
struct GatewayAnchor {
  double epoch = 0.0;
  ClassicalElements elements;
};

GatewayAnchor default_gateway_anchor();

// Ballistic propagation of the anchor state forward and backward in the
// perturbed lunar model (Earth and Sun from `ephem`), tabulated in MCI
// every `spacing_s` seconds over [begin, end].
StateTable generate_gateway_surrogate(const GatewayAnchor& anchor, double begin, double end,
                                      double spacing_s,
                                      std::shared_ptr<const EphemerisProvider> ephem);

}  // namespace cislunar
