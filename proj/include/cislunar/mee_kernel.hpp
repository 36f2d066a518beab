#pragma once

// Scalar-generic core of the MEE equations of motion. Instantiated with
// double for propagation and with Dual<6> for exact state Jacobians.

#include "cislunar/dual.hpp"
#include "cislunar/mee_dynamics.hpp"

#include <array>
#include <cmath>

namespace cislunar::kernel {

using std::cos;
using std::sin;
using std::sqrt;

template <class T> using A3 = std::array<T, 3>;
template <class T> using A6 = std::array<T, 6>;

template <class T>
struct MeeGeometry {
  T sq;   // sqrt(p / mu)
  T eta;  // 1 + l cos q + m sin q
  T cq, sq_;  // cos q, sin q
  T radius;
  A3<T> r_hat, t_hat, h_hat;  // LVLH axes in inertial components
};

template <class T>
MeeGeometry<T> geometry(const A6<T>& x, double mu) {
  const T& p = x[0];
  const T& l = x[1];
  const T& m = x[2];
  const T& n = x[3];
  const T& s = x[4];
  MeeGeometry<T> g;
  g.cq = cos(x[5]);
  g.sq_ = sin(x[5]);
  g.eta = 1.0 + l * g.cq + m * g.sq_;
  g.sq = sqrt(p / mu);
  g.radius = p / g.eta;
  const T s2 = 1.0 + n * n + s * s;
  const T inv = 1.0 / s2;
  const A3<T> f{(1.0 + n * n - s * s) * inv, 2.0 * n * s * inv, -2.0 * s * inv};
  const A3<T> gg{2.0 * n * s * inv, (1.0 - n * n + s * s) * inv, 2.0 * n * inv};
  for (int k = 0; k < 3; ++k) {
    g.r_hat[k] = g.cq * f[k] + g.sq_ * gg[k];
    g.t_hat[k] = g.cq * gg[k] - g.sq_ * f[k];
  }
  g.h_hat = {2.0 * s * inv, -2.0 * n * inv, (1.0 - n * n - s * s) * inv};
  return g;
}

// Columns of the input matrix (r, theta, h acceleration components) and the
// Keplerian drift of q.
template <class T>
struct GaussColumns {
  A6<T> col_r, col_t, col_h;
  T q_drift;
};

template <class T>
GaussColumns<T> gauss_columns(const A6<T>& x, const MeeGeometry<T>& g, double mu) {
  const T& p = x[0];
  const T& l = x[1];
  const T& m = x[2];
  const T& n = x[3];
  const T& s = x[4];
  const T inv_eta = 1.0 / g.eta;
  const T zeta = n * g.sq_ - s * g.cq;
  const T s2 = 1.0 + n * n + s * s;
  GaussColumns<T> c;
  c.col_r = {T(0.0), g.sq * g.sq_, -g.sq * g.cq, T(0.0), T(0.0), T(0.0)};
  c.col_t = {2.0 * p * g.sq * inv_eta,
             g.sq * ((g.eta + 1.0) * g.cq + l) * inv_eta,
             g.sq * ((g.eta + 1.0) * g.sq_ + m) * inv_eta,
             T(0.0),
             T(0.0),
             T(0.0)};
  const T k = g.sq * inv_eta;
  c.col_h = {T(0.0),      -k * m * zeta,          k * l * zeta,
             0.5 * k * s2 * g.cq, 0.5 * k * s2 * g.sq_, k * zeta};
  c.q_drift = sqrt(mu * p) * (g.eta / p) * (g.eta / p);
  return c;
}

// Third-body acceleration on a spacecraft at r12 (relative to the central
// body) from a body at r13, rewritten so that no large terms cancel.
template <class T>
A3<T> third_body(const A3<T>& r12, const Vec3& r13, double mu3) {
  const double r13sq = r13.squaredNorm();
  const T dot12_13 = r12[0] * r13.x() + r12[1] * r13.y() + r12[2] * r13.z();
  const T r12sq = r12[0] * r12[0] + r12[1] * r12[1] + r12[2] * r12[2];
  const T qq = (r12sq - 2.0 * dot12_13) / r13sq;
  const T onep = 1.0 + qq;
  const T root = sqrt(onep);
  const T f = qq * (3.0 + 3.0 * qq + qq * qq) / (1.0 + onep * root);
  const T d3 = r13sq * onep * sqrt(r13sq * onep);
  const T k = -mu3 / d3;
  return {k * (r12[0] + f * r13.x()), k * (r12[1] + f * r13.y()), k * (r12[2] + f * r13.z())};
}

// Third-body perturbations projected on the LVLH axes.
template <class T>
A3<T> third_body_lvlh(const MeeGeometry<T>& g, const ThirdBodySamples& bodies) {
  A3<T> pos;
  for (int k = 0; k < 3; ++k) pos[k] = g.radius * g.r_hat[k];
  A3<T> total{T(0.0), T(0.0), T(0.0)};
  for (int b = 0; b < bodies.count; ++b) {
    const A3<T> a = third_body(pos, bodies.items[b].position, bodies.items[b].mu);
    for (int k = 0; k < 3; ++k) total[k] += a[k];
  }
  return {total[0] * g.r_hat[0] + total[1] * g.r_hat[1] + total[2] * g.r_hat[2],
          total[0] * g.t_hat[0] + total[1] * g.t_hat[1] + total[2] * g.t_hat[2],
          total[0] * g.h_hat[0] + total[1] * g.h_hat[1] + total[2] * g.h_hat[2]};
}

// Time derivative of the elements for a total LVLH acceleration.
template <class T>
A6<T> rates(const GaussColumns<T>& c, const A3<T>& a) {
  A6<T> out;
  for (int k = 0; k < 6; ++k) out[k] = c.col_r[k] * a[0] + c.col_t[k] * a[1] + c.col_h[k] * a[2];
  out[5] += c.q_drift;
  return out;
}

template <class T>
A6<T> natural_and_thrust_rates(const A6<T>& x, double mu, const ThirdBodySamples& bodies,
                               const Vec3& thrust_lvlh) {
  const MeeGeometry<T> g = geometry(x, mu);
  const GaussColumns<T> c = gauss_columns(x, g, mu);
  A3<T> a = third_body_lvlh(g, bodies);
  for (int k = 0; k < 3; ++k) a[k] += thrust_lvlh[k];
  return rates(c, a);
}

// Position and velocity from elements (gravitational parameter mu).
template <class T>
std::array<T, 6> cartesian(const A6<T>& x, double mu) {
  const T& p = x[0];
  const T& l = x[1];
  const T& m = x[2];
  const T& n = x[3];
  const T& s = x[4];
  const T inv = 1.0 / (1.0 + n * n + s * s);
  const A3<T> f{(1.0 + n * n - s * s) * inv, 2.0 * n * s * inv, -2.0 * s * inv};
  const A3<T> g{2.0 * n * s * inv, (1.0 - n * n + s * s) * inv, 2.0 * n * inv};
  const T cq = cos(x[5]);
  const T sq = sin(x[5]);
  const T r = p / (1.0 + l * cq + m * sq);
  const T k = sqrt(mu / p);
  std::array<T, 6> y;
  for (int i = 0; i < 3; ++i) {
    y[i] = r * (cq * f[i] + sq * g[i]);
    y[3 + i] = k * ((l + cq) * g[i] - (m + sq) * f[i]);
  }
  return y;
}

}  // namespace cislunar::kernel
