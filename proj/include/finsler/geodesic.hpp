#pragma once

#include "finsler/scene.hpp"

#include <iosfwd>

namespace finsler {

/// Acceleration of the energy Euler-Lagrange system at (x, v != 0):
/// solves g_v a = dL/dx - (d2L/dv dx) v  for L = F^2/2.
Vec geodesic_accel(const Scene& scene, const Vec& x, const Vec& v);

/// Classical RK4 on (x, v) with vdot = geodesic_accel.  Samples at multiples
/// of `step` covering [0, T] (or [T, 0] for backward flow).  Chart exit marks
/// the trajectory truncated.
Trajectory integrate_geodesic(const Scene& scene, const PhaseState& s0,
                              double T, double step);

/// Zermelo fast path for Killing-wind scenes: the h-geodesic composed with the
/// wind flow.  Requires scene.killing_wind.
Trajectory zermelo_geodesic(const Scene& scene, const PhaseState& s0,
                            double T, double step);

/// Finite-difference estimate of the Jacobi operator R_{gamma'(t)}(u) along the
/// geodesic through s, via position-perturbed flows (eps = 1e-4) and a second
/// time difference (step 1e-3).
Vec estimate_jacobi_operator(const Scene& scene, const PhaseState& s,
                             const Vec& u, double t);

/// Flag curvature K(v,u) = g_v(R_v u, u) / (g_v(v,v) g_v(u,u) - g_v(v,u)^2)
/// at the point gamma(t), with R from estimate_jacobi_operator.
double flag_curvature(const Scene& scene, const PhaseState& s,
                      const Vec& u, double t);

/// Ratio D(T) = det(g at flowed state) |det dPhi_T| / det(g at s0) for the
/// Legendre-pullback volume det(g_v) dx dv; contract: D(T) ~ 1.
double liouville_volume_check(const Scene& scene, const PhaseState& s0,
                              double T, double step = 1e-3);

/// CSV schema: header t,x1..xn,v1..vn, one row per sample, %.17g floats.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

} // namespace finsler
