#pragma once

#include "finsler/geodesic.hpp"

namespace finsler {

/// Basis of ker(d rho) at x.  Coordinate projections make this the trailing
/// coordinate directions.
std::vector<Vec> vertical_basis(const Scene& scene, const Vec& x);

/// True iff max over vertical e of |g_v(v, e)| <= tol * F(v)^2.
bool is_horizontal(const Scene& scene, const PhaseState& s, double tol);

/// Horizontal lift of a base vector b != 0: the unique v with d rho(v) = b that
/// is g_v-orthogonal to the fiber.  Solved by damped Newton over the fiber of
/// d rho; certified to satisfy F(v) = F*(b).
Vec horizontal_lift_vector(const Scene& scene, const Vec& x, const Vec& b);

/// Lifts the base geodesic's initial vector at x0, integrates the total-space
/// geodesic, and certifies that d rho(gamma(t)) tracks the base curve to 1e-5.
Trajectory horizontal_lift_geodesic(const Scene& scene, const Vec& x0,
                                    const Trajectory& base_traj);

/// Samples the unit indicatrix at x, projects through d rho, and returns the
/// maximal deviation of the projected boundary from the base indicatrix over
/// an angle grid of `samples` directions.
double submersion_ball_check(const Scene& scene, const Vec& x, int samples);

} // namespace finsler
