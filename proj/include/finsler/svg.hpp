#pragma once

#include "finsler/control.hpp"
#include "finsler/geodesic.hpp"

#include <iosfwd>
#include <string>

namespace finsler {

/// Static SVG renderings: occupancy grids and planar trajectory projections,
/// with optional analytic overlays.
struct SvgOverlay {
    std::vector<Vec> polyline; // 2-D points in world coordinates
    std::string color = "#d62728";
    double width = 1.5;
};

void write_grid_svg(std::ostream& os, const ReachGrid& grid,
                    const std::vector<SvgOverlay>& overlays = {},
                    int pixels_per_cell = 6);

/// First two coordinates of the trajectory, auto-fitted viewport.
void write_trajectory_svg(std::ostream& os, const Trajectory& traj,
                          const std::vector<SvgOverlay>& overlays = {},
                          double pixels = 640.0);

/// Overlay tracing the boundary |x| = 2 y of the cone example inside a window.
SvgOverlay cone_boundary_overlay(const GridWindow& window);

} // namespace finsler
