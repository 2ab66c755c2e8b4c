#include "finsler/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace finsler {

namespace {

void emit_num(std::ostream& os, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    os << buf;
}

struct Viewport {
    double x0, y0, sx, sy, height; // world -> pixel (y flipped)

    void point(std::ostream& os, const Vec& p) const {
        emit_num(os, (p[0] - x0) * sx);
        os << ",";
        emit_num(os, height - (p[1] - y0) * sy);
    }
};

void emit_overlays(std::ostream& os, const Viewport& vp,
                   const std::vector<SvgOverlay>& overlays) {
    for (const SvgOverlay& ov : overlays) {
        if (ov.polyline.size() < 2) continue;
        os << "<polyline fill=\"none\" stroke=\"" << ov.color << "\" stroke-width=\""
           << ov.width << "\" points=\"";
        for (std::size_t i = 0; i < ov.polyline.size(); ++i) {
            if (i) os << " ";
            vp.point(os, ov.polyline[i]);
        }
        os << "\"/>\n";
    }
}

} // namespace

void write_grid_svg(std::ostream& os, const ReachGrid& grid,
                    const std::vector<SvgOverlay>& overlays, int pixels_per_cell) {
    const int W = grid.nx() * pixels_per_cell;
    const int H = grid.ny() * pixels_per_cell;
    const GridWindow& w = grid.window();
    const Viewport vp{w.x0, w.y0, W / (w.x1 - w.x0), H / (w.y1 - w.y0),
                      static_cast<double>(H)};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
       << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            if (!grid.occupied(i, j)) continue;
            os << "<rect x=\"" << i * pixels_per_cell << "\" y=\""
               << (grid.ny() - 1 - j) * pixels_per_cell << "\" width=\"" << pixels_per_cell
               << "\" height=\"" << pixels_per_cell << "\" fill=\"#1f77b4\"/>\n";
        }
    emit_overlays(os, vp, overlays);
    os << "</svg>\n";
}

void write_trajectory_svg(std::ostream& os, const Trajectory& traj,
                          const std::vector<SvgOverlay>& overlays, double pixels) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    auto grow = [&](const Vec& p) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    };
    for (const PhaseState& s : traj.states) grow(s.x);
    for (const SvgOverlay& ov : overlays)
        for (const Vec& p : ov.polyline) grow(p);
    const double padx = std::max(1e-6, 0.05 * (x1 - x0));
    const double pady = std::max(1e-6, 0.05 * (y1 - y0));
    x0 -= padx; x1 += padx; y0 -= pady; y1 += pady;
    const double scale = pixels / std::max(x1 - x0, y1 - y0);
    const double W = (x1 - x0) * scale, H = (y1 - y0) * scale;
    const Viewport vp{x0, y0, scale, scale, H};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << static_cast<int>(W)
       << "\" height=\"" << static_cast<int>(H) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        if (i) os << " ";
        vp.point(os, traj.states[i].x.head(2));
    }
    os << "\"/>\n";
    emit_overlays(os, vp, overlays);
    os << "</svg>\n";
}

SvgOverlay cone_boundary_overlay(const GridWindow& window) {
    SvgOverlay ov;
    const double span = std::max(std::abs(window.x0), std::abs(window.x1));
    ov.polyline.push_back((Vec(2) << -span, span / 2.0).finished());
    ov.polyline.push_back((Vec(2) << 0.0, 0.0).finished());
    ov.polyline.push_back((Vec(2) << span, span / 2.0).finished());
    return ov;
}

} // namespace finsler
