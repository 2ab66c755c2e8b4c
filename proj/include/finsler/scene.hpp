#pragma once

#include "finsler/randers.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace finsler {

enum class Topology { Euclidean, Torus };

/// Submersion data for scenes whose projection is the coordinate map onto the
/// first base_dim coordinates.  base_h / base_w give the base Zermelo data.
struct SubmersionSpec {
    int base_dim = 1;
    std::function<Mat(const Vec&)> base_h;
    std::function<Vec(const Vec&)> base_w;

    RandersDatum base_datum_at(const Vec& xb) const {
        return RandersDatum(base_h(xb), base_w(xb));
    }
};

/// Phase point: chart position and (nonzero) chart velocity.
struct PhaseState {
    Vec x;
    Vec v;
};

/// Time-sampled geodesic.  On torus scenes positions are stored in the cover.
struct Trajectory {
    std::vector<double> times;
    std::vector<PhaseState> states;
    bool truncated = false;

    std::size_t size() const { return times.size(); }
    const PhaseState& front() const { return states.front(); }
    const PhaseState& back() const { return states.back(); }
};

/// A chart-based manifold carrying metric and wind field evaluators.
struct Scene {
    std::string name;
    int dim = 2;
    Topology topology = Topology::Euclidean;
    Vec periods; // torus only, one positive period per axis
    std::function<Mat(const Vec&)> h_field;
    std::function<Vec(const Vec&)> w_field;
    std::optional<SubmersionSpec> submersion;
    bool killing_wind = false; // wind is Killing for h (registry flag)
    std::function<bool(const Vec&)> chart_ok; // empty => whole chart

    Vec wrap(const Vec& x) const;
    bool in_chart(const Vec& x) const;
    /// Bundles h(x), w(x); wraps torus points first.  Throws std::domain_error
    /// outside the chart.
    RandersDatum datum_at(const Vec& x) const;
};

/// Registry of the named scenarios.  Unknown names throw std::invalid_argument
/// listing the valid names.  `dim` is honored only by "euclidean".
Scene scenario(const std::string& name, int dim = 2);
std::vector<std::string> scenario_names();

/// Length integral of F(gamma') over the sampled trajectory, composite Simpson
/// with a trapezoid tail when the interval count is odd.  Orientation-sensitive.
double curve_length(const Scene& scene, const Trajectory& traj);

} // namespace finsler
