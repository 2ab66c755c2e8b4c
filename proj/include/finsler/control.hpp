#pragma once

#include "finsler/scene.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>

namespace finsler {

using VectorField = std::function<Vec(const Vec&)>;

/// One horizontal unit geodesic field.  Constant generators flow by exact
/// translation.
struct Generator {
    VectorField field;
    bool constant = false;
    Vec const_value;
    std::string label;

    Vec eval(const Vec& x) const { return constant ? const_value : field(x); }
};

struct ControlSystem {
    Scene scene;
    std::vector<Generator> generators;
};

/// Builds the registry control family for a scene: the explicit fields
/// f1 = (1, 1/2), f2 = (-1, 1/2) on cone_r2/torus, or horizontal unit lifts of
/// a base direction fan otherwise.
ControlSystem make_control_system(const Scene& scene, int fan_directions = 8);

/// Verifies F(gen(x)) = 1 and horizontality at random probe points; throws on
/// violation.
void certify_control_system(const ControlSystem& system, int probes,
                            std::uint64_t seed, double tol_norm = 1e-8,
                            double tol_horizontal = 1e-8);

enum class WordMode { Attainable, Orbit };

struct Letter {
    int generator;
    double duration;
    bool clipped = false; // duration was cut by the horizon budget
};

struct Word {
    std::vector<Letter> letters;
    WordMode mode = WordMode::Attainable;

    void validate(int generator_count) const;
};

/// Endpoint of the successive generator flows; `visit`, when set, receives
/// every intermediate sample (used for grid rasterization).
Vec apply_word(const ControlSystem& system, const Vec& q0, const Word& word,
               double step, const std::function<void(const Vec&)>* visit = nullptr);

struct GridWindow {
    double x0, x1, y0, y1;
};

/// 2-D occupancy grid with per-cell sample counts.
class ReachGrid {
public:
    ReachGrid(GridWindow window, double resolution);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    const GridWindow& window() const { return window_; }
    double resolution() const { return res_; }

    void mark(const Vec& p);
    bool occupied(int i, int j) const { return counts_[index(i, j)] > 0; }
    long count(int i, int j) const { return counts_[index(i, j)]; }
    Vec cell_center(int i, int j) const;
    long occupied_cells() const;
    double occupied_fraction() const;
    /// Cell-wise sum; grids must share geometry.
    void merge(const ReachGrid& other);
    bool same_occupancy(const ReachGrid& other) const;
    /// Overrides the cached cell-center coordinates (used by the CSV reader so
    /// that re-serialization reproduces the input bytes).
    void set_cell_centers(std::vector<double> xs, std::vector<double> ys);

private:
    std::size_t index(int i, int j) const;
    GridWindow window_;
    double res_;
    int nx_, ny_;
    std::vector<long> counts_;
    std::vector<double> xs_, ys_; // cell centers per axis
};

struct ReachParams {
    double horizon = 1.0;
    int max_letters = 1;
    long samples = 1;
    GridWindow window{};
    double resolution = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
    double step = 1e-2; // integration step for non-constant generators
};

/// Occupancy under-approximation of the attainable set: random words with
/// nonnegative durations summing to at most the horizon, endpoints plus
/// trajectory samples rasterized.  Deterministic given the seed.
ReachGrid attainable_set(const ControlSystem& system, const Vec& q0,
                         const ReachParams& params);

/// Same with signed durations in [-horizon, horizon] per word.
ReachGrid orbit_set(const ControlSystem& system, const Vec& q0,
                    const ReachParams& params);

/// Numerical rank of the span of the fields and their iterated brackets at x,
/// brackets via finite-difference Jacobians.
int lie_rank(const std::vector<VectorField>& fields, const Vec& x, int depth);

struct GridCompare {
    double false_positive_rate = 0.0;
    double false_negative_rate = 0.0;
    double agreement = 1.0;
    long cells_considered = 0;
};

/// Agreement report against a cell-center oracle, excluding cells within
/// `boundary_band` of the oracle's decision boundary.
GridCompare compare_grid(const ReachGrid& grid,
                         const std::function<bool(double, double)>& oracle,
                         double boundary_band);

/// CSV schema: header i,j,x_center,y_center,occupied,samples.
void write_grid_csv(std::ostream& os, const ReachGrid& grid);
ReachGrid read_grid_csv(std::istream& is);

} // namespace finsler
