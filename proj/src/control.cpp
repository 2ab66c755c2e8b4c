#include "finsler/control.hpp"

#include "finsler/submersion.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace finsler {

namespace {

// Counter-based generator: every word draws from its own splitmix64 stream
// keyed by (seed, word index), so sampling is deterministic under any thread
// partition.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { // in (0, 1)
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }
    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (index + 1)));
    return g.next();
}

/// Random word with horizon-independent exponential letter durations, clipped
/// to the remaining horizon budget in path order.  A larger horizon therefore
/// only ever extends the sampled trajectory, which makes grid occupancy
/// monotone in the horizon at a fixed seed.
Word sample_word(SplitMix64& rng, int generator_count, int max_letters,
                 double horizon) {
    constexpr double kMeanDuration = 1.5;
    Word word;
    word.mode = WordMode::Attainable;
    const int letters = rng.uniform_int(1, max_letters);
    double budget = horizon;
    for (int i = 0; i < letters && budget > 0.0; ++i) {
        const int gen = rng.uniform_int(0, generator_count - 1);
        double d = -kMeanDuration * std::log(rng.uniform());
        bool clipped = false;
        if (d >= budget) {
            d = budget;
            clipped = true;
        }
        budget -= d;
        word.letters.push_back({gen, d, clipped});
    }
    return word;
}

Word flip_signs(const Word& word, SplitMix64& sign_rng) {
    Word out = word;
    out.mode = WordMode::Orbit;
    for (Letter& l : out.letters)
        if (sign_rng.uniform() < 0.5) l.duration = -l.duration;
    return out;
}

} // namespace

void Word::validate(int generator_count) const {
    for (const Letter& l : letters) {
        if (l.generator < 0 || l.generator >= generator_count)
            throw std::invalid_argument("word: generator index out of range");
        if (mode == WordMode::Attainable && l.duration < 0.0)
            throw std::invalid_argument("word: attainable mode rejects negative durations");
        if (!std::isfinite(l.duration))
            throw std::invalid_argument("word: non-finite duration");
    }
}

ControlSystem make_control_system(const Scene& scene, int fan_directions) {
    ControlSystem sys;
    sys.scene = scene;
    if (scene.name == "cone_r2" || scene.name == "torus") {
        Generator f1, f2;
        f1.constant = f2.constant = true;
        f1.const_value = (Vec(2) << 1.0, 0.5).finished();
        f2.const_value = (Vec(2) << -1.0, 0.5).finished();
        f1.label = "f1";
        f2.label = "f2";
        sys.generators = {f1, f2};
        return sys;
    }
    if (!scene.submersion)
        throw std::invalid_argument("make_control_system: scene has no submersion and no "
                                    "registry generators");
    const int k = scene.submersion->base_dim;
    std::vector<Vec> dirs;
    if (k == 1) {
        dirs.push_back((Vec(1) << 1.0).finished());
        dirs.push_back((Vec(1) << -1.0).finished());
    } else {
        for (int i = 0; i < fan_directions; ++i) {
            const double th = 2.0 * M_PI * i / fan_directions;
            Vec d = Vec::Zero(k);
            d[0] = std::cos(th);
            d[1] = std::sin(th);
            dirs.push_back(d);
        }
    }
    Scene sc = scene;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        Generator g;
        Vec b = dirs[i];
        g.field = [sc, b](const Vec& x) {
            const Vec base = b / randers_norm(sc.submersion->base_datum_at(
                                                  x.head(sc.submersion->base_dim)),
                                              b);
            return horizontal_lift_vector(sc, x, base);
        };
        g.label = "lift" + std::to_string(i);
        sys.generators.push_back(g);
    }
    return sys;
}

void certify_control_system(const ControlSystem& system, int probes,
                            std::uint64_t seed, double tol_norm,
                            double tol_horizontal) {
    SplitMix64 rng(seed);
    const Scene& sc = system.scene;
    for (int p = 0; p < probes; ++p) {
        Vec x(sc.dim);
        for (int i = 0; i < sc.dim; ++i) x[i] = 4.0 * rng.uniform() - 2.0;
        if (sc.topology == Topology::Torus) x = sc.wrap(x);
        if (!sc.in_chart(x)) continue;
        for (const Generator& g : system.generators) {
            const Vec v = g.eval(x);
            const double F = randers_norm(sc.datum_at(x), v);
            if (std::abs(F - 1.0) > tol_norm)
                throw std::runtime_error("control system: generator is not unit, F = " +
                                         std::to_string(F));
            if (sc.submersion && !is_horizontal(sc, {x, v}, tol_horizontal))
                throw std::runtime_error("control system: generator is not horizontal");
        }
    }
}

Vec apply_word(const ControlSystem& system, const Vec& q0, const Word& word,
               double step, const std::function<void(const Vec&)>* visit) {
    word.validate(static_cast<int>(system.generators.size()));
    Vec x = q0;
    if (visit) (*visit)(x);
    for (const Letter& l : word.letters) {
        const Generator& gen = system.generators[l.generator];
        const double T = l.duration;
        if (T == 0.0) continue;
        if (gen.constant) {
            if (visit) {
                // Fixed arc-length sample comb from the segment start, so a
                // clipped letter's samples are a subset of the full letter's.
                const double speed = std::max(gen.const_value.norm(), 1e-12);
                const double dt = std::max(step, 1e-9) / speed;
                const long kmax = static_cast<long>(std::floor(std::abs(T) / dt - 1e-9));
                const double dir = (T < 0.0) ? -1.0 : 1.0;
                for (long k = 1; k <= kmax; ++k)
                    (*visit)(x + dir * (k * dt) * gen.const_value);
            }
            x += T * gen.const_value;
            if (visit && !l.clipped) (*visit)(x);
        } else {
            const double dir = (T < 0.0) ? -1.0 : 1.0;
            const long nsteps = static_cast<long>(std::ceil(std::abs(T) / step - 1e-12));
            for (long i = 0; i < nsteps; ++i) {
                const double h = dir * std::min(step, std::abs(T) - i * step);
                const Vec k1 = gen.field(x);
                const Vec k2 = gen.field(x + 0.5 * h * k1);
                const Vec k3 = gen.field(x + 0.5 * h * k2);
                const Vec k4 = gen.field(x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if (visit) (*visit)(x);
            }
        }
    }
    return x;
}

ReachGrid::ReachGrid(GridWindow window, double resolution)
    : window_(window), res_(resolution) {
    if (resolution <= 0.0 || window.x1 <= window.x0 || window.y1 <= window.y0)
        throw std::invalid_argument("ReachGrid: malformed window/resolution");
    nx_ = static_cast<int>(std::ceil((window.x1 - window.x0) / resolution - 1e-9));
    ny_ = static_cast<int>(std::ceil((window.y1 - window.y0) / resolution - 1e-9));
    counts_.assign(static_cast<std::size_t>(nx_) * ny_, 0);
    for (int i = 0; i < nx_; ++i) xs_.push_back(window_.x0 + (i + 0.5) * res_);
    for (int j = 0; j < ny_; ++j) ys_.push_back(window_.y0 + (j + 0.5) * res_);
}

void ReachGrid::set_cell_centers(std::vector<double> xs, std::vector<double> ys) {
    if (static_cast<int>(xs.size()) != nx_ || static_cast<int>(ys.size()) != ny_)
        throw std::invalid_argument("ReachGrid::set_cell_centers: size mismatch");
    xs_ = std::move(xs);
    ys_ = std::move(ys);
}

std::size_t ReachGrid::index(int i, int j) const {
    if (i < 0 || i >= nx_ || j < 0 || j >= ny_)
        throw std::out_of_range("ReachGrid: cell index out of range");
    return static_cast<std::size_t>(j) * nx_ + i;
}

void ReachGrid::mark(const Vec& p) {
    const int i = static_cast<int>(std::floor((p[0] - window_.x0) / res_));
    const int j = static_cast<int>(std::floor((p[1] - window_.y0) / res_));
    if (i < 0 || i >= nx_ || j < 0 || j >= ny_) return;
    ++counts_[static_cast<std::size_t>(j) * nx_ + i];
}

Vec ReachGrid::cell_center(int i, int j) const {
    index(i, j);
    return (Vec(2) << xs_[i], ys_[j]).finished();
}

long ReachGrid::occupied_cells() const {
    long n = 0;
    for (long c : counts_)
        if (c > 0) ++n;
    return n;
}

double ReachGrid::occupied_fraction() const {
    return static_cast<double>(occupied_cells()) / static_cast<double>(counts_.size());
}

void ReachGrid::merge(const ReachGrid& other) {
    if (other.nx_ != nx_ || other.ny_ != ny_)
        throw std::invalid_argument("ReachGrid::merge: geometry mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

bool ReachGrid::same_occupancy(const ReachGrid& other) const {
    if (other.nx_ != nx_ || other.ny_ != ny_) return false;
    for (std::size_t i = 0; i < counts_.size(); ++i)
        if ((counts_[i] > 0) != (other.counts_[i] > 0)) return false;
    return true;
}

namespace {

ReachGrid run_reach(const ControlSystem& system, const Vec& q0,
                    const ReachParams& params, WordMode mode) {
    if (params.horizon <= 0.0 || params.max_letters < 1 || params.samples < 0)
        throw std::invalid_argument("reach: horizon > 0, max_letters >= 1, samples >= 0 required");
    const Scene& sc = system.scene;
    const int gens = static_cast<int>(system.generators.size());
    const double spacing = 0.5 * params.resolution;

    constexpr std::uint64_t kSignSalt = 0x5851f42d4c957f2dULL;
    auto run_range = [&](long lo, long hi, ReachGrid& grid) {
        std::function<void(const Vec&)> visit = [&](const Vec& p) {
            grid.mark(sc.topology == Topology::Torus ? sc.wrap(p) : p);
        };
        const double step = std::min(spacing, params.step);
        for (long widx = lo; widx < hi; ++widx) {
            SplitMix64 rng(mix_key(params.seed, static_cast<std::uint64_t>(widx)));
            const Word word = sample_word(rng, gens, params.max_letters, params.horizon);
            apply_word(system, q0, word, step, &visit);
            if (mode == WordMode::Orbit) {
                // The unsigned word above keeps attainable occupancy a subset
                // of orbit occupancy at equal seeds; this adds signed times.
                SplitMix64 srng(mix_key(params.seed ^ kSignSalt,
                                        static_cast<std::uint64_t>(widx)));
                apply_word(system, q0, flip_signs(word, srng), step, &visit);
            }
        }
    };

    const int threads = std::max(1, params.threads);
    ReachGrid grid(params.window, params.resolution);
    grid.mark(sc.topology == Topology::Torus ? sc.wrap(q0) : q0);
    if (threads == 1 || params.samples < 2 * threads) {
        run_range(0, params.samples, grid);
        return grid;
    }
    std::vector<ReachGrid> parts(threads, ReachGrid(params.window, params.resolution));
    std::vector<std::thread> pool;
    const long chunk = (params.samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min<long>(params.samples, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, t] { run_range(lo, hi, parts[t]); });
    }
    for (auto& th : pool) th.join();
    for (const auto& part : parts) grid.merge(part);
    return grid;
}

} // namespace

ReachGrid attainable_set(const ControlSystem& system, const Vec& q0,
                         const ReachParams& params) {
    return run_reach(system, q0, params, WordMode::Attainable);
}

ReachGrid orbit_set(const ControlSystem& system, const Vec& q0,
                    const ReachParams& params) {
    return run_reach(system, q0, params, WordMode::Orbit);
}

int lie_rank(const std::vector<VectorField>& fields, const Vec& x, int depth) {
    if (depth < 1) throw std::invalid_argument("lie_rank: depth >= 1 required");
    constexpr double fd = 1e-5;
    const int n = static_cast<int>(x.size());

    auto jacobian = [n](const VectorField& f, const Vec& p) {
        Mat J(n, n);
        for (int k = 0; k < n; ++k) {
            Vec pp = p, pm = p;
            pp[k] += fd;
            pm[k] -= fd;
            J.col(k) = (f(pp) - f(pm)) / (2.0 * fd);
        }
        return J;
    };
    auto bracket = [jacobian](const VectorField& f, const VectorField& g) -> VectorField {
        return [f, g, jacobian](const Vec& p) -> Vec {
            return jacobian(g, p) * f(p) - jacobian(f, p) * g(p);
        };
    };

    std::vector<VectorField> all = fields;
    std::vector<VectorField> level = fields;
    for (int d = 2; d <= depth; ++d) {
        std::vector<VectorField> next;
        for (const auto& f : fields)
            for (const auto& b : level) next.push_back(bracket(f, b));
        for (const auto& b : next) all.push_back(b);
        level = std::move(next);
    }

    Mat span(n, static_cast<int>(all.size()));
    for (std::size_t c = 0; c < all.size(); ++c) span.col(static_cast<int>(c)) = all[c](x);
    Eigen::JacobiSVD<Mat> svd(span);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-8 * sv[0]) ++rank;
    return rank;
}

GridCompare compare_grid(const ReachGrid& grid,
                         const std::function<bool(double, double)>& oracle,
                         double boundary_band) {
    GridCompare rep;
    long fp = 0, fn = 0;
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const Vec c = grid.cell_center(i, j);
            const bool want = oracle(c[0], c[1]);
            bool near_boundary = false;
            if (boundary_band > 0.0) {
                for (int a = -1; a <= 1 && !near_boundary; ++a)
                    for (int b = -1; b <= 1 && !near_boundary; ++b) {
                        if (a == 0 && b == 0) continue;
                        if (oracle(c[0] + a * boundary_band, c[1] + b * boundary_band) != want)
                            near_boundary = true;
                    }
            }
            if (near_boundary) continue;
            ++rep.cells_considered;
            const bool have = grid.occupied(i, j);
            if (have && !want) ++fp;
            if (!have && want) ++fn;
        }
    }
    if (rep.cells_considered > 0) {
        rep.false_positive_rate = static_cast<double>(fp) / rep.cells_considered;
        rep.false_negative_rate = static_cast<double>(fn) / rep.cells_considered;
        rep.agreement = 1.0 - static_cast<double>(fp + fn) / rep.cells_considered;
    }
    return rep;
}

void write_grid_csv(std::ostream& os, const ReachGrid& grid) {
    os << "i,j,x_center,y_center,occupied,samples\n";
    char buf[40];
    auto emit = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const Vec c = grid.cell_center(i, j);
            os << i << "," << j << ",";
            emit(c[0]);
            os << ",";
            emit(c[1]);
            os << "," << (grid.occupied(i, j) ? 1 : 0) << "," << grid.count(i, j) << "\n";
        }
}

ReachGrid read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("i,j,", 0) != 0)
        throw std::runtime_error("grid csv: missing header");
    struct Row {
        int i, j;
        double x, y;
        long samples;
    };
    std::vector<Row> rows;
    int maxi = -1, maxj = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Row r{};
        int occ;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d,%ld", &r.i, &r.j, &r.x, &r.y, &occ,
                        &r.samples) != 6)
            throw std::runtime_error("grid csv: malformed row");
        maxi = std::max(maxi, r.i);
        maxj = std::max(maxj, r.j);
        rows.push_back(r);
    }
    if (rows.size() < 2) throw std::runtime_error("grid csv: too few rows");
    const double res = rows[1].x - rows[0].x;
    GridWindow w{rows[0].x - 0.5 * res, rows[0].x - 0.5 * res + (maxi + 1) * res,
                 rows[0].y - 0.5 * res, rows[0].y - 0.5 * res + (maxj + 1) * res};
    ReachGrid grid(w, res);
    std::vector<double> xs(maxi + 1, 0.0), ys(maxj + 1, 0.0);
    for (const Row& r : rows) {
        xs[r.i] = r.x;
        ys[r.j] = r.y;
    }
    grid.set_cell_centers(std::move(xs), std::move(ys));
    for (const Row& r : rows)
        for (long s = 0; s < r.samples; ++s)
            grid.mark(grid.cell_center(r.i, r.j));
    return grid;
}

} // namespace finsler
