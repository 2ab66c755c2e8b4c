#include "finsler/control.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace finsler;

namespace {

GridWindow cone_window() { return {-2.0, 2.0, -0.25, 2.75}; }

ReachParams small_params() {
    ReachParams p;
    p.horizon = 4.0;
    p.max_letters = 3;
    p.samples = 1500;
    p.window = cone_window();
    p.resolution = 0.1;
    p.seed = 11;
    return p;
}

bool subset(const ReachGrid& a, const ReachGrid& b) {
    for (int j = 0; j < a.ny(); ++j)
        for (int i = 0; i < a.nx(); ++i)
            if (a.occupied(i, j) && !b.occupied(i, j)) return false;
    return true;
}

} // namespace

TEST_SUITE_BEGIN("control");

TEST_CASE("registry control families certify as unit horizontal fields") {
    for (const char* name : {"cone_r2", "torus", "sin_wind_r3"}) {
        const ControlSystem sys = make_control_system(scenario(name));
        CHECK(sys.generators.size() >= 2);
        CHECK_NOTHROW(certify_control_system(sys, 100, 17));
    }
    CHECK_THROWS_AS(make_control_system(scenario("euclidean", 2)), std::invalid_argument);
}

TEST_CASE("word application on commuting constant fields") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    Word w;
    w.letters = {{0, 1.0, false}, {1, 1.0, false}};
    const Vec end = apply_word(sys, Vec::Zero(2), w, 1e-2);
    CHECK(end[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(end[1] == doctest::Approx(1.0).epsilon(1e-14));

    const Word empty;
    CHECK((apply_word(sys, Vec::Zero(2), empty, 1e-2) - Vec::Zero(2)).norm() == 0.0);

    Word neg;
    neg.letters = {{0, -1.0, false}};
    CHECK_THROWS_AS(neg.validate(2), std::invalid_argument);
    neg.mode = WordMode::Orbit;
    CHECK_NOTHROW(neg.validate(2));
    Word bad;
    bad.letters = {{5, 1.0, false}};
    CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
}

TEST_CASE("torus words wrap through the cover") {
    const ControlSystem sys = make_control_system(scenario("torus"));
    Word w;
    w.letters = {{0, 2.0, false}};
    const Vec end = sys.scene.wrap(apply_word(sys, Vec::Zero(2), w, 1e-2));
    CHECK(end.norm() <= 1e-12); // (2, 1) wraps to the origin
}

TEST_CASE("grid geometry and marking") {
    ReachGrid g({0.0, 1.0, 0.0, 0.5}, 0.1);
    CHECK(g.nx() == 10);
    CHECK(g.ny() == 5);
    g.mark((Vec(2) << 0.31, 0.27).finished());
    g.mark((Vec(2) << 0.31, 0.27).finished());
    CHECK(g.occupied(3, 2));
    CHECK(g.count(3, 2) == 2);
    CHECK(g.occupied_cells() == 1);
    g.mark((Vec(2) << 5.0, 5.0).finished()); // outside: ignored
    CHECK(g.occupied_cells() == 1);
    const Vec c = g.cell_center(3, 2);
    CHECK(c[0] == doctest::Approx(0.35));
    CHECK(c[1] == doctest::Approx(0.25));
    CHECK_THROWS_AS(ReachGrid({1.0, 0.0, 0.0, 1.0}, 0.1), std::invalid_argument);
}

TEST_CASE("determinism: same seed gives identical grids, thread count irrelevant") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p = small_params();
    const ReachGrid a = attainable_set(sys, Vec::Zero(2), p);
    p.threads = 4;
    const ReachGrid b = attainable_set(sys, Vec::Zero(2), p);
    std::ostringstream sa, sb;
    write_grid_csv(sa, a);
    write_grid_csv(sb, b);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("attainable occupancy is monotone in samples and horizon") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p = small_params();
    const ReachGrid big = attainable_set(sys, Vec::Zero(2), p);
    p.samples = 600;
    const ReachGrid fewer = attainable_set(sys, Vec::Zero(2), p);
    CHECK(subset(fewer, big));
    p.samples = 1500;
    p.horizon = 2.0;
    const ReachGrid shorter = attainable_set(sys, Vec::Zero(2), p);
    CHECK(subset(shorter, big));
    CHECK(shorter.occupied_cells() < big.occupied_cells());
}

TEST_CASE("attainable cells stay inside the cone and inside the orbit") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    const ReachParams p = small_params();
    const ReachGrid att = attainable_set(sys, Vec::Zero(2), p);
    for (int j = 0; j < att.ny(); ++j)
        for (int i = 0; i < att.nx(); ++i)
            if (att.occupied(i, j)) {
                const Vec c = att.cell_center(i, j);
                CHECK(c[1] >= std::abs(c[0]) / 2.0 - p.resolution);
            }
    const ReachGrid orb = orbit_set(sys, Vec::Zero(2), p);
    CHECK(subset(att, orb));
    CHECK(orb.occupied_cells() > att.occupied_cells()); // below-cone cells exist
}

TEST_CASE("zero samples leaves only the starting cell") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p = small_params();
    p.samples = 0;
    const ReachGrid g = attainable_set(sys, Vec::Zero(2), p);
    CHECK(g.occupied_cells() == 1);
}

TEST_CASE("bracket ranks of textbook families") {
    const Vec f1 = (Vec(2) << 1.0, 0.5).finished();
    const Vec f2 = (Vec(2) << -1.0, 0.5).finished();
    std::vector<VectorField> cone = {[f1](const Vec&) { return f1; },
                                     [f2](const Vec&) { return f2; }};
    CHECK(lie_rank(cone, Vec::Zero(2), 1) == 2);
    std::vector<VectorField> single = {[f1](const Vec&) { return f1; }};
    CHECK(lie_rank(single, (Vec(2) << 0.4, -1.0).finished(), 5) == 1);

    // {d/dx, x d/dy}: the bracket d/dy appears at depth 2.
    std::vector<VectorField> heis = {
        [](const Vec&) { return (Vec(2) << 1.0, 0.0).finished(); },
        [](const Vec& x) { return (Vec(2) << 0.0, x[0]).finished(); }};
    CHECK(lie_rank(heis, Vec::Zero(2), 1) == 1);
    CHECK(lie_rank(heis, Vec::Zero(2), 2) == 2);
    CHECK_THROWS_AS(lie_rank(heis, Vec::Zero(2), 0), std::invalid_argument);
}

TEST_CASE("grid comparison against oracles") {
    ReachGrid g({0.0, 1.0, 0.0, 1.0}, 0.1);
    auto oracle = [](double x, double) { return x < 0.5; };
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec c = g.cell_center(i, j);
            if (oracle(c[0], c[1])) g.mark(c);
        }
    const GridCompare exact = compare_grid(g, oracle, 0.0);
    CHECK(exact.agreement == doctest::Approx(1.0));
    CHECK(exact.cells_considered == 100);
    const GridCompare banded = compare_grid(g, oracle, 0.15);
    CHECK(banded.cells_considered < 100);
    CHECK(banded.agreement == doctest::Approx(1.0));

    const ReachGrid empty({0.0, 1.0, 0.0, 1.0}, 0.1);
    CHECK(compare_grid(empty, [](double, double) { return false; }, 0.0).agreement ==
          doctest::Approx(1.0));
}

TEST_CASE("grid csv round-trips byte for byte") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p = small_params();
    p.samples = 200;
    const ReachGrid g = attainable_set(sys, Vec::Zero(2), p);
    std::ostringstream first;
    write_grid_csv(first, g);
    std::istringstream in(first.str());
    const ReachGrid back = read_grid_csv(in);
    std::ostringstream second;
    write_grid_csv(second, back);
    CHECK(first.str() == second.str());
    CHECK(first.str().rfind("i,j,x_center,y_center,occupied,samples\n", 0) == 0);
}

TEST_CASE("parameter validation") {
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p = small_params();
    p.horizon = -1.0;
    CHECK_THROWS_AS(attainable_set(sys, Vec::Zero(2), p), std::invalid_argument);
    p = small_params();
    p.max_letters = 0;
    CHECK_THROWS_AS(attainable_set(sys, Vec::Zero(2), p), std::invalid_argument);
}

TEST_SUITE_END();
