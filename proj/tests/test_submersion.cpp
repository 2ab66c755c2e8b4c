#include "finsler/submersion.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace finsler;

TEST_SUITE_BEGIN("submersion");

TEST_CASE("vertical basis spans the fiber directions") {
    const Scene sc = scenario("sin_wind_r3");
    const auto basis = vertical_basis(sc, Vec::Zero(3));
    REQUIRE(basis.size() == 1);
    CHECK((basis[0] - Vec::Unit(3, 2)).norm() == 0.0);
    CHECK(vertical_basis(scenario("cone_r2"), Vec::Zero(2)).size() == 1);
    CHECK_THROWS_AS(vertical_basis(scenario("euclidean", 2), Vec::Zero(2)),
                    std::invalid_argument);
}

TEST_CASE("horizontality of the drift control directions") {
    const Scene sc = scenario("cone_r2");
    CHECK(is_horizontal(sc, {Vec::Zero(2), (Vec(2) << 1.0, 0.5).finished()}, 1e-10));
    CHECK(is_horizontal(sc, {Vec::Zero(2), (Vec(2) << -1.0, 0.5).finished()}, 1e-10));
    CHECK_FALSE(is_horizontal(sc, {Vec::Zero(2), (Vec(2) << 0.0, 1.0).finished()}, 1e-6));
}

TEST_CASE("lifts on the drift plane hit the known fiber offset") {
    const Scene sc = scenario("cone_r2");
    const Vec up = horizontal_lift_vector(sc, Vec::Zero(2), (Vec(1) << 1.0).finished());
    CHECK(up[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up[1] == doctest::Approx(0.5).epsilon(1e-10));
    const Vec down = horizontal_lift_vector(sc, Vec::Zero(2), (Vec(1) << -1.0).finished());
    CHECK(down[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(down[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("lift of the base direction in the sinusoidal wind scene") {
    const Scene sc = scenario("sin_wind_r3");
    const Vec b = (Vec(2) << 1.0, 0.0).finished();
    const Vec v = horizontal_lift_vector(sc, Vec::Zero(3), b);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v[1]) <= 1e-10);
    CHECK(v[2] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(randers_norm(sc.datum_at(Vec::Zero(3)), v) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(is_horizontal(sc, {Vec::Zero(3), v}, 1e-8));
}

TEST_CASE("lift round trip: projection returns the base vector") {
    testutil::Rng rng(99);
    const Scene sc = scenario("sin_wind_r3");
    for (int k = 0; k < 25; ++k) {
        const Vec x = testutil::random_vec(rng, 3);
        Vec b = testutil::random_vec(rng, 2);
        const Vec v = horizontal_lift_vector(sc, x, b);
        CHECK((v.head(2) - b).norm() == 0.0); // d rho is the coordinate projection
        const double F = randers_norm(sc.datum_at(x), v);
        const double Fstar = randers_norm(sc.submersion->base_datum_at(x.head(2)), b);
        CHECK(F == doctest::Approx(Fstar).epsilon(1e-9));
        CHECK(is_horizontal(sc, {x, v}, 1e-8));
    }
}

TEST_CASE("fiber minimum oracle certifies the projected ball radius") {
    const Scene sc = scenario("sin_wind_r3");
    const Vec x = (Vec(3) << 0.7, -0.2, 1.1).finished();
    for (double th : {0.0, 0.9, 2.1, 4.4}) {
        const Vec u = (Vec(2) << std::cos(th), std::sin(th)).finished();
        const Vec lift = horizontal_lift_vector(sc, x, u);
        const double Flift = randers_norm(sc.datum_at(x), lift);
        double Fmin = 1e300; // dense scan over the fiber coordinate
        for (double z = -2.0; z <= 2.0; z += 1e-3) {
            const Vec v = (Vec(3) << u[0], u[1], z).finished();
            Fmin = std::min(Fmin, randers_norm(sc.datum_at(x), v));
        }
        CHECK(Flift <= Fmin + 1e-6);
        CHECK(Flift == doctest::Approx(Fmin).epsilon(1e-5));
    }
}

TEST_CASE("projected indicatrix matches the base indicatrix") {
    CHECK(submersion_ball_check(scenario("cone_r2"), Vec::Zero(2), 16) <= 1e-9);
    CHECK(submersion_ball_check(scenario("sin_wind_r3"),
                                (Vec(3) << 0.4, 0.0, -0.7).finished(), 32) <= 1e-8);
    CHECK_THROWS_AS(submersion_ball_check(scenario("cone_r2"), Vec::Zero(2), 4),
                    std::invalid_argument);
}

TEST_CASE("lifted geodesic projects onto the base geodesic") {
    const Scene sc = scenario("cone_r2");
    Trajectory base; // unit-speed base geodesic of the trivial 1-D base
    for (int i = 0; i <= 100; ++i) {
        base.times.push_back(0.01 * i);
        base.states.push_back(
            {(Vec(1) << 0.01 * i).finished(), (Vec(1) << 1.0).finished()});
    }
    const Trajectory lift = horizontal_lift_geodesic(sc, Vec::Zero(2), base);
    REQUIRE(lift.size() >= base.size());
    CHECK(lift.back().x[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(lift.back().x[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("degenerate lift inputs are rejected") {
    const Scene sc = scenario("cone_r2");
    CHECK_THROWS_AS(horizontal_lift_vector(sc, Vec::Zero(2), Vec::Zero(1)),
                    std::domain_error);
    CHECK_THROWS_AS(
        horizontal_lift_vector(scenario("euclidean", 2), Vec::Zero(2), Vec::Zero(1)),
        std::invalid_argument);
}

TEST_SUITE_END();
