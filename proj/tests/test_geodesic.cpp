#include "finsler/geodesic.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace finsler;

TEST_SUITE_BEGIN("geodesic");

TEST_CASE("constant data gives straight lines") {
    const Scene sc = scenario("cone_r2");
    const Vec x0 = Vec::Zero(2);
    const Vec v0 = (Vec(2) << 1.0, 0.5).finished();
    CHECK(geodesic_accel(sc, x0, v0).norm() <= 1e-9);
    const Trajectory tr = integrate_geodesic(sc, {x0, v0}, 2.0, 1e-2);
    REQUIRE(tr.size() == 201);
    const Vec end = tr.back().x;
    CHECK(end[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(end[1] == doctest::Approx(1.0).epsilon(1e-9));

    const Trajectory fast = zermelo_geodesic(sc, {x0, v0}, 2.0, 1e-2);
    REQUIRE(fast.size() == tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i)
        CHECK((tr.states[i].x - fast.states[i].x).norm() <= 1e-9);
}

TEST_CASE("fast path requires a Killing wind") {
    CHECK_THROWS_AS(zermelo_geodesic(scenario("sin_wind_r3"),
                                     {Vec::Zero(3), (Vec(3) << 1.0, 0.0, 0.25).finished()},
                                     1.0, 1e-2),
                    std::invalid_argument);
}

TEST_CASE("backward integration is stored with increasing times") {
    const Scene sc = scenario("cone_r2");
    const Trajectory tr =
        integrate_geodesic(sc, {Vec::Zero(2), (Vec(2) << 1.0, 0.5).finished()}, -1.0, 1e-2);
    CHECK(tr.times.front() == doctest::Approx(-1.0));
    CHECK(tr.times.back() == doctest::Approx(0.0));
    CHECK(tr.front().x[0] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("sphere geodesics stay on a great circle at unit speed") {
    const Scene sc = scenario("sphere2");
    const Vec x0 = (Vec(2) << M_PI / 2.0, 0.0).finished();
    const Vec v0 = (Vec(2) << 0.4, 0.9).finished();
    const Trajectory tr = integrate_geodesic(sc, {x0, v0}, 1.5, 1e-3);
    REQUIRE(!tr.truncated);
    auto embed = [](const Vec& x) {
        return Eigen::Vector3d(std::sin(x[0]) * std::cos(x[1]),
                               std::sin(x[0]) * std::sin(x[1]), std::cos(x[0]));
    };
    auto embed_vel = [](const Vec& x, const Vec& v) {
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        return Eigen::Vector3d(v[0] * ct * cp - v[1] * st * sp,
                               v[0] * ct * sp + v[1] * st * cp, -v[0] * st);
    };
    const Eigen::Vector3d normal = embed(x0).cross(embed_vel(x0, v0)).normalized();
    const double F0 = randers_norm(sc.datum_at(x0), v0);
    for (std::size_t i = 0; i < tr.size(); i += 50) {
        CHECK(std::abs(normal.dot(embed(tr.states[i].x))) <= 1e-6);
        CHECK(randers_norm(sc.datum_at(tr.states[i].x), tr.states[i].v) ==
              doctest::Approx(F0).epsilon(1e-8));
    }
}

TEST_CASE("integrator converges at fourth order") {
    const Scene sc = scenario("sphere2");
    const PhaseState s0{(Vec(2) << M_PI / 2.0, 0.0).finished(),
                        (Vec(2) << 0.3, 1.0).finished()};
    const Vec ref = integrate_geodesic(sc, s0, 1.0, 5e-4).back().x;
    const double e1 = (integrate_geodesic(sc, s0, 1.0, 8e-3).back().x - ref).norm();
    const double e2 = (integrate_geodesic(sc, s0, 1.0, 4e-3).back().x - ref).norm();
    CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("chart exit truncates the trajectory") {
    const Scene sc = scenario("sphere2");
    const PhaseState s0{(Vec(2) << 0.3, 0.0).finished(), (Vec(2) << -1.0, 0.0).finished()};
    const Trajectory tr = integrate_geodesic(sc, s0, 2.0, 1e-3);
    CHECK(tr.truncated);
    CHECK(tr.times.back() < 2.0);
}

TEST_CASE("jacobi operator estimate matches constant curvature") {
    const Scene sph = scenario("sphere2");
    const PhaseState s{(Vec(2) << M_PI / 2.0, 0.0).finished(),
                       (Vec(2) << 0.0, 1.0).finished()};
    const Vec u = (Vec(2) << 1.0, 0.0).finished();
    const Vec Ru = estimate_jacobi_operator(sph, s, u, 0.0);
    CHECK(Ru[0] == doctest::Approx(1.0).epsilon(2e-2)); // K = 1: R(u) = u
    CHECK(std::abs(Ru[1]) <= 1e-2);

    const Scene euc = scenario("euclidean", 2);
    const Vec Re = estimate_jacobi_operator(
        euc, {Vec::Zero(2), (Vec(2) << 1.0, 0.0).finished()},
        (Vec(2) << 0.0, 1.0).finished(), 0.0);
    CHECK(Re.norm() <= 1e-3);
}

TEST_CASE("flag curvature rejects degenerate flags") {
    const Scene sc = scenario("euclidean", 2);
    const Vec v = (Vec(2) << 1.0, 0.0).finished();
    CHECK_THROWS_AS(flag_curvature(sc, {Vec::Zero(2), v}, 2.0 * v, 0.0), std::domain_error);
}

TEST_CASE("volume ratio near one for a short euclidean flow") {
    const Scene sc = scenario("euclidean", 2);
    const double D =
        liouville_volume_check(sc, {Vec::Zero(2), (Vec(2) << 0.7, 0.2).finished()}, 1.0);
    CHECK(D == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trajectory csv round-trips byte for byte") {
    const Scene sc = scenario("cone_r2");
    const Trajectory tr =
        integrate_geodesic(sc, {Vec::Zero(2), (Vec(2) << 1.0, 0.5).finished()}, 0.5, 1e-2);
    std::ostringstream first;
    write_trajectory_csv(first, tr);
    std::istringstream in(first.str());
    const Trajectory back = read_trajectory_csv(in);
    std::ostringstream second;
    write_trajectory_csv(second, back);
    CHECK(first.str() == second.str());
    CHECK(first.str().rfind("t,x1,x2,v1,v2\n", 0) == 0);
}

TEST_CASE("zero velocity and bad steps are rejected") {
    const Scene sc = scenario("euclidean", 2);
    CHECK_THROWS_AS(integrate_geodesic(sc, {Vec::Zero(2), Vec::Zero(2)}, 1.0, 1e-2),
                    std::domain_error);
    CHECK_THROWS_AS(
        integrate_geodesic(sc, {Vec::Zero(2), (Vec(2) << 1.0, 0.0).finished()}, 1.0, 0.0),
        std::invalid_argument);
}

TEST_SUITE_END();
