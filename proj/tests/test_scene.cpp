#include "finsler/scene.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace finsler;

TEST_SUITE_BEGIN("scene");

TEST_CASE("registry contents") {
    const auto names = scenario_names();
    REQUIRE(names.size() == 5);
    for (const std::string& n : names) CHECK_NOTHROW(scenario(n));
    CHECK_THROWS_WITH_AS(scenario("bogus"),
                         doctest::Contains("valid names"), std::invalid_argument);
}

TEST_CASE("drift scene data") {
    const Scene sc = scenario("cone_r2");
    CHECK(sc.dim == 2);
    CHECK(sc.killing_wind);
    REQUIRE(sc.submersion.has_value());
    CHECK(sc.submersion->base_dim == 1);
    const RandersDatum d = sc.datum_at((Vec(2) << 0.3, -1.0).finished());
    CHECK(d.wind()[0] == 0.0);
    CHECK(d.wind()[1] == 0.5);
    CHECK((d.h() - Mat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("sinusoidal wind scene") {
    const Scene sc = scenario("sin_wind_r3");
    CHECK(sc.dim == 3);
    CHECK_FALSE(sc.killing_wind);
    const double x1 = 0.7;
    const Vec w = sc.datum_at((Vec(3) << x1, 5.0, -2.0).finished()).wind();
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == doctest::Approx(0.25 * std::sin(x1) * std::sin(x1) + 0.25).epsilon(1e-15));
    REQUIRE(sc.submersion.has_value());
    CHECK(sc.submersion->base_dim == 2);
}

TEST_CASE("torus wrapping") {
    const Scene sc = scenario("torus");
    const Vec x = (Vec(2) << 2.25, -0.5).finished();
    const Vec y = sc.wrap(x);
    CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sc.wrap((Vec(2) << 1.0, -1.0).finished()).norm() == 0.0);
    CHECK_NOTHROW(sc.datum_at((Vec(2) << 17.2, -33.9).finished()));
}

TEST_CASE("polar chart bounds on the round sphere") {
    const Scene sc = scenario("sphere2");
    CHECK_NOTHROW(sc.datum_at((Vec(2) << 1.0, 0.0).finished()));
    CHECK_THROWS_AS(sc.datum_at((Vec(2) << 0.05, 0.0).finished()), std::domain_error);
    const RandersDatum d = sc.datum_at((Vec(2) << M_PI / 2.0, 3.0).finished());
    CHECK(d.h()(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("euclidean dimension knob") {
    CHECK(scenario("euclidean", 5).dim == 5);
    CHECK_THROWS_AS(scenario("euclidean", 0), std::invalid_argument);
}

namespace {

Trajectory sampled_curve(double T, double step) {
    Trajectory tr;
    const long n = static_cast<long>(std::llround(T / step));
    for (long i = 0; i <= n; ++i) {
        const double t = i * step;
        tr.times.push_back(t);
        tr.states.push_back({(Vec(2) << t, std::sin(t)).finished(),
                             (Vec(2) << 1.0, std::cos(t)).finished()});
    }
    return tr;
}

} // namespace

TEST_CASE("curve length: Simpson accuracy and convergence order") {
    const Scene sc = scenario("euclidean", 2);
    // Arc length of (t, sin t) over [0, 2]; reference from a very fine run.
    const double ref = curve_length(sc, sampled_curve(2.0, 1e-5));
    const double e1 = std::abs(curve_length(sc, sampled_curve(2.0, 0.05)) - ref);
    const double e2 = std::abs(curve_length(sc, sampled_curve(2.0, 0.025)) - ref);
    CHECK(e2 < e1);
    CHECK(std::log2(e1 / e2) > 3.5); // composite Simpson is 4th order
}

TEST_CASE("curve length is orientation sensitive under drift") {
    const Scene sc = scenario("cone_r2");
    Trajectory up, down;
    for (int i = 0; i <= 10; ++i) {
        const double t = 0.1 * i;
        up.times.push_back(t);
        up.states.push_back({(Vec(2) << 0.0, t).finished(), (Vec(2) << 0.0, 1.0).finished()});
        down.times.push_back(t);
        down.states.push_back(
            {(Vec(2) << 0.0, 1.0 - t).finished(), (Vec(2) << 0.0, -1.0).finished()});
    }
    CHECK(curve_length(sc, up) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(curve_length(sc, down) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_SUITE_END();
