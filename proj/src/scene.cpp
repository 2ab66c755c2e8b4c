#include "finsler/scene.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace finsler {

Vec Scene::wrap(const Vec& x) const {
    if (topology != Topology::Torus) return x;
    Vec y = x;
    for (int i = 0; i < dim; ++i) {
        const double p = periods[i];
        y[i] = std::fmod(x[i], p);
        if (y[i] < 0.0) y[i] += p;
        if (y[i] >= p) y[i] = 0.0; // fmod rounding at the seam
    }
    return y;
}

bool Scene::in_chart(const Vec& x) const {
    return !chart_ok || chart_ok(x);
}

RandersDatum Scene::datum_at(const Vec& x) const {
    const Vec y = wrap(x);
    if (!in_chart(y)) {
        std::ostringstream os;
        os << "scene '" << name << "': point outside chart domain";
        throw std::domain_error(os.str());
    }
    return RandersDatum(h_field(y), w_field(y));
}

namespace {

Scene make_cone_r2() {
    Scene s;
    s.name = "cone_r2";
    s.dim = 2;
    s.h_field = [](const Vec&) { return Mat::Identity(2, 2); };
    s.w_field = [](const Vec&) { return (Vec(2) << 0.0, 0.5).finished(); };
    s.killing_wind = true;
    SubmersionSpec sub;
    sub.base_dim = 1;
    sub.base_h = [](const Vec&) { return Mat::Identity(1, 1); };
    sub.base_w = [](const Vec&) { return Vec::Zero(1); };
    s.submersion = sub;
    return s;
}

Scene make_torus() {
    Scene s = make_cone_r2();
    s.name = "torus";
    s.topology = Topology::Torus;
    s.periods = (Vec(2) << 1.0, 1.0).finished();
    return s;
}

Scene make_sin_wind_r3() {
    Scene s;
    s.name = "sin_wind_r3";
    s.dim = 3;
    s.h_field = [](const Vec&) { return Mat::Identity(3, 3); };
    s.w_field = [](const Vec& x) {
        const double sn = std::sin(x[0]);
        return (Vec(3) << 0.0, 0.0, 0.25 * sn * sn + 0.25).finished();
    };
    SubmersionSpec sub;
    sub.base_dim = 2;
    sub.base_h = [](const Vec&) { return Mat::Identity(2, 2); };
    sub.base_w = [](const Vec&) { return Vec::Zero(2); };
    s.submersion = sub;
    return s;
}

Scene make_euclidean(int dim) {
    if (dim < 1) throw std::invalid_argument("euclidean scene: dim must be positive");
    Scene s;
    s.name = "euclidean";
    s.dim = dim;
    s.h_field = [dim](const Vec&) { return Mat::Identity(dim, dim); };
    s.w_field = [dim](const Vec&) { return Vec::Zero(dim); };
    s.killing_wind = true;
    return s;
}

Scene make_sphere2() {
    // Round 2-sphere in the polar chart (theta, phi), a 0.1 band excluded at
    // the poles.
    Scene s;
    s.name = "sphere2";
    s.dim = 2;
    s.h_field = [](const Vec& x) {
        Mat h = Mat::Identity(2, 2);
        const double sn = std::sin(x[0]);
        h(1, 1) = sn * sn;
        return h;
    };
    s.w_field = [](const Vec&) { return Vec::Zero(2); };
    s.killing_wind = true;
    s.chart_ok = [](const Vec& x) { return x[0] > 0.1 && x[0] < M_PI - 0.1; };
    return s;
}

} // namespace

std::vector<std::string> scenario_names() {
    return {"cone_r2", "torus", "sin_wind_r3", "euclidean", "sphere2"};
}

Scene scenario(const std::string& name, int dim) {
    if (name == "cone_r2") return make_cone_r2();
    if (name == "torus") return make_torus();
    if (name == "sin_wind_r3") return make_sin_wind_r3();
    if (name == "euclidean") return make_euclidean(dim);
    if (name == "sphere2") return make_sphere2();
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; valid names:";
    for (const auto& n : scenario_names()) os << " " << n;
    throw std::invalid_argument(os.str());
}

double curve_length(const Scene& scene, const Trajectory& traj) {
    const std::size_t n = traj.size();
    if (n < 2) throw std::invalid_argument("curve_length: need at least 2 samples");
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& st = traj.states[i];
        f[i] = randers_norm(scene.datum_at(st.x), st.v);
    }
    const std::size_t intervals = n - 1;
    const std::size_t pairs = intervals / 2;
    double total = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i = 2 * k;
        const double h1 = traj.times[i + 1] - traj.times[i];
        const double h2 = traj.times[i + 2] - traj.times[i + 1];
        const double h = 0.5 * (h1 + h2);
        total += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    }
    if (intervals % 2 == 1) {
        const std::size_t i = n - 2;
        total += 0.5 * (traj.times[i + 1] - traj.times[i]) * (f[i] + f[i + 1]);
    }
    return total;
}

} // namespace finsler
