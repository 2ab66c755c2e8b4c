#include "finsler/submersion.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace finsler {

namespace {

const SubmersionSpec& require_submersion(const Scene& scene) {
    if (!scene.submersion)
        throw std::invalid_argument("scene '" + scene.name + "' carries no submersion");
    return *scene.submersion;
}

Vec assemble(const Vec& b, const Vec& z) {
    Vec v(b.size() + z.size());
    v << b, z;
    return v;
}

} // namespace

std::vector<Vec> vertical_basis(const Scene& scene, const Vec& x) {
    const auto& sub = require_submersion(scene);
    (void)x; // ker(d rho) is constant for coordinate projections
    std::vector<Vec> basis;
    for (int j = sub.base_dim; j < scene.dim; ++j) {
        Vec e = Vec::Zero(scene.dim);
        e[j] = 1.0;
        basis.push_back(e);
    }
    return basis;
}

bool is_horizontal(const Scene& scene, const PhaseState& s, double tol) {
    require_submersion(scene);
    if (s.v.norm() == 0.0) throw std::domain_error("is_horizontal: zero velocity");
    const RandersDatum datum = scene.datum_at(s.x);
    const Vec p = legendre(datum, s.v); // p.e = g_v(v, e)
    const double F = randers_norm(datum, s.v);
    double worst = 0.0;
    for (const Vec& e : vertical_basis(scene, s.x))
        worst = std::max(worst, std::abs(p.dot(e)));
    return worst <= tol * F * F;
}

Vec horizontal_lift_vector(const Scene& scene, const Vec& x, const Vec& b) {
    const auto& sub = require_submersion(scene);
    if (b.norm() == 0.0) throw std::domain_error("horizontal_lift_vector: zero base vector");
    const int k = sub.base_dim;
    const int m = scene.dim - k;
    const RandersDatum datum = scene.datum_at(x);

    // h-orthogonal lift as initial guess: h_zz z = -h_zb b.
    const Mat& h = datum.h();
    Vec z = h.bottomRightCorner(m, m).llt().solve(-h.bottomLeftCorner(m, k) * b);

    auto residual = [&](const Vec& zz) -> Vec {
        const Vec p = legendre(datum, assemble(b, zz));
        return p.tail(m);
    };

    Vec r = residual(z);
    const double scale = std::max(1.0, b.norm());
    for (int iter = 0; iter < 100; ++iter) {
        if (r.norm() <= 1e-13 * scale) break;
        // FD Jacobian of the orthogonality residual in the fiber coordinates.
        Mat jac(m, m);
        const double fd = 1e-7 * scale;
        for (int j = 0; j < m; ++j) {
            Vec zp = z, zm = z;
            zp[j] += fd;
            zm[j] -= fd;
            jac.col(j) = (residual(zp) - residual(zm)) / (2.0 * fd);
        }
        const Vec dz = jac.fullPivLu().solve(-r);
        double lambda = 1.0;
        Vec znew, rnew;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            znew = z + lambda * dz;
            rnew = residual(znew);
            if (rnew.norm() < r.norm()) { accepted = true; break; }
            lambda *= 0.5;
        }
        if (!accepted) break;
        z = znew;
        r = rnew;
    }
    if (r.norm() > 1e-9 * scale) {
        std::ostringstream os;
        os << "horizontal_lift_vector: stalled at residual " << r.norm();
        throw std::runtime_error(os.str());
    }
    const Vec v = assemble(b, z);
    // Certify the Finsler-submersion norm identity F(v) = F*(b).
    const double F = randers_norm(datum, v);
    const double Fstar = randers_norm(sub.base_datum_at(x.head(k)), b);
    if (std::abs(F - Fstar) > 1e-8 * std::max(1.0, Fstar)) {
        std::ostringstream os;
        os << "horizontal_lift_vector: norm mismatch F=" << F << " F*=" << Fstar;
        throw std::runtime_error(os.str());
    }
    return v;
}

Trajectory horizontal_lift_geodesic(const Scene& scene, const Vec& x0,
                                    const Trajectory& base_traj) {
    const auto& sub = require_submersion(scene);
    if (base_traj.size() < 2)
        throw std::invalid_argument("horizontal_lift_geodesic: base trajectory too short");
    const Vec v0 = horizontal_lift_vector(scene, x0, base_traj.front().v);
    const double T = base_traj.times.back() - base_traj.times.front();
    const double step = base_traj.times[1] - base_traj.times[0];
    Trajectory lift = integrate_geodesic(scene, {x0, v0}, T, step);
    const std::size_t n = std::min(lift.size(), base_traj.size());
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dev = std::max(dev, (lift.states[i].x.head(sub.base_dim) -
                             base_traj.states[i].x).norm());
    if (dev > 1e-5) {
        std::ostringstream os;
        os << "horizontal_lift_geodesic: projection deviates from base by " << dev;
        throw std::runtime_error(os.str());
    }
    return lift;
}

double submersion_ball_check(const Scene& scene, const Vec& x, int samples) {
    const auto& sub = require_submersion(scene);
    if (samples < 16) throw std::invalid_argument("submersion_ball_check: samples >= 16 required");
    const int k = sub.base_dim;
    const RandersDatum base = sub.base_datum_at(x.head(k));

    std::vector<Vec> dirs;
    if (k == 1) {
        dirs.push_back((Vec(1) << 1.0).finished());
        dirs.push_back((Vec(1) << -1.0).finished());
    } else if (k == 2) {
        for (int i = 0; i < samples; ++i) {
            const double th = 2.0 * M_PI * i / samples;
            dirs.push_back((Vec(2) << std::cos(th), std::sin(th)).finished());
        }
    } else {
        throw std::invalid_argument("submersion_ball_check: base dimension above 2 unsupported");
    }

    // The projected unit ball's radial extent along u is 1 / min_fiber F(u + z),
    // and the fiber minimum is attained at the horizontal lift.
    double dev = 0.0;
    for (const Vec& u : dirs) {
        const Vec lift = horizontal_lift_vector(scene, x, u);
        const double r = 1.0 / randers_norm(scene.datum_at(x), lift);
        const double rstar = 1.0 / randers_norm(base, u);
        dev = std::max(dev, std::abs(r - rstar));
    }
    return dev;
}

} // namespace finsler
