#include "finsler/geodesic.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace finsler {

namespace {

constexpr double kSpaceFdStep = 1e-5; // x-derivatives of L and of the momentum
constexpr double kCondLimit = 1e10;

double energy(const Scene& scene, const Vec& x, const Vec& v) {
    const double F = randers_norm(scene.datum_at(x), v);
    return 0.5 * F * F;
}

struct Deriv {
    Vec xdot;
    Vec vdot;
};

Deriv phase_deriv(const Scene& scene, const Vec& x, const Vec& v) {
    return {v, geodesic_accel(scene, x, v)};
}

} // namespace

Vec geodesic_accel(const Scene& scene, const Vec& x, const Vec& v) {
    if (v.norm() == 0.0)
        throw std::domain_error("geodesic_accel: zero velocity");
    const int n = scene.dim;
    const RandersDatum datum = scene.datum_at(x);
    const Mat g = fundamental_tensor(datum, v);

    Vec dLdx(n);
    Mat dpdx(n, n); // column k: d(momentum)/dx_k
    for (int k = 0; k < n; ++k) {
        Vec xp = x, xm = x;
        xp[k] += kSpaceFdStep;
        xm[k] -= kSpaceFdStep;
        dLdx[k] = (energy(scene, xp, v) - energy(scene, xm, v)) / (2.0 * kSpaceFdStep);
        const Vec pp = legendre(scene.datum_at(xp), v);
        const Vec pm = legendre(scene.datum_at(xm), v);
        dpdx.col(k) = (pp - pm) / (2.0 * kSpaceFdStep);
    }
    const Vec rhs = dLdx - dpdx * v;

    Eigen::FullPivLU<Mat> lu(g);
    if (!lu.isInvertible())
        throw std::runtime_error("geodesic_accel: singular fundamental tensor");
    Eigen::JacobiSVD<Mat> svd(g);
    const auto& sv = svd.singularValues();
    if (sv[0] / sv[sv.size() - 1] > kCondLimit)
        throw std::runtime_error("geodesic_accel: ill-conditioned fundamental tensor");
    return lu.solve(rhs);
}

Trajectory integrate_geodesic(const Scene& scene, const PhaseState& s0,
                              double T, double step) {
    if (step <= 0.0) throw std::invalid_argument("integrate_geodesic: step must be positive");
    if (s0.v.norm() == 0.0) throw std::domain_error("integrate_geodesic: zero velocity");

    const double dir = (T < 0.0) ? -1.0 : 1.0;
    const long nsteps = (T == 0.0) ? 0 : static_cast<long>(std::ceil(std::abs(T) / step - 1e-12));
    const double h = dir * step;

    Trajectory traj;
    traj.times.reserve(nsteps + 1);
    traj.states.reserve(nsteps + 1);
    Vec x = s0.x, v = s0.v;
    traj.times.push_back(0.0);
    traj.states.push_back({x, v});
    for (long i = 0; i < nsteps; ++i) {
        try {
            const Deriv k1 = phase_deriv(scene, x, v);
            const Deriv k2 = phase_deriv(scene, x + 0.5 * h * k1.xdot, v + 0.5 * h * k1.vdot);
            const Deriv k3 = phase_deriv(scene, x + 0.5 * h * k2.xdot, v + 0.5 * h * k2.vdot);
            const Deriv k4 = phase_deriv(scene, x + h * k3.xdot, v + h * k3.vdot);
            x += h / 6.0 * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
            v += h / 6.0 * (k1.vdot + 2.0 * k2.vdot + 2.0 * k3.vdot + k4.vdot);
        } catch (const std::domain_error&) {
            traj.truncated = true; // chart exit
            break;
        }
        if (!x.allFinite() || !v.allFinite())
            throw std::runtime_error("integrate_geodesic: numeric blowup");
        if (!scene.in_chart(scene.wrap(x))) {
            traj.truncated = true;
            break;
        }
        traj.times.push_back(static_cast<double>(i + 1) * h);
        traj.states.push_back({x, v});
    }
    if (dir < 0.0) { // store with increasing times
        std::reverse(traj.times.begin(), traj.times.end());
        std::reverse(traj.states.begin(), traj.states.end());
    }
    return traj;
}

Trajectory zermelo_geodesic(const Scene& scene, const PhaseState& s0,
                            double T, double step) {
    if (!scene.killing_wind)
        throw std::invalid_argument("zermelo_geodesic: scene wind is not Killing for h");
    if (step <= 0.0) throw std::invalid_argument("zermelo_geodesic: step must be positive");
    // Registry Killing scenes have flat h and constant wind: the h-geodesic is
    // a straight line and the wind flow a translation, so beta(t) = x0 + t v0.
    const double dir = (T < 0.0) ? -1.0 : 1.0;
    const long nsteps = (T == 0.0) ? 0 : static_cast<long>(std::ceil(std::abs(T) / step - 1e-12));
    Trajectory traj;
    for (long i = 0; i <= nsteps; ++i) {
        const double t = static_cast<double>(i) * dir * step;
        traj.times.push_back(t);
        traj.states.push_back({s0.x + t * s0.v, s0.v});
    }
    if (dir < 0.0) {
        std::reverse(traj.times.begin(), traj.times.end());
        std::reverse(traj.states.begin(), traj.states.end());
    }
    return traj;
}

Vec estimate_jacobi_operator(const Scene& scene, const PhaseState& s,
                             const Vec& u, double t) {
    if (u.norm() == 0.0) throw std::domain_error("estimate_jacobi_operator: zero direction");
    constexpr double eps = 1e-4;   // position perturbation
    constexpr double delta = 1e-3; // second time difference

    PhaseState st = s;
    if (t != 0.0) {
        const Trajectory base = integrate_geodesic(scene, s, t, 1e-3);
        st = (t > 0.0) ? base.back() : base.front();
    }
    auto flow_pos = [&](const Vec& x0, double dt) {
        const Trajectory tr = integrate_geodesic(scene, {x0, st.v}, dt, std::abs(dt));
        return (dt > 0.0) ? tr.back().x : tr.front().x;
    };
    const Vec xp = st.x + eps * u, xm = st.x - eps * u;
    const Vec Jp = (flow_pos(xp, delta) - flow_pos(xm, delta)) / (2.0 * eps);
    const Vec Jm = (flow_pos(xp, -delta) - flow_pos(xm, -delta)) / (2.0 * eps);
    const Vec Jpp = (Jp - 2.0 * u + Jm) / (delta * delta);
    return -Jpp;
}

double flag_curvature(const Scene& scene, const PhaseState& s,
                      const Vec& u, double t) {
    PhaseState st = s;
    if (t != 0.0) {
        const Trajectory base = integrate_geodesic(scene, s, t, 1e-3);
        st = (t > 0.0) ? base.back() : base.front();
    }
    const RandersDatum datum = scene.datum_at(st.x);
    const Mat g = fundamental_tensor(datum, st.v);
    const double gvv = st.v.dot(g * st.v);
    const double guu = u.dot(g * u);
    const double gvu = st.v.dot(g * u);
    const double denom = gvv * guu - gvu * gvu;
    if (denom <= 1e-10 * std::max(1.0, gvv * guu))
        throw std::domain_error("flag_curvature: degenerate flag (u parallel to velocity)");
    const Vec Ru = estimate_jacobi_operator(scene, st, u, 0.0);
    return u.dot(g * Ru) / denom;
}

double liouville_volume_check(const Scene& scene, const PhaseState& s0,
                              double T, double step) {
    const int n = scene.dim;
    constexpr double eps = 1e-5;
    auto flow = [&](const Vec& x0, const Vec& v0) {
        const Trajectory tr = integrate_geodesic(scene, {x0, v0}, T, step);
        if (tr.truncated) throw std::runtime_error("liouville_volume_check: chart exit");
        return (T >= 0.0) ? tr.back() : tr.front();
    };
    Mat jac(2 * n, 2 * n);
    for (int k = 0; k < 2 * n; ++k) {
        Vec xp = s0.x, vp = s0.v, xm = s0.x, vm = s0.v;
        if (k < n) { xp[k] += eps; xm[k] -= eps; }
        else { vp[k - n] += eps; vm[k - n] -= eps; }
        const PhaseState fp = flow(xp, vp);
        const PhaseState fm = flow(xm, vm);
        jac.block(0, k, n, 1) = (fp.x - fm.x) / (2.0 * eps);
        jac.block(n, k, n, 1) = (fp.v - fm.v) / (2.0 * eps);
    }
    const PhaseState fT = flow(s0.x, s0.v);
    const double det0 = fundamental_tensor(scene.datum_at(s0.x), s0.v).determinant();
    const double detT = fundamental_tensor(scene.datum_at(fT.x), fT.v).determinant();
    return detT * std::abs(jac.determinant()) / det0;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.states.empty()) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
    const int n = static_cast<int>(traj.states.front().x.size());
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",v" << i;
    os << "\n";
    char buf[40];
    auto emit = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (std::size_t i = 0; i < traj.size(); ++i) {
        emit(traj.times[i]);
        for (int k = 0; k < n; ++k) { os << ","; emit(traj.states[i].x[k]); }
        for (int k = 0; k < n; ++k) { os << ","; emit(traj.states[i].v[k]); }
        os << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("trajectory csv: missing header");
    int n = 0;
    {
        std::stringstream hs(line);
        std::string tok;
        int cols = 0;
        while (std::getline(hs, tok, ',')) ++cols;
        if (cols < 3 || (cols - 1) % 2 != 0)
            throw std::runtime_error("trajectory csv: malformed header");
        n = (cols - 1) / 2;
    }
    Trajectory traj;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        if (static_cast<int>(row.size()) != 1 + 2 * n)
            throw std::runtime_error("trajectory csv: malformed row");
        Vec x(n), v(n);
        for (int k = 0; k < n; ++k) { x[k] = row[1 + k]; v[k] = row[1 + n + k]; }
        traj.times.push_back(row[0]);
        traj.states.push_back({x, v});
    }
    return traj;
}

} // namespace finsler
