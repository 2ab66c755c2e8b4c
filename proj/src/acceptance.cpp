#include "finsler/acceptance.hpp"

#include "finsler/control.hpp"
#include "finsler/geodesic.hpp"
#include "finsler/jacobi.hpp"
#include "finsler/scene.hpp"
#include "finsler/submersion.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace finsler {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

RandersDatum random_datum(Rng& rng, int n) {
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
    const Mat h = A.transpose() * A + 0.2 * Mat::Identity(n, n);
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform(-1.0, 1.0);
    const double wn = std::sqrt(w.dot(h * w));
    w *= rng.uniform(0.0, 0.9) / std::max(wn, 1e-12);
    return RandersDatum(h, w);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// --- criteria -------------------------------------------------------------

CriterionResult c1_intrinsic() {
    CriterionResult r{1, "Randers intrinsic equation on 1000 random data", false, 0, ""};
    Rng rng(101);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = rng.uniform_int(2, 4);
        const RandersDatum d = random_datum(rng, n);
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = rng.uniform(-2.0, 2.0);
        if (v.norm() < 1e-6) v[0] = 1.0;
        const double F = randers_norm(d, v);
        const double res = std::abs(d.h_norm(v - F * d.wind()) - F) / (1.0 + F);
        worst = std::max(worst, res);
    }
    r.pass = worst <= 1e-10;
    r.detail = "max normalized residual " + fmt(worst);
    return r;
}

CriterionResult c2_control_fields() {
    CriterionResult r{2, "cone control fields are unit and horizontal", false, 0, ""};
    const Scene sc = scenario("cone_r2");
    const Vec f1 = (Vec(2) << 1.0, 0.5).finished();
    const Vec f2 = (Vec(2) << -1.0, 0.5).finished();
    double norm_err = 0.0, horiz_ok = 1.0;
    for (const Vec& x : {Vec(Vec::Zero(2)), Vec((Vec(2) << 0.7, -1.3).finished())}) {
        for (const Vec& f : {f1, f2}) {
            norm_err = std::max(norm_err, std::abs(randers_norm(sc.datum_at(x), f) - 1.0));
            if (!is_horizontal(sc, {x, f}, 1e-10)) horiz_ok = 0.0;
        }
    }
    r.pass = norm_err <= 1e-12 && horiz_ok > 0.0;
    r.detail = "max |F - 1| = " + fmt(norm_err) +
               (horiz_ok > 0.0 ? ", horizontal" : ", NOT horizontal");
    return r;
}

CriterionResult c3_figure_curve() {
    CriterionResult r{3, "helical-wind geodesic matches the closed form", false, 0, ""};
    const Scene sc = scenario("sin_wind_r3");
    auto gamma = [](double t) {
        return (Vec(3) << t, 0.0, 3.0 * t / 8.0 - std::sin(2.0 * t) / 16.0).finished();
    };
    auto dgamma = [](double t) {
        return (Vec(3) << 1.0, 0.0, 3.0 / 8.0 - std::cos(2.0 * t) / 8.0).finished();
    };
    auto ddgamma = [](double t) {
        return (Vec(3) << 0.0, 0.0, std::sin(2.0 * t) / 4.0).finished();
    };
    double el = 0.0, fdev = 0.0, vert = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double t = 2.0 * kPi * k / 200.0;
        const Vec x = gamma(t), v = dgamma(t);
        el = std::max(el, (geodesic_accel(sc, x, v) - ddgamma(t)).norm());
        fdev = std::max(fdev, std::abs(randers_norm(sc.datum_at(x), v) - 1.0));
        const Vec p = legendre(sc.datum_at(x), v);
        vert = std::max(vert, std::max(std::abs(p[1]), std::abs(p[2])));
    }
    r.pass = el <= 1e-6 && fdev <= 1e-8 && vert <= 1e-8;
    r.detail = "EL " + fmt(el) + ", |F-1| " + fmt(fdev) + ", vertical " + fmt(vert);
    return r;
}

GridWindow cone_window() { return {-2.0, 2.0, -0.25, 2.75}; }

CriterionResult c4_cone_reach(int threads) {
    CriterionResult r{4, "cone attainable set and planar orbit", false, 0, ""};
    const ControlSystem sys = make_control_system(scenario("cone_r2"));
    ReachParams p;
    p.horizon = 6.0;
    p.max_letters = 4;
    p.samples = 200000;
    p.window = cone_window();
    p.resolution = 0.05;
    p.seed = 1;
    p.threads = threads;
    const ReachGrid att = attainable_set(sys, Vec::Zero(2), p);
    const GridCompare cmp = compare_grid(
        att, [](double x, double y) { return y >= std::abs(x) / 2.0; }, 2.0 * p.resolution);
    const ReachGrid orb = orbit_set(sys, Vec::Zero(2), p);
    const double cover = orb.occupied_fraction();
    r.pass = cmp.agreement >= 0.99 && cover >= 0.99;
    r.detail = "attainable agreement " + fmt(cmp.agreement) + ", orbit coverage " + fmt(cover);
    return r;
}

CriterionResult c5_torus(int threads) {
    CriterionResult r{5, "torus attainable set covers the whole torus", false, 0, ""};
    const ControlSystem sys = make_control_system(scenario("torus"));
    ReachParams p;
    p.horizon = 40.0;
    p.max_letters = 3;
    p.samples = 20000;
    p.window = {0.0, 1.0, 0.0, 1.0};
    p.resolution = 0.02;
    p.seed = 7;
    p.threads = threads;
    const ReachGrid att = attainable_set(sys, Vec::Zero(2), p);
    const double cover = att.occupied_fraction();
    r.pass = cover >= 0.99;
    r.detail = "coverage " + fmt(cover);
    return r;
}

CriterionResult c6_chow() {
    CriterionResult r{6, "bracket rank 2 plus single-field negative control", false, 0, ""};
    const Vec f1 = (Vec(2) << 1.0, 0.5).finished();
    const Vec f2 = (Vec(2) << -1.0, 0.5).finished();
    std::vector<VectorField> fields = {[f1](const Vec&) { return f1; },
                                       [f2](const Vec&) { return f2; }};
    Rng rng(606);
    int bad_rank = 0;
    for (int k = 0; k < 100; ++k) {
        const Vec x = (Vec(2) << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)).finished();
        if (lie_rank(fields, x, 2) != 2) ++bad_rank;
    }

    ControlSystem single;
    single.scene = scenario("cone_r2");
    Generator g;
    g.constant = true;
    g.const_value = f1;
    single.generators = {g};
    ReachParams p;
    p.horizon = 6.0;
    p.max_letters = 3;
    p.samples = 4000;
    p.window = cone_window();
    p.resolution = 0.05;
    p.seed = 3;
    const ReachGrid orb = orbit_set(single, Vec::Zero(2), p);
    long off_line = 0, occupied = 0;
    int max_col_thickness = 0;
    for (int i = 0; i < orb.nx(); ++i) {
        int col = 0;
        for (int j = 0; j < orb.ny(); ++j) {
            if (!orb.occupied(i, j)) continue;
            ++occupied;
            ++col;
            const Vec c = orb.cell_center(i, j);
            if (std::abs(c[1] - c[0] / 2.0) > 1.5 * p.resolution) ++off_line;
        }
        max_col_thickness = std::max(max_col_thickness, col);
    }
    r.pass = bad_rank == 0 && off_line == 0 && occupied >= orb.nx() / 2 &&
             max_col_thickness <= 2;
    std::ostringstream os;
    os << "rank failures " << bad_rank << ", off-line cells " << off_line
       << ", max band thickness " << max_col_thickness;
    r.detail = os.str();
    return r;
}

CriterionResult c7_omega() {
    CriterionResult r{7, "symplectic form conserved for random curvature data", false, 0, ""};
    Rng rng(707);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int n = rng.uniform_int(1, 4);
        // Random nonnegative curvature operators with ||R(t)|| <= 2; indefinite
        // R grows fields like e^t and the conserved form drowns in cancellation.
        Mat A0(n, n), A1(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                A0(i, j) = rng.uniform(-1.0, 1.0);
                A1(i, j) = rng.uniform(-1.0, 1.0);
            }
        Mat R0 = A0.transpose() * A0, R1 = A1.transpose() * A1;
        if (R0.norm() > 1.0) R0 /= R0.norm();
        if (R1.norm() > 1.0) R1 /= R1.norm();
        JacobiTriple tr;
        tr.n = n;
        tr.t0 = 0.0;
        tr.t1 = 10.0;
        tr.R = [R0, R1](double t) {
            return (R0 + 0.5 * (1.0 + std::sin(t)) * R1).eval();
        };
        Vec a(2 * n), b(2 * n);
        for (int i = 0; i < 2 * n; ++i) {
            a[i] = rng.uniform(-1.0, 1.0);
            b[i] = rng.uniform(-1.0, 1.0);
        }
        const JacobiField J1 = solve_jacobi(tr, a, 1e-3);
        const JacobiField J2 = solve_jacobi(tr, b, 1e-3);
        const double w0 = omega(tr, J1, J2, 0.0);
        for (int s = 1; s <= 100; ++s)
            worst = std::max(worst, std::abs(omega(tr, J1, J2, 0.1 * s) - w0));
    }
    r.pass = worst <= 1e-8;
    r.detail = "max drift " + fmt(worst);
    return r;
}

CriterionResult c8_riccati() {
    CriterionResult r{8, "Riccati residuals and the flat S(1) = 1 value", false, 0, ""};
    const JacobiTriple flat2 = catalog_triple("flat", 2, 0.0, 10.0);
    const JacobiTriple sph2 = catalog_triple("sphere", 2, 0.0, 10.0);
    auto point_lagrangian = [](const JacobiTriple& tr) {
        std::vector<Vec> inits;
        for (int i = 0; i < tr.n; ++i) {
            Vec v = Vec::Zero(2 * tr.n);
            v[tr.n + i] = 1.0;
            inits.push_back(v);
        }
        return make_subspace(tr, inits);
    };
    const Subspace Lf = point_lagrangian(flat2);
    const Subspace Ls = point_lagrangian(sph2);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double tf = 0.5 + 9.0 * k / 19.0;
        worst = std::max(worst, riccati_residual(flat2, Lf, tf));
        double ts = 0.3 + 2.5 * k / 19.0; // stay clear of the conjugate point at pi
        if (std::abs(ts - kPi) < 0.2) ts += 0.4;
        worst = std::max(worst, riccati_residual(sph2, Ls, ts));
    }
    const JacobiTriple flat1 = catalog_triple("flat", 1, 0.0, 10.0);
    const Subspace L1 = make_subspace(flat1, {(Vec(2) << 0.0, 1.0).finished()});
    const double s1 = riccati_operator(flat1, L1, 1.0)(0, 0);
    r.pass = worst <= 1e-6 && std::abs(s1 - 1.0) <= 1e-8;
    r.detail = "max residual " + fmt(worst) + ", S(1) = " + fmt(s1);
    return r;
}

CriterionResult c9_transverse() {
    CriterionResult r{9, "quotient curvature 4 and the symplectic isomorphism", false, 0, ""};
    const JacobiTriple hopf = catalog_triple("hopf", 2, 0.0, 2.0 * kPi);
    const Subspace line =
        make_subspace(hopf, {(Vec(4) << 1.0, 0.0, 0.0, 1.0).finished()});
    const TransverseTriple tt = transverse_triple(hopf, line);
    double rdev = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double t = 2.0 * kPi * k / 200.0;
        rdev = std::max(rdev, std::abs(tt.triple.curvature(t)(0, 0) - 4.0));
    }
    const JacobiField J1 = solve_jacobi(hopf, (Vec(4) << 1, 0, 0, 0).finished());
    const JacobiField J2 = solve_jacobi(hopf, (Vec(4) << 0, 1, 1, 0).finished());
    double iso = 0.0;
    for (int k = 0; k <= 20; ++k) {
        const double t = 0.2 + (2.0 * kPi - 0.4) * k / 20.0;
        const double wq = transverse_omega(tt, J1, J2, t);
        const double wp = omega(hopf, J1, J2, t);
        iso = std::max(iso, std::abs(wq - wp));
    }
    r.pass = rdev <= 1e-6 && iso <= 1e-7;
    r.detail = "max |R - 4| = " + fmt(rdev) + ", omega mismatch " + fmt(iso);
    return r;
}

CriterionResult c10_wilking() {
    CriterionResult r{10, "Wilking splitting on the catalog Lagrangians", false, 0, ""};
    const JacobiTriple mixed = catalog_triple("mixed");
    const Subspace Lm = make_subspace(
        mixed, {(Vec(4) << 0, 0, 1, 0).finished(), (Vec(4) << 0, 1, 0, 0).finished()});
    const WilkingDecomposition dm = wilking_decompose(mixed, Lm);

    const JacobiTriple sph = catalog_triple("sphere");
    const Subspace Lsp = make_subspace(
        sph, {(Vec(4) << 0, 0, 1, 0).finished(), (Vec(4) << 0, 0, 0, 1).finished()});
    const WilkingDecomposition ds = wilking_decompose(sph, Lsp);

    const JacobiTriple flat = catalog_triple("flat");
    const Subspace Lfp = make_subspace(
        flat, {(Vec(4) << 1, 0, 0, 0).finished(), (Vec(4) << 0, 1, 0, 0).finished()});
    const WilkingDecomposition df = wilking_decompose(flat, Lfp);

    bool rejected = false;
    try {
        JacobiTriple neg;
        neg.n = 2;
        neg.t0 = 0.0;
        neg.t1 = 10.0;
        neg.R = [](double) { return (-Mat::Identity(2, 2)).eval(); };
        wilking_decompose(neg, make_subspace(neg, {(Vec(4) << 1, 0, 0, 0).finished(),
                                                   (Vec(4) << 0, 1, 0, 0).finished()}));
    } catch (const std::invalid_argument&) {
        rejected = true;
    }

    const bool dims_ok = dm.null_span.dim() == 1 && dm.parallel_span.dim() == 1 &&
                         ds.null_span.dim() == 2 && ds.parallel_span.dim() == 0 &&
                         df.null_span.dim() == 0 && df.parallel_span.dim() == 2;
    r.pass = dims_ok && dm.reconstruction_error <= 1e-8 && dm.claim_b_r_h <= 1e-8 &&
             dm.claim_b_a <= 1e-8 && rejected;
    std::ostringstream os;
    os << "dims (" << dm.null_span.dim() << "," << dm.parallel_span.dim() << ")/("
       << ds.null_span.dim() << "," << ds.parallel_span.dim() << ")/(" << df.null_span.dim()
       << "," << df.parallel_span.dim() << "), recon " << fmt(dm.reconstruction_error)
       << ", claim-B " << fmt(std::max(dm.claim_b_r_h, dm.claim_b_a))
       << (rejected ? ", negative curvature rejected" : ", negative curvature NOT rejected");
    r.detail = os.str();
    return r;
}

CriterionResult c11_liouville() {
    CriterionResult r{11, "geodesic flow preserves the Liouville volume", false, 0, ""};
    double worst = 0.0;
    {
        const Scene sc = scenario("euclidean", 2);
        worst = std::max(worst, std::abs(liouville_volume_check(
                                    sc, {Vec::Zero(2), (Vec(2) << 0.8, 0.3).finished()}, 5.0) -
                                1.0));
    }
    {
        const Scene sc = scenario("cone_r2");
        worst = std::max(worst, std::abs(liouville_volume_check(
                                    sc, {Vec::Zero(2), (Vec(2) << 1.0, 0.5).finished()}, 5.0) -
                                1.0));
    }
    {
        const Scene sc = scenario("sphere2");
        const Vec x = (Vec(2) << kPi / 2.0, 0.0).finished();
        const Vec v = (Vec(2) << 0.05, 1.0).finished();
        worst = std::max(worst, std::abs(liouville_volume_check(sc, {x, v}, 5.0) - 1.0));
    }
    r.pass = worst <= 1e-4;
    r.detail = "max |D(5) - 1| = " + fmt(worst);
    return r;
}

CriterionResult c12_curvature() {
    CriterionResult r{12, "flag curvature estimates on the registry scenes", false, 0, ""};
    const Scene sph = scenario("sphere2");
    const double ks = flag_curvature(
        sph, {(Vec(2) << kPi / 2.0, 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()},
        (Vec(2) << 1.0, 0.0).finished(), 0.0);
    const Scene euc = scenario("euclidean", 2);
    const double ke = flag_curvature(
        euc, {Vec::Zero(2), (Vec(2) << 1.0, 0.0).finished()},
        (Vec(2) << 0.0, 1.0).finished(), 0.0);
    const Scene cone = scenario("cone_r2");
    const double kc = flag_curvature(
        cone, {Vec::Zero(2), (Vec(2) << 1.0, 0.5).finished()},
        (Vec(2) << 0.0, 1.0).finished(), 0.0);
    r.pass = std::abs(ks - 1.0) <= 1e-2 && std::abs(ke) <= 1e-3 && std::abs(kc) <= 1e-3;
    r.detail = "sphere " + fmt(ks) + ", euclidean " + fmt(ke) + ", cone " + fmt(kc);
    return r;
}

CriterionResult c13_asymmetry() {
    CriterionResult r{13, "asymmetric lengths 2/3 and 2 on the cone scene", false, 0, ""};
    const Scene sc = scenario("cone_r2");
    const Trajectory up =
        zermelo_geodesic(sc, {Vec::Zero(2), (Vec(2) << 0.0, 1.0).finished()}, 1.0, 1e-2);
    const Trajectory down =
        zermelo_geodesic(sc, {(Vec(2) << 0.0, 1.0).finished(),
                              (Vec(2) << 0.0, -1.0).finished()}, 1.0, 1e-2);
    const double lu = curve_length(sc, up);
    const double ld = curve_length(sc, down);
    r.pass = std::abs(lu - 2.0 / 3.0) <= 1e-10 && std::abs(ld - 2.0) <= 1e-10;
    r.detail = "lengths " + fmt(lu) + " / " + fmt(ld);
    return r;
}

} // namespace

std::vector<CriterionResult> paper_suite_results(int threads) {
    using Clock = std::chrono::steady_clock;
    std::vector<CriterionResult> out;
    auto timed = [&](auto&& fn) {
        const auto start = Clock::now();
        CriterionResult r = fn();
        r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        out.push_back(std::move(r));
    };
    timed(c1_intrinsic);
    timed(c2_control_fields);
    timed(c3_figure_curve);
    timed([&] { return c4_cone_reach(threads); });
    timed([&] { return c5_torus(threads); });
    timed(c6_chow);
    timed(c7_omega);
    timed(c8_riccati);
    timed(c9_transverse);
    timed(c10_wilking);
    timed(c11_liouville);
    timed(c12_curvature);
    timed(c13_asymmetry);
    return out;
}

bool run_paper_suite(std::ostream& os, int threads) {
    const std::vector<CriterionResult> results = paper_suite_results(threads);
    bool all = true;
    for (const CriterionResult& r : results) {
        char head[64];
        std::snprintf(head, sizeof head, "%s %2d  ", r.pass ? "PASS" : "FAIL", r.id);
        os << head << r.label << " (" << fmt(r.seconds) << " s): " << r.detail << "\n";
        all = all && r.pass;
    }
    os << (all ? "all criteria passed" : "SUITE FAILED") << "\n";
    return all;
}

} // namespace finsler
