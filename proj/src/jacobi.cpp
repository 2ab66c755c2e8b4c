#include "finsler/jacobi.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace finsler {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDefaultWindow = 10.0 * kPi;
constexpr double kProjFd = 1e-5; // central difference of projectors

long step_count(double length, double step) {
    return std::max<long>(1, static_cast<long>(std::ceil(length / step - 1e-12)));
}

/// Modified Gram-Schmidt; drops columns below `drop` and keeps each surviving
/// column's orientation aligned with its input.
Mat orthonormalize(const Mat& cols, double drop = 1e-8) {
    Mat out(cols.rows(), cols.cols());
    int kept = 0;
    for (int j = 0; j < cols.cols(); ++j) {
        Vec v = cols.col(j);
        for (int i = 0; i < kept; ++i) v -= out.col(i).dot(v) * out.col(i);
        const double norm = v.norm();
        if (norm < drop) continue;
        out.col(kept++) = v / norm;
    }
    return out.leftCols(kept);
}

double smallest_singular(const Mat& A) {
    if (A.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

} // namespace

Mat JacobiTriple::curvature(double t) const {
    if (!R) throw std::invalid_argument("JacobiTriple: missing curvature map");
    Mat r = R(t);
    if (r.rows() != n || r.cols() != n)
        throw std::invalid_argument("JacobiTriple: curvature has wrong shape");
    if ((r - r.transpose()).norm() > 1e-12)
        throw std::runtime_error("JacobiTriple: curvature not symmetric at t = " +
                                 std::to_string(t));
    return 0.5 * (r + r.transpose());
}

JacobiTriple catalog_triple(const std::string& name, int n) {
    return catalog_triple(name, n, 0.0, kDefaultWindow);
}

JacobiTriple catalog_triple(const std::string& name, int n, double t0, double t1) {
    if (n < 1) throw std::invalid_argument("catalog_triple: rank must be positive");
    if (t1 <= t0) throw std::invalid_argument("catalog_triple: empty domain");
    JacobiTriple tr;
    tr.t0 = t0;
    tr.t1 = t1;
    tr.name = name;
    if (name == "flat") {
        tr.n = n;
        tr.R = [n](double) { return Mat::Zero(n, n).eval(); };
    } else if (name == "sphere") {
        tr.n = n;
        tr.R = [n](double) { return Mat::Identity(n, n).eval(); };
    } else if (name == "mixed") {
        if (n != 2) throw std::invalid_argument("catalog_triple: mixed has rank 2");
        tr.n = 2;
        tr.R = [](double) {
            Mat r = Mat::Zero(2, 2);
            r(0, 0) = 1.0;
            return r;
        };
    } else if (name == "hopf") {
        if (n != 2) throw std::invalid_argument("catalog_triple: hopf has rank 2");
        tr.n = 2;
        tr.R = [](double) { return Mat::Identity(2, 2).eval(); };
    } else {
        throw std::invalid_argument("catalog_triple: unknown name '" + name +
                                    "' (expected flat, sphere, mixed, hopf)");
    }
    return tr;
}

JacobiField::JacobiField(const JacobiTriple& triple, Vec initial, double grid_step) {
    if (grid_step <= 0.0) throw std::invalid_argument("JacobiField: step must be positive");
    if (initial.size() != 2 * triple.n || !initial.allFinite())
        throw std::invalid_argument("JacobiField: initial condition must be a finite 2n-vector");
    n_ = triple.n;
    t0_ = triple.t0;
    t1_ = triple.t1;
    initial_ = std::move(initial);
    const long nsteps = step_count(t1_ - t0_, grid_step);
    step_ = (t1_ - t0_) / static_cast<double>(nsteps);

    Vec J = initial_.head(n_), dJ = initial_.tail(n_);
    values_.reserve(nsteps + 1);
    derivs_.reserve(nsteps + 1);
    accels_.reserve(nsteps + 1);
    values_.push_back(J);
    derivs_.push_back(dJ);
    accels_.push_back(-triple.curvature(t0_) * J);
    // Two RK4 substeps per grid interval keep the symplectic drift of stiffly
    // growing solutions well below the grid interpolation error.
    const double h = 0.5 * step_;
    for (long i = 0; i < nsteps; ++i) {
        for (int half = 0; half < 2; ++half) {
            const double t = t0_ + i * step_ + half * h;
            const Mat R1 = triple.curvature(t);
            const Mat R2 = triple.curvature(t + 0.5 * h);
            const Mat R3 = triple.curvature(t + h);
            const Vec k1x = dJ, k1v = -R1 * J;
            const Vec k2x = dJ + 0.5 * h * k1v, k2v = -R2 * (J + 0.5 * h * k1x);
            const Vec k3x = dJ + 0.5 * h * k2v, k3v = -R2 * (J + 0.5 * h * k2x);
            const Vec k4x = dJ + h * k3v, k4v = -R3 * (J + h * k3x);
            J += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            dJ += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (half == 1) {
                values_.push_back(J);
                derivs_.push_back(dJ);
                accels_.push_back(-R3 * J); // J'' = -R J, exact at the node
            }
        }
    }
}

void JacobiField::locate(double t, std::size_t& cell, double& s) const {
    if (t < t0_ - 1e-9 || t > t1_ + 1e-9)
        throw std::invalid_argument("JacobiField: time outside domain");
    const double u = std::clamp((t - t0_) / step_, 0.0, static_cast<double>(values_.size() - 1));
    cell = std::min(static_cast<std::size_t>(u), values_.size() - 2);
    s = u - static_cast<double>(cell);
}

Vec JacobiField::value(double t) const {
    std::size_t k;
    double s;
    locate(t, k, s);
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * values_[k] + (s3 - 2 * s2 + s) * step_ * derivs_[k] +
           (-2 * s3 + 3 * s2) * values_[k + 1] + (s3 - s2) * step_ * derivs_[k + 1];
}

Vec JacobiField::deriv(double t) const {
    std::size_t k;
    double s;
    locate(t, k, s);
    // Hermite on the derivative, with J'' = -R J supplying exact node slopes.
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * derivs_[k] + (s3 - 2 * s2 + s) * step_ * accels_[k] +
           (-2 * s3 + 3 * s2) * derivs_[k + 1] + (s3 - s2) * step_ * accels_[k + 1];
}

JacobiField solve_jacobi(const JacobiTriple& triple, const Vec& J0, double grid_step) {
    return JacobiField(triple, J0, grid_step);
}

double omega(const JacobiTriple& triple, const JacobiField& J1, const JacobiField& J2,
             double t) {
    if (t < triple.t0 - 1e-9 || t > triple.t1 + 1e-9)
        throw std::invalid_argument("omega: time outside the triple's domain");
    return J1.deriv(t).dot(J2.value(t)) - J1.value(t).dot(J2.deriv(t));
}

Mat Subspace::values(double t) const {
    Mat A(triple.n, dim());
    for (int j = 0; j < dim(); ++j) A.col(j) = fields[j].value(t);
    return A;
}

Mat Subspace::derivs(double t) const {
    Mat B(triple.n, dim());
    for (int j = 0; j < dim(); ++j) B.col(j) = fields[j].deriv(t);
    return B;
}

Subspace make_subspace(const JacobiTriple& triple, const std::vector<Vec>& initials,
                       double grid_step) {
    Subspace S;
    S.triple = triple;
    S.initials = initials;
    if (!initials.empty()) {
        Mat stack(2 * triple.n, static_cast<int>(initials.size()));
        for (std::size_t j = 0; j < initials.size(); ++j) {
            if (initials[j].size() != 2 * triple.n)
                throw std::invalid_argument("make_subspace: initial condition has wrong size");
            stack.col(static_cast<int>(j)) = initials[j];
        }
        Eigen::JacobiSVD<Mat> svd(stack);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 1e-10 * sv(0))
            throw std::invalid_argument("make_subspace: initial conditions are linearly dependent");
    }
    for (const Vec& J0 : initials) S.fields.emplace_back(triple, J0, grid_step);
    return S;
}

SubspaceClass classify_subspace(const Subspace& S, double tol) {
    SubspaceClass c;
    const double t = S.triple.t0;
    for (int i = 0; i < S.dim(); ++i)
        for (int j = i + 1; j < S.dim(); ++j)
            c.max_omega = std::max(
                c.max_omega, std::abs(omega(S.triple, S.fields[i], S.fields[j], t)));
    c.isotropic = c.max_omega <= tol;
    c.lagrangian = c.isotropic && S.dim() == S.triple.n;
    return c;
}

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double& xmin) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-10) {
        if (f1 <= f2) { b = x2; x2 = x1; f2 = f1; x1 = b - inv_phi * (b - a); f1 = f(x1); }
        else { a = x1; x1 = x2; f1 = f2; x2 = a + inv_phi * (b - a); f2 = f(x2); }
    }
    xmin = 0.5 * (a + b);
    return f(xmin);
}

} // namespace

std::vector<double> singular_instants(const Subspace& S, double scan_step, double tol) {
    std::vector<double> out;
    if (S.dim() == 0) return out;
    if (scan_step <= 0.0) throw std::invalid_argument("singular_instants: bad scan step");
    auto sigma = [&](double t) { return smallest_singular(S.values(t)); };

    const long nodes = step_count(S.triple.length(), scan_step);
    const double h = S.triple.length() / nodes;
    std::vector<double> sig(nodes + 1);
    for (long i = 0; i <= nodes; ++i) sig[i] = sigma(S.triple.t0 + i * h);

    auto refine = [&](double a, double b) {
        double tmin;
        const double smin = golden_min(sigma, a, b, tmin);
        if (smin <= tol) {
            for (double prev : out)
                if (std::abs(prev - tmin) < 1e-7) return;
            out.push_back(tmin);
        }
    };
    if (sig[0] < sig[1] || sig[0] <= 10.0 * tol) refine(S.triple.t0, S.triple.t0 + h);
    for (long i = 1; i < nodes; ++i) {
        const bool local_min = sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1] &&
                               (sig[i] < sig[i - 1] || sig[i] < sig[i + 1] ||
                                sig[i] <= 10.0 * tol);
        if (local_min) refine(S.triple.t0 + (i - 1) * h, S.triple.t0 + (i + 1) * h);
    }
    if (sig[nodes] < sig[nodes - 1] || sig[nodes] <= 10.0 * tol)
        refine(S.triple.t1 - h, S.triple.t1);
    std::sort(out.begin(), out.end());
    return out;
}

Mat vertical_bundle(const Subspace& S, double t) {
    const int n = S.triple.n, d = S.dim();
    if (d == 0) return Mat(n, 0);
    const Mat A = S.values(t);
    const Mat B = S.derivs(t);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tau = 1e-6 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Mat cols(n, d);
    int k = 0;
    for (int j = 0; j < sv.size(); ++j) {
        if (sv(j) > tau) cols.col(k++) = svd.matrixU().col(j);
        else cols.col(k++) = B * svd.matrixV().col(j); // derivative of a vanishing field
    }
    const Mat V = orthonormalize(cols.leftCols(k));
    if (V.cols() != d)
        throw std::runtime_error("vertical_bundle: rank defect at t = " + std::to_string(t));
    return V;
}

Mat vertical_projector(const Subspace& S, double t) {
    const Mat V = vertical_bundle(S, t);
    if (V.cols() == 0) return Mat::Zero(S.triple.n, S.triple.n);
    return V * V.transpose();
}

Mat a_tensor_matrix(const Subspace& S, double t) {
    const int n = S.triple.n;
    if (S.dim() == 0) return Mat::Zero(n, n);
    const double a = std::max(S.triple.t0, t - kProjFd);
    const double b = std::min(S.triple.t1, t + kProjFd);
    const Mat Pa = vertical_projector(S, a);
    const Mat Pb = vertical_projector(S, b);
    if ((Pb - Pa).norm() > 0.5)
        throw std::runtime_error("a_tensor: vertical frame jump near t = " +
                                 std::to_string(t) + "; use a finer step");
    const Mat Pdot = (Pb - Pa) / (b - a);
    const Mat Pv = vertical_projector(S, t);
    const Mat Ph = Mat::Identity(n, n) - Pv;
    return Ph * Pdot - Pv * Pdot;
}

Vec a_tensor(const Subspace& S, double t, const Vec& X) {
    if (X.size() != S.triple.n) throw std::invalid_argument("a_tensor: wrong vector size");
    return a_tensor_matrix(S, t) * X;
}

namespace {

Mat horizontal_projector(const Subspace& S, double t) {
    return Mat::Identity(S.triple.n, S.triple.n) - vertical_projector(S, t);
}

Mat frame_rotation(const Subspace& S, double t) { // Omega = P' P - P P', P = P_H
    const double a = std::max(S.triple.t0, t - kProjFd);
    const double b = std::min(S.triple.t1, t + kProjFd);
    const Mat P = horizontal_projector(S, t);
    const Mat Pdot = (horizontal_projector(S, b) - horizontal_projector(S, a)) / (b - a);
    return Pdot * P - P * Pdot;
}

Mat advance_frame(const Subspace& S, double t, double h, const Mat& E) {
    const Mat O1 = frame_rotation(S, t);
    const Mat O2 = frame_rotation(S, t + 0.5 * h);
    const Mat O3 = frame_rotation(S, t + h);
    const Mat k1 = O1 * E;
    const Mat k2 = O2 * (E + 0.5 * h * k1);
    const Mat k3 = O2 * (E + 0.5 * h * k2);
    const Mat k4 = O3 * (E + h * k3);
    Mat next = E + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next = horizontal_projector(S, t + h) * next;
    Mat ortho = orthonormalize(next);
    if (ortho.cols() != E.cols())
        throw std::runtime_error("transverse frame integration lost rank at t = " +
                                 std::to_string(t + h));
    for (int j = 0; j < ortho.cols(); ++j)
        if (ortho.col(j).dot(next.col(j)) < 0.0) ortho.col(j) = -ortho.col(j);
    return ortho;
}

} // namespace

TransverseTriple transverse_triple(const JacobiTriple& triple, const Subspace& S,
                                   double frame_step) {
    const SubspaceClass cls = classify_subspace(S, 1e-8);
    if (!cls.isotropic)
        throw std::invalid_argument("transverse_triple: subspace is not isotropic");
    const int n = triple.n, d = S.dim(), m = n - d;
    if (m < 0) throw std::invalid_argument("transverse_triple: subspace too large");

    TransverseTriple tt;
    tt.parent = triple;
    tt.isotropic = S;
    const long nodes = step_count(triple.length(), frame_step);
    tt.frame_step = triple.length() / nodes;
    tt.frames.reserve(nodes + 1);

    if (d == 0) {
        tt.triple = triple;
        for (long i = 0; i <= nodes; ++i) tt.frames.push_back(Mat::Identity(n, n));
        return tt;
    }

    // Parallel orthonormal frame of the horizontal bundle.
    {
        const Mat Ph = horizontal_projector(S, triple.t0);
        Eigen::SelfAdjointEigenSolver<Mat> eig(Ph);
        Mat E0(n, m);
        int k = 0;
        for (int j = 0; j < n; ++j)
            if (eig.eigenvalues()(j) > 0.5) E0.col(k++) = eig.eigenvectors().col(j);
        if (k != m) throw std::runtime_error("transverse_triple: horizontal rank defect");
        tt.frames.push_back(E0);
    }
    for (long i = 0; i < nodes; ++i) {
        const double t = triple.t0 + i * tt.frame_step;
        tt.frames.push_back(advance_frame(S, t, tt.frame_step, tt.frames.back()));
    }

    auto grid = std::make_shared<std::vector<Mat>>();
    grid->reserve(nodes + 1);
    for (long i = 0; i <= nodes; ++i) {
        const double t = triple.t0 + i * tt.frame_step;
        const Mat A = a_tensor_matrix(S, t);
        const Mat Rt = tt.frames[i].transpose() *
                       (triple.curvature(t) - 3.0 * A * A) * tt.frames[i];
        grid->push_back(0.5 * (Rt + Rt.transpose()));
    }
    JacobiTriple q;
    q.n = m;
    q.t0 = triple.t0;
    q.t1 = triple.t1;
    q.name = triple.name + "/transverse";
    const double t0 = triple.t0, step = tt.frame_step;
    q.R = [grid, t0, step](double t) {
        const double u = std::clamp((t - t0) / step, 0.0, static_cast<double>(grid->size() - 1));
        const std::size_t k = std::min(static_cast<std::size_t>(u), grid->size() - 2);
        const double s = u - static_cast<double>(k);
        return ((1.0 - s) * (*grid)[k] + s * (*grid)[k + 1]).eval();
    };
    tt.triple = q;
    return tt;
}

Mat TransverseTriple::frame(double t) const {
    if (t < parent.t0 - 1e-9 || t > parent.t1 + 1e-9)
        throw std::invalid_argument("TransverseTriple::frame: time outside domain");
    const double u = std::clamp((t - parent.t0) / frame_step, 0.0,
                                static_cast<double>(frames.size() - 1));
    const std::size_t k = std::min(static_cast<std::size_t>(u), frames.size() - 2);
    const double h = t - (parent.t0 + k * frame_step);
    if (isotropic.dim() == 0 || std::abs(h) < 1e-12) return frames[k];
    return advance_frame(isotropic, parent.t0 + k * frame_step, h, frames[k]);
}

Vec project_field_value(const TransverseTriple& tt, const JacobiField& J, double t) {
    return tt.frame(t).transpose() * J.value(t);
}

Vec project_field_deriv(const TransverseTriple& tt, const JacobiField& J, double t) {
    const Mat E = tt.frame(t);
    const Mat Edot = (tt.isotropic.dim() == 0)
                         ? Mat::Zero(E.rows(), E.cols()).eval()
                         : (frame_rotation(tt.isotropic, t) * E).eval();
    return Edot.transpose() * J.value(t) + E.transpose() * J.deriv(t);
}

double transverse_omega(const TransverseTriple& tt, const JacobiField& J1,
                        const JacobiField& J2, double t) {
    return project_field_deriv(tt, J1, t).dot(project_field_value(tt, J2, t)) -
           project_field_value(tt, J1, t).dot(project_field_deriv(tt, J2, t));
}

namespace {

double nearest_singular_time(const Subspace& L, double t) {
    const long nodes = 4096;
    const double h = L.triple.length() / nodes;
    auto sigma = [&](double s) { return smallest_singular(L.values(s)); };
    double best_t = L.triple.t0, best = sigma(best_t);
    for (long i = 1; i <= nodes; ++i) {
        const double s = L.triple.t0 + i * h;
        const double v = sigma(s);
        if (v < best || (v == best && std::abs(s - t) < std::abs(best_t - t))) {
            best = v;
            best_t = s;
        }
    }
    double refined;
    golden_min(sigma, std::max(L.triple.t0, best_t - h), std::min(L.triple.t1, best_t + h),
               refined);
    return refined;
}

void require_lagrangian(const Subspace& L, const char* who) {
    const SubspaceClass cls = classify_subspace(L, 1e-8);
    if (!cls.lagrangian)
        throw std::invalid_argument(std::string(who) + ": subspace is not Lagrangian");
}

} // namespace

Mat riccati_operator([[maybe_unused]] const JacobiTriple& triple, const Subspace& L,
                     double t) {
    require_lagrangian(L, "riccati_operator");
    const Mat A = L.values(t);
    const Mat B = L.derivs(t);
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-8 * std::max(1.0, B.norm()) ||
        sv(0) / sv(sv.size() - 1) > 1e8) {
        std::ostringstream os;
        os << "riccati_operator: t = " << t << " is singular for the subspace"
           << " (nearest singular instant ~ " << nearest_singular_time(L, t) << ")";
        throw std::runtime_error(os.str());
    }
    const Mat S = A.transpose().fullPivLu().solve(B.transpose()).transpose();
    if ((S - S.transpose()).norm() > 1e-6 * std::max(1.0, S.norm()))
        throw std::runtime_error("riccati_operator: operator failed the symmetry check");
    return 0.5 * (S + S.transpose());
}

double riccati_residual(const JacobiTriple& triple, const Subspace& L, double t,
                        double fd_step) {
    auto central = [&](double h) {
        return ((riccati_operator(triple, L, t + h) -
                 riccati_operator(triple, L, t - h)) /
                (2.0 * h))
            .eval();
    };
    // Richardson-extrapolated derivative: near a pole of S the plain central
    // difference alone exhausts the residual budget.
    const Mat dS = (4.0 * central(0.5 * fd_step) - central(fd_step)) / 3.0;
    const Mat St = riccati_operator(triple, L, t);
    return (dS + St * St + triple.curvature(t)).norm();
}

RiccatiReport trace_riccati_check(const JacobiTriple& triple, const Subspace& L,
                                  double scan_step) {
    require_lagrangian(L, "trace_riccati_check");
    RiccatiReport rep;
    rep.window_length = triple.length();
    rep.singular_times = singular_instants(L, scan_step, 1e-6);
    rep.r_psd = true;
    rep.window_regular = true;

    const long nodes = step_count(triple.length(), scan_step);
    const double h = triple.length() / nodes;
    for (long i = 0; i <= nodes; ++i) {
        const double t = triple.t0 + i * h;
        Eigen::SelfAdjointEigenSolver<Mat> eig(triple.curvature(t));
        if (eig.eigenvalues()(0) < -1e-10) rep.r_psd = false;
        const Mat A = L.values(t);
        Eigen::JacobiSVD<Mat> svd(A);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 1e-8 * std::max(1.0, L.derivs(t).norm()) ||
            sv(0) / sv(sv.size() - 1) > 1e8) {
            rep.window_regular = false;
            continue;
        }
        const Mat S = riccati_operator(triple, L, t);
        rep.max_trace_S = std::max(rep.max_trace_S, std::abs(S.trace()));
        rep.max_norm_S = std::max(rep.max_norm_S, S.norm());
    }
    rep.applicable = rep.r_psd && rep.window_regular;
    return rep;
}

WilkingDecomposition wilking_decompose(const JacobiTriple& triple, const Subspace& L,
                                       double scan_step, double tol) {
    require_lagrangian(L, "wilking_decompose");
    const int n = triple.n;
    const long nodes = step_count(triple.length(), scan_step);
    const double h = triple.length() / nodes;
    for (long i = 0; i <= nodes; ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> eig(triple.curvature(triple.t0 + i * h));
        if (eig.eigenvalues()(0) < -1e-10)
            throw std::invalid_argument(
                "wilking_decompose: curvature is not positive semidefinite at t = " +
                std::to_string(triple.t0 + i * h));
    }

    // Coefficients (over the given basis of L) of fields vanishing somewhere.
    std::vector<Vec> kernels;
    for (double ts : singular_instants(L, scan_step, 1e-7)) {
        const Mat A = L.values(ts);
        Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double tau = 1e-7 * std::max(1.0, sv(0));
        for (int j = 0; j < sv.size(); ++j)
            if (sv(j) <= tau) kernels.push_back(svd.matrixV().col(j));
    }
    Mat N(n, 0);
    if (!kernels.empty()) {
        Mat K(n, static_cast<int>(kernels.size()));
        for (std::size_t j = 0; j < kernels.size(); ++j)
            K.col(static_cast<int>(j)) = kernels[j];
        Eigen::JacobiSVD<Mat> svd(K, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (int j = 0; j < sv.size(); ++j)
            if (sv(j) > 1e-8 * sv(0)) ++rank;
        N = svd.matrixU().leftCols(rank);
    }

    // Coefficients of parallel fields: near-null directions of the scan-summed
    // quadratic form c -> sum_t (|J'|^2 + |R J|^2).
    Mat M = Mat::Zero(n, n);
    for (long i = 0; i <= nodes; ++i) {
        const double t = triple.t0 + i * h;
        const Mat B = L.derivs(t);
        const Mat RA = triple.curvature(t) * L.values(t);
        M += B.transpose() * B + RA.transpose() * RA;
    }
    M /= static_cast<double>(nodes + 1);
    Eigen::SelfAdjointEigenSolver<Mat> eig(M);
    std::vector<Vec> parallels;
    for (int j = 0; j < n; ++j) {
        if (eig.eigenvalues()(j) > 4.0 * tol * tol) continue;
        const Vec c = eig.eigenvectors().col(j);
        double worst = 0.0;
        for (long i = 0; i <= nodes; ++i) {
            const double t = triple.t0 + i * h;
            worst = std::max(worst, (L.derivs(t) * c).norm());
            worst = std::max(worst, (triple.curvature(t) * L.values(t) * c).norm());
        }
        if (worst <= tol) parallels.push_back(c);
    }
    Mat P(n, static_cast<int>(parallels.size()));
    for (std::size_t j = 0; j < parallels.size(); ++j)
        P.col(static_cast<int>(j)) = parallels[j];

    WilkingDecomposition out;
    const double grid_step = L.dim() > 0 ? L.fields[0].grid_step() : 1e-3;
    auto combine = [&](const Mat& coeffs) {
        std::vector<Vec> inits;
        for (int j = 0; j < coeffs.cols(); ++j) {
            Vec v = Vec::Zero(2 * n);
            for (int i = 0; i < n; ++i) v += coeffs(i, j) * L.initials[i];
            inits.push_back(v);
        }
        return make_subspace(triple, inits, grid_step);
    };
    out.null_span = combine(N);
    out.parallel_span = combine(P);

    Mat Q(n, N.cols() + P.cols());
    Q << N, P;
    Eigen::ColPivHouseholderQR<Mat> qr(Q);
    double recon = (Q.cols() < n) ? 1.0 : 0.0;
    for (int i = 0; i < n && Q.cols() > 0; ++i) {
        const Vec e = Vec::Unit(n, i);
        recon = std::max(recon, (Q * qr.solve(e) - e).norm());
    }
    out.reconstruction_error = recon;

    for (long i = 0; i <= nodes; ++i) {
        const double t = triple.t0 + i * h;
        const Mat Pv = vertical_projector(out.null_span, t);
        const Mat Ph = Mat::Identity(n, n) - Pv;
        out.claim_b_r_h = std::max(out.claim_b_r_h, (Ph * triple.curvature(t) * Ph).norm());
        out.claim_b_a = std::max(out.claim_b_a, a_tensor_matrix(out.null_span, t).norm());
    }
    return out;
}

namespace {

void check_orthonormal_family(const std::vector<Vec>& a, const std::vector<Vec>& b,
                              const char* who) {
    auto dot_check = [&](const Vec& u, const Vec& v, double expect) {
        if (std::abs(u.dot(v) - expect) > 1e-10)
            throw std::invalid_argument(std::string(who) +
                                        ": bases are not orthonormal/orthogonal");
    };
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i; j < a.size(); ++j)
            dot_check(a[i], a[j], i == j ? 1.0 : 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i; j < b.size(); ++j)
            dot_check(b[i], b[j], i == j ? 1.0 : 0.0);
    for (const Vec& u : a)
        for (const Vec& v : b) dot_check(u, v, 0.0);
}

/// Applies an operator given either in ambient n x n form or in the
/// coordinates of `basis`.
Vec apply_operator(const Mat& op, const std::vector<Vec>& basis, std::size_t idx,
                   int n, const char* who) {
    const Vec& e = basis[idx];
    if (op.rows() == n && op.cols() == n) return op * e;
    if (op.rows() == static_cast<int>(basis.size()) &&
        op.cols() == static_cast<int>(basis.size())) {
        Vec out = Vec::Zero(n);
        for (std::size_t j = 0; j < basis.size(); ++j)
            out += op(static_cast<int>(j), static_cast<int>(idx)) * basis[j];
        return out;
    }
    throw std::invalid_argument(std::string(who) + ": operator has incompatible shape");
}

} // namespace

Subspace l_jacobi_initial_conditions(const JacobiTriple& triple,
                                     const std::vector<Vec>& tangent_basis,
                                     const Mat& shape_operator,
                                     const std::vector<Vec>& normal_basis,
                                     double grid_step) {
    const int n = triple.n;
    if (static_cast<int>(tangent_basis.size() + normal_basis.size()) != n)
        throw std::invalid_argument("l_jacobi_initial_conditions: bases must span rank n");
    check_orthonormal_family(tangent_basis, normal_basis, "l_jacobi_initial_conditions");
    if (shape_operator.size() > 0 &&
        (shape_operator - shape_operator.transpose()).norm() > 1e-10)
        throw std::invalid_argument("l_jacobi_initial_conditions: shape operator not symmetric");

    std::vector<Vec> inits;
    for (std::size_t i = 0; i < tangent_basis.size(); ++i) {
        Vec v = Vec::Zero(2 * n);
        v.head(n) = tangent_basis[i];
        v.tail(n) = apply_operator(shape_operator, tangent_basis, i, n,
                                   "l_jacobi_initial_conditions");
        inits.push_back(v);
    }
    for (const Vec& nu : normal_basis) {
        Vec v = Vec::Zero(2 * n);
        v.tail(n) = nu;
        inits.push_back(v);
    }
    return make_subspace(triple, inits, grid_step);
}

Subspace holonomy_initial_conditions(const JacobiTriple& triple,
                                     const std::vector<Vec>& vertical_basis,
                                     const Mat& S, const Mat& A_star,
                                     double grid_step) {
    const int n = triple.n;
    check_orthonormal_family(vertical_basis, {}, "holonomy_initial_conditions");
    std::vector<Vec> inits;
    for (std::size_t i = 0; i < vertical_basis.size(); ++i) {
        Vec v = Vec::Zero(2 * n);
        v.head(n) = vertical_basis[i];
        v.tail(n) = -(apply_operator(S, vertical_basis, i, n, "holonomy_initial_conditions") +
                      apply_operator(A_star, vertical_basis, i, n,
                                     "holonomy_initial_conditions"));
        inits.push_back(v);
    }
    return make_subspace(triple, inits, grid_step);
}

TripleConfig parse_triple_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("triple json: parse failure: ") + e.what());
    }
    if (!j.is_object() || !j.contains("n") || !j.contains("R"))
        throw std::invalid_argument("triple json: object with fields n, R required");
    const int n = j.at("n").get<int>();
    double t0 = 0.0, t1 = kDefaultWindow;
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        if (!d.is_array() || d.size() != 2)
            throw std::invalid_argument("triple json: domain must be [a, b]");
        t0 = d[0].get<double>();
        t1 = d[1].get<double>();
        if (t1 <= t0) throw std::invalid_argument("triple json: domain must have a < b");
    }
    TripleConfig cfg;
    const auto& r = j.at("R");
    if (r.is_string()) {
        cfg.triple = catalog_triple(r.get<std::string>(), n, t0, t1);
    } else if (r.is_object() && r.contains("diag")) {
        const auto diag = r.at("diag").get<std::vector<double>>();
        if (static_cast<int>(diag.size()) != n)
            throw std::invalid_argument("triple json: diag length must equal n");
        Vec d = Eigen::Map<const Vec>(diag.data(), static_cast<long>(diag.size()));
        cfg.triple.n = n;
        cfg.triple.t0 = t0;
        cfg.triple.t1 = t1;
        cfg.triple.name = "diag";
        cfg.triple.R = [d](double) { return Mat(d.asDiagonal()).eval(); };
    } else {
        throw std::invalid_argument("triple json: R must be a catalog name or {\"diag\": [..]}");
    }
    if (j.contains("basis")) {
        for (const auto& row : j.at("basis")) {
            const auto vals = row.get<std::vector<double>>();
            if (static_cast<int>(vals.size()) != 2 * n)
                throw std::invalid_argument("triple json: basis rows must have 2n entries");
            cfg.basis.push_back(Eigen::Map<const Vec>(vals.data(), static_cast<long>(vals.size())));
        }
    }
    return cfg;
}

void write_field_csv(std::ostream& os, const JacobiField& field) {
    const int n = field.dim();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",J" << i;
    for (int i = 1; i <= n; ++i) os << ",dJ" << i;
    os << "\n";
    char buf[40];
    auto emit = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (std::size_t k = 0; k < field.grid_size(); ++k) {
        emit(field.grid_time(k));
        for (int i = 0; i < n; ++i) { os << ","; emit(field.grid_value(k)[i]); }
        for (int i = 0; i < n; ++i) { os << ","; emit(field.grid_deriv(k)[i]); }
        os << "\n";
    }
}

FieldSamples read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("field csv: missing header");
    int cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    if (cols < 3 || (cols - 1) % 2 != 0) throw std::runtime_error("field csv: malformed header");
    const int n = (cols - 1) / 2;
    FieldSamples out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        if (static_cast<int>(row.size()) != cols)
            throw std::runtime_error("field csv: malformed row");
        out.times.push_back(row[0]);
        Vec J(n), dJ(n);
        for (int i = 0; i < n; ++i) { J[i] = row[1 + i]; dJ[i] = row[1 + n + i]; }
        out.values.push_back(J);
        out.derivs.push_back(dJ);
    }
    return out;
}

} // namespace finsler
