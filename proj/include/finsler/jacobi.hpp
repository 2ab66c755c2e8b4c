#pragma once

#include "finsler/randers.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

/// Curvature data R(t) (symmetric n x n) expressed in a parallel orthonormal
/// frame, over the finite window [t0, t1] standing in for the real line.
struct JacobiTriple {
    int n = 0;
    double t0 = 0.0;
    double t1 = 0.0;
    std::function<Mat(double)> R;
    std::string name;

    double length() const { return t1 - t0; }
    /// R(t) with the symmetry invariant enforced (throws past 1e-12 asymmetry).
    Mat curvature(double t) const;
};

/// Named catalog entries: "flat" (R = 0), "sphere" (R = I_n), "mixed"
/// (R = diag(1, 0)), "hopf" (R = I_2).  Default window [0, 10*pi].
JacobiTriple catalog_triple(const std::string& name, int n = 2);
JacobiTriple catalog_triple(const std::string& name, int n, double t0, double t1);

/// Solution of J'' = -R(t) J sampled on a uniform grid, with value and
/// derivative interpolated by cubic Hermite polynomials between nodes.
class JacobiField {
public:
    JacobiField() = default;
    JacobiField(const JacobiTriple& triple, Vec initial, double grid_step);

    int dim() const { return n_; }
    const Vec& initial() const { return initial_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    double grid_step() const { return step_; }
    std::size_t grid_size() const { return values_.size(); }
    double grid_time(std::size_t k) const { return t0_ + static_cast<double>(k) * step_; }
    const Vec& grid_value(std::size_t k) const { return values_[k]; }
    const Vec& grid_deriv(std::size_t k) const { return derivs_[k]; }

    Vec value(double t) const;
    Vec deriv(double t) const;

private:
    void locate(double t, std::size_t& cell, double& s) const;
    int n_ = 0;
    double t0_ = 0.0, t1_ = 0.0, step_ = 0.0;
    Vec initial_;
    std::vector<Vec> values_;
    std::vector<Vec> derivs_;
    std::vector<Vec> accels_; // -R J at the nodes, for derivative interpolation
};

JacobiField solve_jacobi(const JacobiTriple& triple, const Vec& J0,
                         double grid_step = 1e-3);

/// omega(J1, J2) = <J1'(t), J2(t)> - <J1(t), J2'(t)>; conserved in t.
double omega(const JacobiTriple& triple, const JacobiField& J1,
             const JacobiField& J2, double t);

/// A space of Jacobi fields with linearly independent initial conditions.
struct Subspace {
    JacobiTriple triple;
    std::vector<Vec> initials; // 2n-vectors
    std::vector<JacobiField> fields;

    int dim() const { return static_cast<int>(fields.size()); }
    /// Value / derivative matrices with fields as columns (n x dim).
    Mat values(double t) const;
    Mat derivs(double t) const;
};

/// Solves every initial condition; rejects rank-deficient bases
/// (SVD threshold 1e-10 relative).
Subspace make_subspace(const JacobiTriple& triple, const std::vector<Vec>& initials,
                       double grid_step = 1e-3);

struct SubspaceClass {
    bool isotropic = false;
    bool lagrangian = false;
    double max_omega = 0.0;
};

SubspaceClass classify_subspace(const Subspace& S, double tol = 1e-8);

/// Times where the value matrix drops rank (smallest singular value <= tol),
/// located by a scan and refined to 1e-9.
std::vector<double> singular_instants(const Subspace& S, double scan_step,
                                      double tol);

/// Orthonormal basis of V_t = I(t) + D(I^0_t)(t), as matrix columns.  Its
/// column count always equals dim(S).
Mat vertical_bundle(const Subspace& S, double t);

/// Projector onto V_t (frame-independent, hence continuous in t).
Mat vertical_projector(const Subspace& S, double t);

/// A-tensor value on a constant extension of X: the mixed components of the
/// derivative of the splitting, computed from a central difference of the
/// vertical projector (step 1e-5).
Vec a_tensor(const Subspace& S, double t, const Vec& X);

/// Same as a linear map (n x n matrix).
Mat a_tensor_matrix(const Subspace& S, double t);

/// Transverse Jacobi triple of an isotropic subspace: rank n - dim S, with
/// curvature E^T (R - 3 A^2) E in a parallel orthonormal frame E of the
/// horizontal bundle.  Keeps the frame grid for projecting fields.
struct TransverseTriple {
    JacobiTriple triple;       // the quotient triple (rank n - dim S)
    JacobiTriple parent;       // the original triple
    Subspace isotropic;        // copy of S
    double frame_step = 0.0;
    std::vector<Mat> frames;   // n x (n - dim S), one per grid node

    Mat frame(double t) const; // interpolated (re-orthonormalized) frame
};

TransverseTriple transverse_triple(const JacobiTriple& triple, const Subspace& S,
                                   double frame_step = 1e-3);

/// Frame coefficients of the horizontal projection of a parent-triple field,
/// and the omega form computed on those coefficients.
Vec project_field_value(const TransverseTriple& tt, const JacobiField& J, double t);
Vec project_field_deriv(const TransverseTriple& tt, const JacobiField& J, double t);
double transverse_omega(const TransverseTriple& tt, const JacobiField& J1,
                        const JacobiField& J2, double t);

/// Riccati operator S = J'(t) J(t)^{-1} of a Lagrangian subspace at an
/// L-regular time (value-matrix condition <= 1e8); symmetric by
/// self-adjointness.  Errors name the nearest singular instant.
Mat riccati_operator(const JacobiTriple& triple, const Subspace& L, double t);

/// Frobenius norm of S'(t) + S(t)^2 + R(t), S' by central difference.
double riccati_residual(const JacobiTriple& triple, const Subspace& L, double t,
                        double fd_step = 1e-4);

struct RiccatiReport {
    bool r_psd = false;         // R(t) PSD at all scan points
    bool window_regular = false; // L-regular on the whole scan
    bool applicable = false;    // both of the above
    double max_trace_S = 0.0;
    double max_norm_S = 0.0;
    double window_length = 0.0;
    std::vector<double> singular_times;
};

/// Scans the window: if R >= 0 and L stays regular, a vanishing-trace
/// (hence vanishing) Riccati operator is expected; the report records the
/// observed maxima and whether the hypotheses held.
RiccatiReport trace_riccati_check(const JacobiTriple& triple, const Subspace& L,
                                  double scan_step = 1e-2);

struct WilkingDecomposition {
    Subspace null_span;     // fields vanishing somewhere in the window
    Subspace parallel_span; // fields with J' and RJ below tolerance
    double reconstruction_error = 0.0; // direct-sum defect in coefficient space
    double claim_b_r_h = 0.0; // max ||P_H R P_H|| with V from null_span
    double claim_b_a = 0.0;   // max ||A-tensor|| with V from null_span
};

/// Splits a Lagrangian subspace under nonnegative curvature into the span of
/// vanishing fields and the parallel fields.  Throws std::invalid_argument
/// when R(t) has an eigenvalue below -1e-10 at a scan point.
WilkingDecomposition wilking_decompose(const JacobiTriple& triple, const Subspace& L,
                                       double scan_step = 1e-2, double tol = 1e-6);

/// Lagrangian of fields leaving a submanifold orthogonally: tangent directions
/// get (e_i, S e_i), normal directions (0, nu_j).  Bases must be orthonormal
/// and mutually orthogonal, the shape operator symmetric.
Subspace l_jacobi_initial_conditions(const JacobiTriple& triple,
                                     const std::vector<Vec>& tangent_basis,
                                     const Mat& shape_operator,
                                     const std::vector<Vec>& normal_basis,
                                     double grid_step = 1e-3);

/// Isotropic space of holonomy-type fields: (v_i, -(S + A*) v_i).
Subspace holonomy_initial_conditions(const JacobiTriple& triple,
                                     const std::vector<Vec>& vertical_basis,
                                     const Mat& S, const Mat& A_star,
                                     double grid_step = 1e-3);

/// JSON schema: { "n": int, "R": "flat"|"sphere"|"mixed"|"hopf"|{"diag":[..]},
/// "domain": [a, b], "basis": [[2n numbers]...] }.  basis/domain optional.
struct TripleConfig {
    JacobiTriple triple;
    std::vector<Vec> basis;
};
TripleConfig parse_triple_json(const std::string& text);

/// CSV schema: header t,J1..Jn,dJ1..dJn, %.17g floats, one row per grid node.
void write_field_csv(std::ostream& os, const JacobiField& field);
/// Round-trip reader; returns (times, values, derivs) re-packed as a field
/// sampled at the stored grid.
struct FieldSamples {
    std::vector<double> times;
    std::vector<Vec> values;
    std::vector<Vec> derivs;
};
FieldSamples read_field_csv(std::istream& is);

} // namespace finsler
