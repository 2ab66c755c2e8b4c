#pragma once

#include <Eigen/Dense>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Pointwise Zermelo data: an inner product h together with a wind vector w
/// whose h-norm is strictly below 1.  Immutable after construction.
class RandersDatum {
public:
    RandersDatum(Mat h, Vec w);

    int dim() const { return static_cast<int>(w_.size()); }
    const Mat& h() const { return h_; }
    const Vec& wind() const { return w_; }

    double h_inner(const Vec& a, const Vec& b) const { return a.dot(h_ * b); }
    double h_norm(const Vec& a) const;

    /// h(w,w), cached.
    double wind_sq() const { return w2_; }
    /// 1 - h(w,w); the leading quadratic coefficient.
    double alpha() const { return a_; }

private:
    Mat h_;
    Vec w_;
    double w2_ = 0.0;
    double a_ = 1.0;
};

/// Norm F(v): the positive root of F^2 (1 - h(w,w)) + 2 F h(v,w) - h(v,v) = 0,
/// equivalently the solution of ||v - F w||_h = F.  F(0) = 0.
double randers_norm(const RandersDatum& d, const Vec& v);

/// Gradient of F at v != 0 (closed form).
Vec randers_norm_gradient(const RandersDatum& d, const Vec& v);

/// Fundamental tensor g_v = 1/2 Hess(F^2) at v != 0.  Symmetric positive definite.
Mat fundamental_tensor(const RandersDatum& d, const Vec& v);

/// Cartan tensor C_v(w1,w2,w3) = 1/4 third vertical derivative of F^2 at v != 0.
/// Evaluated by differentiating the analytic fundamental tensor in direction w1.
double cartan_tensor(const RandersDatum& d, const Vec& v,
                     const Vec& w1, const Vec& w2, const Vec& w3);

/// Legendre map: momentum p with p.u = g_v(v,u) for all u.  p = F(v) grad F(v).
Vec legendre(const RandersDatum& d, const Vec& v);

} // namespace finsler
