#include "finsler/randers.hpp"

#include <cmath>
#include <stdexcept>

namespace finsler {

namespace {
constexpr double kWindMargin = 1e-8; // winds with ||w||_h > 1 - margin are rejected

void require_nonzero(const Vec& v, const char* what) {
    if (v.size() == 0 || v.norm() == 0.0)
        throw std::domain_error(std::string(what) + ": undefined at the zero section");
    if (!v.allFinite())
        throw std::domain_error(std::string(what) + ": non-finite vector");
}
} // namespace

RandersDatum::RandersDatum(Mat h, Vec w) : h_(std::move(h)), w_(std::move(w)) {
    if (h_.rows() != h_.cols() || h_.rows() != w_.size())
        throw std::invalid_argument("RandersDatum: dimension mismatch between h and w");
    if (!h_.allFinite() || !w_.allFinite())
        throw std::invalid_argument("RandersDatum: non-finite entries");
    if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + h_.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("RandersDatum: h is not symmetric");
    Eigen::LLT<Mat> llt(h_);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("RandersDatum: h is not positive definite");
    w2_ = w_.dot(h_ * w_);
    if (w2_ >= 1.0 - kWindMargin)
        throw std::invalid_argument("RandersDatum: wind h-norm must stay strictly below 1");
    a_ = 1.0 - w2_;
}

double RandersDatum::h_norm(const Vec& a) const {
    return std::sqrt(std::max(0.0, h_inner(a, a)));
}

double randers_norm(const RandersDatum& d, const Vec& v) {
    const double b = d.h_inner(v, d.wind());
    const double c = d.h_inner(v, v);
    const double s = std::sqrt(b * b + d.alpha() * c);
    return (s - b) / d.alpha();
}

Vec randers_norm_gradient(const RandersDatum& d, const Vec& v) {
    require_nonzero(v, "randers_norm_gradient");
    const Vec hw = d.h() * d.wind();
    const Vec hv = d.h() * v;
    const double b = v.dot(hw);
    const double c = v.dot(hv);
    const double a = d.alpha();
    const double s = std::sqrt(b * b + a * c);
    return (-hw + (b * hw + a * hv) / s) / a;
}

Mat fundamental_tensor(const RandersDatum& d, const Vec& v) {
    require_nonzero(v, "fundamental_tensor");
    const Vec hw = d.h() * d.wind();
    const Vec hv = d.h() * v;
    const double b = v.dot(hw);
    const double c = v.dot(hv);
    const double a = d.alpha();
    const double s = std::sqrt(b * b + a * c);
    const double F = (s - b) / a;
    const Vec grad = (-hw + (b * hw + a * hv) / s) / a;
    // Hess F = [ (hw hw^T + a h)/s - q q^T / s^3 ] / a  with  q = b hw + a hv
    const Vec q = b * hw + a * hv;
    Mat hess = ((hw * hw.transpose() + a * d.h()) / s - (q * q.transpose()) / (s * s * s)) / a;
    // g_v = 1/2 Hess(F^2) = grad grad^T + F Hess F
    Mat g = grad * grad.transpose() + F * hess;
    return 0.5 * (g + g.transpose());
}

double cartan_tensor(const RandersDatum& d, const Vec& v,
                     const Vec& w1, const Vec& w2, const Vec& w3) {
    require_nonzero(v, "cartan_tensor");
    // C_v(w1,w2,w3) = 1/2 d/ds g_{v+s w1}(w2,w3) at s = 0, with analytic g.
    const double scale = v.norm() / std::max(1.0, w1.norm());
    const double step = 1e-5 * std::max(scale, 1e-6);
    const Mat gp = fundamental_tensor(d, v + step * w1);
    const Mat gm = fundamental_tensor(d, v - step * w1);
    return 0.5 * w2.dot((gp - gm) * w3) / (2.0 * step);
}

Vec legendre(const RandersDatum& d, const Vec& v) {
    require_nonzero(v, "legendre");
    return randers_norm(d, v) * randers_norm_gradient(d, v);
}

} // namespace finsler
