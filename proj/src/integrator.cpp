#include "dvoc/integrator.hpp"

#include "dvoc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dvoc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

bool all_finite(const CVector& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v(k).real()) || !std::isfinite(v(k).imag())) return false;
    }
    return true;
}

}  // namespace

double DormandPrince::error_norm(const CVector& err, const CVector& y0, const CVector& y1) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < err.size(); ++k) {
        const double sc = control_.atol + control_.rtol * std::max(std::abs(y0(k)), std::abs(y1(k)));
        const double r = std::abs(err(k)) / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

double DormandPrince::initial_step(const ComplexRhs& rhs, const CVector& v, const CVector& f,
                                   double span) {
    auto scaled = [&](const CVector& x) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double sc = control_.atol + control_.rtol * std::abs(v(k));
            acc += std::norm(x(k)) / (sc * sc);
        }
        return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(x.size(), 1)));
    };
    const double d0 = scaled(v);
    const double d1 = scaled(f);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    const CVector v1 = v + h0 * f;
    const CVector f1 = rhs(v1);
    ++stats_.rhs_evals;
    const double d2 = scaled(f1 - f) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, span});
}

void DormandPrince::advance(const ComplexRhs& rhs, double& t, CVector& v, double t_end,
                            const StepObserver& observer, const StepCap& cap) {
    if (!(t_end >= t)) {
        throw Error(ErrorCode::InvalidArgument, "integration target lies before the current time");
    }
    if (t_end == t) return;

    CVector k1 = rhs(v);
    ++stats_.rhs_evals;
    if (!all_finite(k1)) {
        throw Error(ErrorCode::NonFinite, "right-hand side is not finite at t = " + std::to_string(t));
    }

    const bool fixed = control_.fixed_step.has_value();
    if (fixed) {
        h_ = *control_.fixed_step;
    } else if (h_ <= 0.0) {
        h_ = initial_step(rhs, v, k1, t_end - t);
    }

    bool last_rejected = false;
    CVector k2, k3, k4, k5, k6, k7, y_new;
    while (t < t_end) {
        double h = h_;
        if (control_.max_step > 0.0) h = std::min(h, control_.max_step);
        if (cap) h = std::min(h, cap(v, k1));
        const double remaining = t_end - t;
        bool hits_end = false;
        if (h >= remaining * (1.0 - 1e-12)) {
            h = remaining;
            hits_end = true;
        }
        if (!fixed && h < control_.min_step && !hits_end) {
            throw Error(ErrorCode::StepSizeCollapse,
                        "step size " + std::to_string(h) + " at t = " + std::to_string(t));
        }

        k2 = rhs(v + h * (a21 * k1));
        k3 = rhs(v + h * (a31 * k1 + a32 * k2));
        k4 = rhs(v + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(v + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(v + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new = v + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(y_new);
        stats_.rhs_evals += 6;

        if (!all_finite(y_new) || !all_finite(k7)) {
            if (fixed) {
                throw Error(ErrorCode::NonFinite, "state is not finite at t = " + std::to_string(t));
            }
            ++stats_.rejected;
            h_ = 0.25 * h;
            last_rejected = true;
            continue;
        }

        if (!fixed) {
            const CVector err =
                h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double en = error_norm(err, v, y_new);
            if (!(en <= 1.0)) {
                ++stats_.rejected;
                const double fac = std::max(kFacMin, kSafety * std::pow(std::max(en, 1e-300), -0.2));
                h_ = h * std::min(1.0, fac);
                last_rejected = true;
                if (h_ < control_.min_step) {
                    throw Error(ErrorCode::StepSizeCollapse,
                                "step size " + std::to_string(h_) + " at t = " + std::to_string(t));
                }
                continue;
            }
            double fac = en > 0.0 ? kSafety * std::pow(en, -0.2) : kFacMax;
            fac = std::clamp(fac, kFacMin, last_rejected ? 1.0 : kFacMax);
            // A step shortened to land on t_end does not shrink the carried size.
            if (!hits_end || h >= h_) h_ = h * fac;
            last_rejected = false;
        }

        const double t_new = hits_end ? t_end : t + h;
        if (observer) observer(t, v, k1, t_new, y_new, k7);
        t = t_new;
        v.swap(y_new);
        k1.swap(k7);
        ++stats_.accepted;
    }
}

}  // namespace dvoc
