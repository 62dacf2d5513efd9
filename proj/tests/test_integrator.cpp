#include "doctest.h"

#include "dvoc/error.hpp"
#include "dvoc/integrator.hpp"

#include <cmath>

using namespace dvoc;

namespace {

const Complex kRate(-0.4, 2.0 * kPi);

ComplexRhs scalar_rhs(Complex rate) {
    return [rate](const CVector& v) { return CVector(rate * v); };
}

double fixed_step_error(double h) {
    StepControl ctl;
    ctl.fixed_step = h;
    DormandPrince dp(ctl);
    CVector v = CVector::Constant(1, Complex(1.0, 0.5));
    double t = 0.0;
    dp.advance(scalar_rhs(kRate), t, v, 1.0);
    return std::abs(v(0) - Complex(1.0, 0.5) * std::exp(kRate));
}

}  // namespace

TEST_CASE("adaptive run matches the scalar exponential") {
    for (const double rtol : {1e-6, 1e-8, 1e-10}) {
        StepControl ctl;
        ctl.rtol = rtol;
        ctl.atol = rtol * 1e-2;
        DormandPrince dp(ctl);
        CVector v = CVector::Constant(1, Complex(0.3, -0.2));
        double t = 0.0;
        dp.advance(scalar_rhs(kRate), t, v, 1.0);
        CHECK(t == 1.0);
        const Complex exact = Complex(0.3, -0.2) * std::exp(kRate);
        CHECK(std::abs(v(0) - exact) < 10.0 * rtol * std::abs(exact));
        CHECK(dp.stats().accepted > 0);
    }
}

TEST_CASE("fixed-step error ratio under step halving is fifth order") {
    double prev = fixed_step_error(1.0 / 8.0);
    for (const double h : {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}) {
        const double now = fixed_step_error(h);
        const double ratio = prev / now;
        CHECK(ratio >= 16.0);
        CHECK(ratio <= 64.0);
        prev = now;
    }
}

TEST_CASE("advance lands exactly on the target and resumes") {
    StepControl ctl;
    ctl.max_step = 0.07;
    DormandPrince dp(ctl);
    CVector v = CVector::Constant(2, Complex(1.0, 0.0));
    double t = 0.0;
    int steps = 0;
    double last = 0.0;
    const StepObserver obs = [&](double t0, const CVector&, const CVector&, double t1, const CVector&,
                                 const CVector&) {
        CHECK(t0 == last);
        CHECK(t1 > t0);
        CHECK(t1 - t0 <= 0.07 + 1e-15);
        last = t1;
        ++steps;
    };
    dp.advance(scalar_rhs(kRate), t, v, 0.3, obs);
    CHECK(t == 0.3);
    dp.advance(scalar_rhs(kRate), t, v, 0.55, obs);
    CHECK(t == 0.55);
    CHECK(last == 0.55);
    CHECK(steps >= 8);
    CHECK(std::abs(v(0) - std::exp(kRate * 0.55)) < 1e-7);
}

TEST_CASE("step cap limits the step length") {
    DormandPrince dp(StepControl{});
    CVector v = CVector::Constant(1, Complex(1.0, 0.0));
    double t = 0.0;
    double longest = 0.0;
    dp.advance(
        scalar_rhs(kRate), t, v, 1.0,
        [&](double t0, const CVector&, const CVector&, double t1, const CVector&, const CVector&) {
            longest = std::max(longest, t1 - t0);
        },
        [](const CVector&, const CVector&) { return 0.01; });
    CHECK(longest <= 0.01 + 1e-15);
}

TEST_CASE("blow-up raises step collapse or non-finite") {
    const ComplexRhs blowup = [](const CVector& v) { return CVector(v.array().square() * v.array()); };
    DormandPrince dp(StepControl{});
    CVector v = CVector::Constant(1, Complex(10.0, 0.0));
    double t = 0.0;
    try {
        dp.advance(blowup, t, v, 1.0);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK((e.code() == ErrorCode::StepSizeCollapse || e.code() == ErrorCode::NonFinite));
    }

    StepControl fixed;
    fixed.fixed_step = 0.5;
    DormandPrince dpf(fixed);
    v = CVector::Constant(1, Complex(10.0, 0.0));
    t = 0.0;
    try {
        dpf.advance(blowup, t, v, 100.0);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }

    const ComplexRhs nan_rhs = [](const CVector& x) { return CVector(x * std::nan("")); };
    DormandPrince dpn(StepControl{});
    v = CVector::Constant(1, Complex(1.0, 0.0));
    t = 0.0;
    try {
        dpn.advance(nan_rhs, t, v, 1.0);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }
}
