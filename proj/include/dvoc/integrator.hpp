#pragma once

// Explicit Dormand-Prince 5(4) integrator for autonomous complex ODEs.

#include "dvoc/types.hpp"

#include <cstddef>
#include <functional>
#include <optional>

namespace dvoc {

struct StepControl {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = 0.0;  // <= 0 means unbounded
    double min_step = 1e-15;
    std::optional<double> fixed_step;  // disables error control when set
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

using ComplexRhs = std::function<CVector(const CVector&)>;

/// Upper bound on the next step given the current state and its derivative.
using StepCap = std::function<double(const CVector& v, const CVector& f)>;

/// Called after every accepted step with both endpoints and their derivatives.
using StepObserver = std::function<void(double t0, const CVector& v0, const CVector& f0, double t1,
                                        const CVector& v1, const CVector& f1)>;

class DormandPrince {
public:
    explicit DormandPrince(StepControl control) : control_(control) {}

    /// Advances `v` from `t` to exactly `t_end`. Throws StepSizeCollapse or
    /// NonFinite. The step size carries over between calls.
    void advance(const ComplexRhs& rhs, double& t, CVector& v, double t_end,
                 const StepObserver& observer = {}, const StepCap& cap = {});

    /// Forget the carried step size (used after a discontinuity).
    void reset_step() { h_ = 0.0; }

    const IntegrationStats& stats() const { return stats_; }
    const StepControl& control() const { return control_; }

private:
    double error_norm(const CVector& err, const CVector& y0, const CVector& y1) const;
    double initial_step(const ComplexRhs& rhs, const CVector& v, const CVector& f, double span);

    StepControl control_;
    IntegrationStats stats_;
    double h_ = 0.0;
};

}  // namespace dvoc
