#pragma once

// Lyapunov function for the drooped steady-state set, its decrease bound, and
// sampled checks of the two auxiliary quadratic-form inequalities.

#include "dvoc/certify.hpp"
#include "dvoc/dynamics.hpp"
#include "dvoc/spectral.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace dvoc {

struct LyapunovContext {
    SystemMatrix sys;
    Setpoints sp;
    Projector proj;
    CVector phi1;
    Complex lambda1;
    double alpha1 = 0.0;
    double c = 0.0;
    double shifted_norm = 0.0;  // ||A - lambda1 I||
    double radius = 0.0;        // ||v_ss||

    std::size_t size() const { return sys.size(); }
};

/// Requires condition3 (c > 0), alpha > 0, consistent setpoints and a
/// well-posed amplitude; throws ConditionNotCertified, InconsistentSetpoints
/// or IllPosedAmplitude otherwise.
LyapunovContext make_lyapunov_context(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env);

LyapunovContext make_lyapunov_context(const SystemMatrix& sys, const Setpoints& sp,
                                      const StabilityCertificate& cert);

double lyapunov_value(const CVector& v, const LyapunovContext& ctx);

struct LyapunovRate {
    double vdot = 0.0;
    double bound = 0.0;

    bool holds() const { return vdot <= bound + 1e-9 * (1.0 + std::abs(bound)); }
};

/// Analytic derivative of V along dvoc_rhs and the quadratic upper bound.
LyapunovRate lyapunov_rate(const CVector& v, const LyapunovContext& ctx);

struct QuadraticCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;   // 1e-12 ||v||^2
    double excess = 0.0;  // (lhs - rhs - slack) / ||v||^2, <= 0 when ok

    bool ok() const { return lhs <= rhs + slack; }
};

/// v^H (Phi P + P Phi) v <= 2 v^H P v.
QuadraticCheck lemma1_check(const CVector& v, const LyapunovContext& ctx);

/// 1/2 v^H P (A^H + A + 2 eta alpha I) P v <= -eta c ||v||_S^2.
QuadraticCheck lemma2_check(const CVector& v, const LyapunovContext& ctx);

struct SampleOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double min_scale = 1e-3;  // relative to ||v_ss||
    double max_scale = 1e3;
};

/// Deterministic sample `index` of stream `seed`: every fourth sample is a
/// perturbation of a point on the steady-state circle, the rest are complex
/// Gaussian directions with log-uniform radius in [min_scale, max_scale] ||v_ss||.
CVector sample_state(const LyapunovContext& ctx, const SampleOptions& opts, std::size_t index);

struct SampleTally {
    std::size_t samples = 0;
    std::size_t lemma1_failures = 0;
    std::size_t lemma2_failures = 0;
    std::size_t rate_failures = 0;
    double worst_lemma1 = -std::numeric_limits<double>::infinity();
    double worst_lemma2 = -std::numeric_limits<double>::infinity();
    double worst_rate = -std::numeric_limits<double>::infinity();

    bool all_pass() const { return lemma1_failures == 0 && lemma2_failures == 0 && rate_failures == 0; }
    bool operator==(const SampleTally&) const = default;
};

/// Runs lemma1_check, lemma2_check and lyapunov_rate over the sample stream.
/// The parallel kernel produces the same tally as the serial reference.
SampleTally sample_checks(const LyapunovContext& ctx, const SampleOptions& opts,
                          Execution exec = Execution::Parallel);

}  // namespace dvoc
