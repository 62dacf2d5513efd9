#include "dvoc/lyapunov.hpp"

#include "dvoc/error.hpp"
#include "dvoc/random.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dvoc {

namespace {

constexpr double kQuadraticSlack = 1e-12;

QuadraticCheck finish(double lhs, double rhs, double vnorm2) {
    QuadraticCheck out;
    out.lhs = lhs;
    out.rhs = rhs;
    out.slack = kQuadraticSlack * vnorm2;
    out.excess = vnorm2 > 0.0 ? (lhs - rhs - out.slack) / vnorm2 : lhs - rhs;
    return out;
}

struct SampleOutcome {
    double lemma1;
    double lemma2;
    double rate;
};

SampleOutcome evaluate_sample(const LyapunovContext& ctx, const SampleOptions& opts,
                              std::size_t index) {
    const CVector v = sample_state(ctx, opts, index);
    const QuadraticCheck l1 = lemma1_check(v, ctx);
    const QuadraticCheck l2 = lemma2_check(v, ctx);
    const LyapunovRate rate = lyapunov_rate(v, ctx);
    const double rate_excess =
        (rate.vdot - rate.bound - 1e-9 * (1.0 + std::abs(rate.bound))) / (1.0 + std::abs(rate.bound));
    return {l1.excess, l2.excess, rate_excess};
}

}  // namespace

LyapunovContext make_lyapunov_context(const SystemMatrix& sys, const Setpoints& sp,
                                      const StabilityCertificate& cert) {
    if (!(sys.gains.alpha > 0.0)) {
        throw Error(ErrorCode::ConditionNotCertified, "Lyapunov analysis needs alpha > 0");
    }
    if (!cert.condition3 || !cert.alpha1) {
        throw Error(ErrorCode::ConditionNotCertified,
                    "stability margin c = " + std::to_string(cert.margin_c) + " is not positive");
    }
    if (!cert.setpoints_consistent) {
        throw Error(ErrorCode::InconsistentSetpoints,
                    "voltage setpoints are not consistent with the dominant eigenvector");
    }
    LyapunovContext ctx{sys,
                        sp,
                        make_projector(cert.spectral.phi1),
                        cert.spectral.phi1,
                        cert.spectral.lambda1,
                        *cert.alpha1,
                        cert.margin_c,
                        cert.shifted_norm,
                        steady_state_radius(sp.v_star, sys.gains, cert.spectral.lambda1)};
    return ctx;
}

LyapunovContext make_lyapunov_context(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env) {
    const StabilityCertificate cert = check_condition3(net, sp, gains, env);
    const SystemMatrix sys = build_system_matrix(net, normalize_setpoints(sp), gains);
    return make_lyapunov_context(sys, sp, cert);
}

double lyapunov_value(const CVector& v, const LyapunovContext& ctx) {
    const double gain = ctx.sys.gains.eta * ctx.sys.gains.alpha;
    const double droop = ctx.lambda1.real() / gain;
    const CVector pv = ctx.proj.P * v;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double vs = ctx.sp.v_star(k);
        const double term = droop * vs + (vs * vs - std::norm(v(k))) / vs;
        sum += term * term;
    }
    return 0.5 * pv.squaredNorm() + 0.5 * gain * ctx.alpha1 * sum;
}

LyapunovRate lyapunov_rate(const CVector& v, const LyapunovContext& ctx) {
    const double gain = ctx.sys.gains.eta * ctx.sys.gains.alpha;
    const double re1 = ctx.lambda1.real();
    const CVector f = dvoc_rhs(v, ctx.sys, ctx.sp);
    const CVector pv = ctx.proj.P * v;
    const RVector phi_err = regulation_error(v, ctx.sp.v_star);

    // d/dt (1/2 v^H P v) = Re((Pv)^H (P vdot))
    double vdot = pv.dot(ctx.proj.P * f).real();
    double weighted2 = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double w = re1 + gain * phi_err(k);
        vdot -= 2.0 * ctx.alpha1 * w * (f(k) * std::conj(v(k))).real();
        weighted2 += w * w * std::norm(v(k));
    }
    const double inner = ctx.shifted_norm * pv.norm() + std::sqrt(weighted2);
    return {vdot, -ctx.alpha1 * inner * inner};
}

QuadraticCheck lemma1_check(const CVector& v, const LyapunovContext& ctx) {
    const RVector phi_err = regulation_error(v, ctx.sp.v_star);
    const CVector pv = ctx.proj.P * v;
    const CVector phiv = phi_err.cast<Complex>().asDiagonal() * v;
    const CVector p_phiv = ctx.proj.P * phiv;
    // v^H Phi P v + v^H P Phi v
    const double lhs = (phiv.dot(pv) + v.dot(p_phiv)).real();
    const double rhs = 2.0 * v.dot(pv).real();
    return finish(lhs, rhs, v.squaredNorm());
}

QuadraticCheck lemma2_check(const CVector& v, const LyapunovContext& ctx) {
    const double gain = ctx.sys.gains.eta * ctx.sys.gains.alpha;
    const CVector pv = ctx.proj.P * v;
    const CVector apv = ctx.sys.A * pv;
    // 1/2 w^H (A^H + A + 2 eta alpha) w = Re(w^H A w) + eta alpha ||w||^2
    const double lhs = pv.dot(apv).real() + gain * pv.squaredNorm();
    const double rhs = -ctx.sys.gains.eta * ctx.c * pv.squaredNorm();
    return finish(lhs, rhs, v.squaredNorm());
}

CVector sample_state(const LyapunovContext& ctx, const SampleOptions& opts, std::size_t index) {
    Rng rng(opts.seed, index);
    const Eigen::Index n = ctx.phi1.size();
    CVector g(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto [re, im] = rng.normal_pair();
        g(k) = Complex(re, im);
    }
    g /= g.norm();
    if (index % 4 == 0) {
        const Complex on_circle = std::polar(ctx.radius, rng.uniform(-kPi, kPi));
        const double eps = std::pow(10.0, rng.uniform(-6.0, -1.0)) * ctx.radius;
        return on_circle * ctx.phi1 + eps * g;
    }
    const double lo = std::log(opts.min_scale);
    const double hi = std::log(opts.max_scale);
    return std::exp(rng.uniform(lo, hi)) * ctx.radius * g;
}

SampleTally sample_checks(const LyapunovContext& ctx, const SampleOptions& opts, Execution exec) {
    std::vector<SampleOutcome> outcomes(opts.samples);
    const auto count = static_cast<std::ptrdiff_t>(opts.samples);
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            outcomes[static_cast<std::size_t>(i)] =
                evaluate_sample(ctx, opts, static_cast<std::size_t>(i));
        }
    } else {
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            outcomes[static_cast<std::size_t>(i)] =
                evaluate_sample(ctx, opts, static_cast<std::size_t>(i));
        }
    }

    SampleTally tally;
    tally.samples = opts.samples;
    for (const auto& o : outcomes) {
        tally.lemma1_failures += o.lemma1 > 0.0;
        tally.lemma2_failures += o.lemma2 > 0.0;
        tally.rate_failures += o.rate > 0.0;
        tally.worst_lemma1 = std::max(tally.worst_lemma1, o.lemma1);
        tally.worst_lemma2 = std::max(tally.worst_lemma2, o.lemma2);
        tally.worst_rate = std::max(tally.worst_rate, o.rate);
    }
    return tally;
}

}  // namespace dvoc
