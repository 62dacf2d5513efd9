#include "dvoc/simkit.hpp"

#include "dvoc/error.hpp"
#include "dvoc/lyapunov.hpp"
#include "dvoc/random.hpp"
#include "dvoc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace dvoc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Derived quantities for one parameter segment.
struct SegmentModel {
    SystemMatrix sys;
    SystemMatrix frame_sys;  // A - j omega_frame I
    Setpoints sp;
    std::optional<SpectralReport> spectral;
    std::optional<Projector> proj;
    bool has_T = false;
    std::optional<LyapunovContext> lyapunov;
};

SegmentModel build_model(const SegmentParams& params, const OperatingEnvelope& env,
                         double omega_frame) {
    SegmentModel m{build_system_matrix(params.network, normalize_setpoints(params.setpoints),
                                       params.gains),
                   {}, params.setpoints, std::nullopt, std::nullopt, false, std::nullopt};
    m.frame_sys = m.sys;
    m.frame_sys.A.diagonal().array() -= Complex(0.0, omega_frame);
    try {
        m.spectral = spectral_decomposition(m.sys.A);
        m.proj = make_projector(m.spectral->phi1);
        const bool consistent =
            setpoint_ratio_error(m.sp.v_star, m.spectral->phi1) <= kConsistencyTol;
        if (consistent && params.gains.alpha > 0.0 &&
            1.0 + m.spectral->lambda1.real() / (params.gains.eta * params.gains.alpha) > 0.0) {
            m.has_T = true;
        }
    } catch (const Error&) {
        m.spectral.reset();
        m.proj.reset();
    }
    if (m.has_T) {
        try {
            const StabilityCertificate cert =
                check_condition3(params.network, params.setpoints, params.gains, env);
            if (cert.condition3) m.lyapunov = make_lyapunov_context(m.sys, m.sp, cert);
        } catch (const Error&) {
            m.lyapunov.reset();
        }
    }
    return m;
}

Sample make_sample(double t, int segment, const CVector& v, const RVector& theta,
                   const SegmentModel& m) {
    Sample s;
    s.t = t;
    s.segment = segment;
    s.v = v;
    s.theta = theta;
    const CVector f = dvoc_rhs(v, m.sys, m.sp);
    s.varpi.resize(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        s.varpi(k) = v(k) == Complex(0.0, 0.0) ? Complex(kNaN, kNaN) : f(k) / v(k);
    }
    if (m.proj) s.dist_S = distance_to_S(v, *m.proj);
    if (m.has_T) s.dist_T = distance_to_T(v, *m.spectral, m.sp, m.sys.gains);
    if (m.lyapunov) s.V = lyapunov_value(v, *m.lyapunov);
    return s;
}

void apply_event(const EventAction& action, SegmentParams& p) {
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, SetAlpha>) {
                p.gains.alpha = ev.alpha;
                p.gains.validate();
            } else if constexpr (std::is_same_v<T, ScaleVStar>) {
                if (!(ev.factor > 0.0)) {
                    throw Error(ErrorCode::InvalidArgument, "v* scale factor must be positive");
                }
                p.setpoints.v_star *= ev.factor;
                if (ev.scale_powers) {
                    p.setpoints.p_star *= ev.factor * ev.factor;
                    p.setpoints.q_star *= ev.factor * ev.factor;
                }
            } else if constexpr (std::is_same_v<T, SetSetpoints>) {
                if (ev.setpoints.size() != p.setpoints.size()) {
                    throw Error(ErrorCode::DimensionMismatch, "new setpoints have the wrong size");
                }
                ev.setpoints.validate();
                p.setpoints = ev.setpoints;
            } else {
                if (ev.network.size() != p.network.size()) {
                    throw Error(ErrorCode::DimensionMismatch, "swapped network has the wrong size");
                }
                p.network = ev.network;
            }
        },
        action);
}

std::vector<double> output_times(const SimConfig& cfg, const std::vector<Event>& events) {
    std::vector<double> times;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * cfg.sample_dt;
        if (t >= cfg.t_end) break;
        times.push_back(t);
    }
    times.push_back(cfg.t_end);
    for (const auto& ev : events) times.push_back(ev.time);
    std::sort(times.begin(), times.end());
    const double merge = 1e-12 * std::max(1.0, cfg.t_end);
    std::vector<double> out;
    for (double t : times) {
        if (out.empty() || t - out.back() > merge) out.push_back(t);
    }
    return out;
}

}  // namespace

void SimConfig::validate() const {
    if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "sim.t_end must be positive");
    if (!(rtol > 0.0)) throw Error(ErrorCode::InvalidArgument, "sim.rtol must be positive");
    if (!(atol > 0.0)) throw Error(ErrorCode::InvalidArgument, "sim.atol must be positive");
    if (!(sample_dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "sim.sample_dt must be positive");
    if (max_step && !(*max_step > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sim.max_step must be positive");
    }
    if (fixed_step && !(*fixed_step > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sim.fixed_step must be positive");
    }
}

std::span<const Sample> Trajectory::segment_samples(int segment) const {
    auto first = std::find_if(samples.begin(), samples.end(),
                              [&](const Sample& s) { return s.segment == segment; });
    auto last = std::find_if(first, samples.end(),
                             [&](const Sample& s) { return s.segment != segment; });
    return {first, last};
}

Trajectory integrate(const CVector& x0, const NetworkModel& net, const Setpoints& sp,
                     const ControlGains& gains, const std::vector<Event>& events,
                     const SimConfig& cfg) {
    cfg.validate();
    gains.validate();
    sp.validate();
    if (static_cast<std::size_t>(x0.size()) != net.size() || sp.size() != net.size()) {
        throw Error(ErrorCode::DimensionMismatch, "initial state, setpoints and network disagree");
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].time < 0.0 || events[i].time > cfg.t_end) {
            throw Error(ErrorCode::InvalidArgument, "event time outside [0, t_end]");
        }
        if (i > 0 && !(events[i].time > events[i - 1].time)) {
            throw Error(ErrorCode::InvalidArgument, "event times must be strictly increasing");
        }
    }

    StepControl control;
    control.rtol = cfg.rtol;
    control.atol = cfg.atol;
    control.fixed_step = cfg.fixed_step;
    if (cfg.max_step) {
        control.max_step = *cfg.max_step;
    } else if (gains.omega0 != 0.0) {
        control.max_step = 0.2 / std::abs(gains.omega0);
    }
    DormandPrince solver(control);

    // The state is integrated in the frame rotating at the nominal frequency,
    // u = e^{-j omega0 t} v, which is exact by rotational symmetry.
    const double omega_frame = gains.omega0;
    Trajectory traj;
    SegmentParams params{0.0, cfg.t_end, net, sp, gains};
    SegmentModel model = build_model(params, cfg.envelope, omega_frame);
    int segment = 0;

    double t = 0.0;
    CVector v = x0;  // rotating-frame state
    RVector theta(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) theta(k) = v(k) == Complex(0.0, 0.0) ? kNaN : std::arg(v(k));

    const StepObserver track_phase = [&theta](double t0, const CVector& v0, const CVector& f0,
                                              double t1, const CVector& v1, const CVector& f1) {
        const double h = t1 - t0;
        for (Eigen::Index k = 0; k < v1.size(); ++k) {
            if (v1(k) == Complex(0.0, 0.0)) {
                theta(k) = kNaN;
                continue;
            }
            const double a1 = std::arg(v1(k));
            if (std::isnan(theta(k)) || v0(k) == Complex(0.0, 0.0)) {
                theta(k) = a1;
                continue;
            }
            const double predicted =
                theta(k) + 0.5 * h * ((f0(k) / v0(k)).imag() + (f1(k) / v1(k)).imag());
            theta(k) = a1 + 2.0 * kPi * std::round((predicted - a1) / (2.0 * kPi));
        }
    };
    const StepCap angle_cap = [](const CVector& x, const CVector& f) {
        double rate = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            if (x(k) != Complex(0.0, 0.0)) rate = std::max(rate, std::abs((f(k) / x(k)).imag()));
        }
        return rate > 0.0 ? 0.25 * kPi / rate : std::numeric_limits<double>::infinity();
    };

    std::size_t next_event = 0;
    bool first = true;
    for (double t_out : output_times(cfg, events)) {
        if (!first) {
            const ComplexRhs rhs = [&model](const CVector& x) {
                return dvoc_rhs(x, model.frame_sys, model.sp);
            };
            solver.advance(rhs, t, v, t_out, track_phase, angle_cap);
        }
        first = false;
        const Complex carrier = std::polar(1.0, omega_frame * t);
        traj.samples.push_back(make_sample(t, segment, CVector(carrier * v),
                                           (theta.array() + omega_frame * t).matrix(), model));

        while (next_event < events.size() && events[next_event].time <= t + 1e-12 * std::max(1.0, cfg.t_end)) {
            params.t_end = t;
            traj.segments.push_back(params);
            apply_event(events[next_event].action, params);
            params.t_start = t;
            params.t_end = cfg.t_end;
            model = build_model(params, cfg.envelope, omega_frame);
            solver.reset_step();
            ++segment;
            ++next_event;
        }
    }
    params.t_end = cfg.t_end;
    traj.segments.push_back(params);
    traj.stats = solver.stats();
    return traj;
}

std::vector<Trajectory> integrate_batch(const std::vector<CVector>& x0s, const NetworkModel& net,
                                        const Setpoints& sp, const ControlGains& gains,
                                        const std::vector<Event>& events, const SimConfig& cfg,
                                        Execution exec) {
    std::vector<Trajectory> out(x0s.size());
    std::vector<std::exception_ptr> errors(x0s.size());
    const auto count = static_cast<std::ptrdiff_t>(x0s.size());
    auto run_one = [&](std::ptrdiff_t i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            out[idx] = integrate(x0s[idx], net, sp, gains, events, cfg);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < count; ++i) run_one(i);
    } else {
        for (std::ptrdiff_t i = 0; i < count; ++i) run_one(i);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

SyncVerdict detect_sync(std::span<const Sample> samples, double window, double tol) {
    if (samples.size() < 2) {
        throw Error(ErrorCode::InsufficientSamples, "need at least two samples");
    }
    const double t_last = samples.back().t;
    if (t_last - samples.front().t < window * (1.0 - 1e-9)) {
        throw Error(ErrorCode::InsufficientSamples, "samples span less than the window");
    }
    const double t_from = t_last - window * (1.0 + 1e-12);
    Complex mean{0.0, 0.0};
    std::size_t count = 0;
    std::size_t first_in_window = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].t < t_from) continue;
        first_in_window = std::min(first_in_window, i);
        for (Eigen::Index k = 0; k < samples[i].varpi.size(); ++k) {
            mean += samples[i].varpi(k);
            ++count;
        }
    }
    if (samples.size() - first_in_window < 2) {
        throw Error(ErrorCode::InsufficientSamples, "fewer than two samples in the window");
    }
    mean /= static_cast<double>(count);

    auto deviation = [&](const Sample& s) {
        double worst = 0.0;
        for (Eigen::Index k = 0; k < s.varpi.size(); ++k) {
            const double d = std::abs(s.varpi(k) - mean);
            worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(worst, d);
        }
        return worst;
    };

    SyncVerdict verdict;
    verdict.varpi_sync_est = mean;
    verdict.residual = 0.0;
    for (std::size_t i = first_in_window; i < samples.size(); ++i) {
        verdict.residual = std::max(verdict.residual, deviation(samples[i]));
    }
    verdict.synchronized = verdict.residual < tol;
    if (verdict.synchronized) {
        std::size_t start = samples.size() - 1;
        while (start > 0 && deviation(samples[start - 1]) < tol) --start;
        verdict.t_sync = samples[start].t;
    }
    return verdict;
}

CVector black_start_state(const Setpoints& sp, double scale, std::uint64_t seed) {
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "black-start scale must be positive");
    }
    Rng rng(seed);
    CVector v(sp.v_star.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double angle = kPi - 2.0 * kPi * rng.uniform();  // (-pi, pi]
        v(k) = std::polar(scale * sp.v_star(k), angle);
    }
    return v;
}

CVector steady_state_point(const NetworkModel& net, const Setpoints& sp, const ControlGains& gains,
                           double psi) {
    const SystemMatrix sys = build_system_matrix(net, normalize_setpoints(sp), gains);
    const SpectralReport rep = analyze(sys);
    const SteadyStatePrediction pred = predict_steady_state(rep, sp, gains);
    const double radius = sp.v_star.norm() * pred.amplitude_scale;
    return std::polar(radius, psi) * rep.phi1;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
    SimConfig sim = spec.sim;
    sim.envelope = spec.envelope;
    ScenarioResult result;
    result.trajectory =
        integrate(spec.x0, spec.network, spec.setpoints, spec.gains, spec.events, sim);
    for (std::size_t i = 0; i < result.trajectory.segments.size(); ++i) {
        SegmentReport rep;
        rep.params = result.trajectory.segments[i];
        try {
            rep.certificate = check_condition3(rep.params.network, rep.params.setpoints,
                                               rep.params.gains, spec.envelope);
        } catch (const Error& e) {
            rep.certificate_error = e.what();
        }
        try {
            rep.sync = detect_sync(result.trajectory.segment_samples(static_cast<int>(i)));
        } catch (const Error& e) {
            rep.sync_error = e.what();
        }
        result.segments.push_back(std::move(rep));
    }
    return result;
}

}  // namespace dvoc
