#pragma once

// Event-driven simulation of the dVOC network, synchronization detection and
// scripted scenarios.

#include "dvoc/certify.hpp"
#include "dvoc/dynamics.hpp"
#include "dvoc/integrator.hpp"
#include "dvoc/netmodel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dvoc {

struct SetAlpha {
    double alpha = 0.0;
};

/// Scales v* by `factor`; with `scale_powers` p* and q* are scaled by factor^2,
/// which leaves the normalized power setpoints unchanged.
struct ScaleVStar {
    double factor = 1.0;
    bool scale_powers = true;
};

struct SetSetpoints {
    Setpoints setpoints;
};

struct SwapNetwork {
    NetworkModel network;
};

using EventAction = std::variant<SetAlpha, ScaleVStar, SetSetpoints, SwapNetwork>;

struct Event {
    double time = 0.0;
    EventAction action;
};

struct SimConfig {
    double t_end = 1.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    std::optional<double> max_step;  // default 0.2 / |omega0|
    double sample_dt = 1e-3;
    std::uint64_t seed = 0;
    std::optional<double> fixed_step;
    OperatingEnvelope envelope;  // used to decide whether V is recorded

    void validate() const;
};

/// Parameters in force over one segment between events.
struct SegmentParams {
    double t_start = 0.0;
    double t_end = 0.0;
    NetworkModel network;
    Setpoints setpoints;
    ControlGains gains;
};

struct Sample {
    double t = 0.0;
    int segment = 0;
    CVector v;
    CVector varpi;  // NaN entries where v_k == 0
    RVector theta;  // unwrapped phase angles
    double dist_S = std::numeric_limits<double>::quiet_NaN();
    double dist_T = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> V;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<SegmentParams> segments;
    IntegrationStats stats;

    /// Samples belonging to one segment (contiguous).
    std::span<const Sample> segment_samples(int segment) const;
};

struct SyncVerdict {
    bool synchronized = false;
    Complex varpi_sync_est;
    double t_sync = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::infinity();
};

inline constexpr double kDefaultSyncWindow = 0.05;
inline constexpr double kDefaultSyncTol = 1e-6;

Trajectory integrate(const CVector& x0, const NetworkModel& net, const Setpoints& sp,
                     const ControlGains& gains, const std::vector<Event>& events,
                     const SimConfig& cfg);

/// Runs independent initial states; the parallel kernel returns trajectories
/// identical to the serial reference.
std::vector<Trajectory> integrate_batch(const std::vector<CVector>& x0s, const NetworkModel& net,
                                        const Setpoints& sp, const ControlGains& gains,
                                        const std::vector<Event>& events, const SimConfig& cfg,
                                        Execution exec = Execution::Parallel);

SyncVerdict detect_sync(std::span<const Sample> samples, double window = kDefaultSyncWindow,
                        double tol = kDefaultSyncTol);

/// v0_k = scale v*_k e^{j theta_k}, theta_k uniform in (-pi, pi].
CVector black_start_state(const Setpoints& sp, double scale, std::uint64_t seed);

/// Point r e^{j psi} phi1 on the steady-state circle of the given system.
CVector steady_state_point(const NetworkModel& net, const Setpoints& sp, const ControlGains& gains,
                           double psi);

struct ScenarioSpec {
    NetworkModel network;
    Setpoints setpoints;
    ControlGains gains;
    OperatingEnvelope envelope;
    std::vector<Event> events;
    SimConfig sim;
    CVector x0;
};

struct SegmentReport {
    SegmentParams params;
    std::optional<StabilityCertificate> certificate;
    std::string certificate_error;
    std::optional<SyncVerdict> sync;
    std::string sync_error;
};

struct ScenarioResult {
    Trajectory trajectory;
    std::vector<SegmentReport> segments;
};

ScenarioResult run_scenario(const ScenarioSpec& spec);

}  // namespace dvoc
