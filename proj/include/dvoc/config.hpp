#pragma once

// Scenario configuration file (JSON) and report serialization.

#include "dvoc/certify.hpp"
#include "dvoc/dynamics.hpp"
#include "dvoc/netmodel.hpp"
#include "dvoc/simkit.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dvoc {

using Json = nlohmann::json;

/// Element given either as impedance (r, x) or as admittance (g, b).
struct ElementValue {
    enum class Form { Impedance, Admittance };
    Form form = Form::Impedance;
    double first = 0.0;   // r or g
    double second = 0.0;  // x or b

    Complex admittance() const;
    bool operator==(const ElementValue&) const = default;
};

struct BranchSpec {
    std::size_t from = 0;
    std::size_t to = 0;
    ElementValue value;
    bool operator==(const BranchSpec&) const = default;
};

struct ShuntSpec {
    std::size_t bus = 0;
    ElementValue value;
    bool operator==(const ShuntSpec&) const = default;
};

struct NetworkSpec {
    std::size_t buses = 0;
    std::vector<BranchSpec> branches;
    std::vector<ShuntSpec> shunts;
    std::vector<std::size_t> converter_buses;
    bool operator==(const NetworkSpec&) const = default;
};

struct SetpointSpec {
    std::vector<double> p_star;
    std::vector<double> q_star;
    std::optional<std::vector<double>> v_star;  // absent: "consistent"
    std::optional<ReferenceNode> reference;
    bool operator==(const SetpointSpec&) const;
};

struct EventSpec {
    double time = 0.0;
    std::string kind;  // set_alpha | scale_v_star | set_setpoints | swap_network
    double value = 0.0;  // alpha or factor
    bool scale_powers = true;
    std::vector<double> p_star, q_star, v_star;
    std::optional<NetworkSpec> network;
    bool operator==(const EventSpec&) const = default;
};

struct SimSpec {
    double t_end = 1.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    double sample_dt = 1e-3;
    std::optional<std::uint64_t> seed;
    std::optional<double> max_step;
    bool operator==(const SimSpec&) const = default;
};

struct InitialSpec {
    std::string mode = "black_start";  // black_start | on_T | explicit
    double scale = 1e-3;
    double phase = 0.0;
    std::vector<double> re, im;
    bool operator==(const InitialSpec&) const = default;
};

struct GainSpec {
    double eta = 1.0, alpha = 0.0, omega0 = 0.0, phi = 0.0;
    bool operator==(const GainSpec&) const = default;
};

struct EnvelopeSpec {
    double delta_bar = kPi / 6;
    double gamma_bar = 0.2;
    bool operator==(const EnvelopeSpec&) const = default;
};

struct ScenarioConfig {
    NetworkSpec network;
    GainSpec gains;
    SetpointSpec setpoints;
    EnvelopeSpec envelope;
    std::vector<EventSpec> events;
    std::optional<SimSpec> sim;
    std::optional<InitialSpec> initial;
    bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ConfigParse naming the offending field; unknown keys are rejected.
ScenarioConfig parse_config(const Json& doc);
ScenarioConfig load_config(const std::string& path);
Json to_json(const ScenarioConfig& cfg);

FullNetwork to_full_network(const NetworkSpec& spec);

/// Domain objects built from a configuration.
struct ResolvedScenario {
    FullNetwork full;
    NetworkModel network;
    Setpoints setpoints;
    ControlGains gains;
    OperatingEnvelope envelope;
    std::vector<Event> events;
};

ResolvedScenario resolve(const ScenarioConfig& cfg);

/// Seed from the override, else from sim.seed.
std::optional<std::uint64_t> effective_seed(const ScenarioConfig& cfg,
                                            std::optional<std::uint64_t> seed_override);

SimConfig make_sim_config(const ScenarioConfig& cfg, const ResolvedScenario& sc,
                          std::optional<std::uint64_t> seed);

/// black_start needs a seed and throws ConfigParse without one.
CVector make_initial_state(const ScenarioConfig& cfg, const ResolvedScenario& sc,
                           std::optional<std::uint64_t> seed);

Json complex_to_json(Complex z);
Complex complex_from_json(const Json& j);

Json certificate_to_json(const StabilityCertificate& cert);
StabilityCertificate certificate_from_json(const Json& j);

Json prediction_to_json(const SteadyStatePrediction& pred);
SteadyStatePrediction prediction_from_json(const Json& j);

Json network_to_json(const NetworkModel& net, const std::vector<std::size_t>& converter_buses);

/// Decimal with 17 significant digits ("nan"/"inf" for non-finite values).
std::string format_number(double x);

/// CSV trajectory: t, per node re_v, im_v, mag_v, theta, re_varpi, im_varpi,
/// then dist_S, dist_T, V, and a trailing "# sync=... varpi=re,im" line.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::optional<SyncVerdict>& verdict);

}  // namespace dvoc
