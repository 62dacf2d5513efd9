#include "dvoc/config.hpp"

#include "dvoc/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

namespace dvoc {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigParse, msg); }

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& ctx) {
    if (!obj.is_object()) fail(ctx + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (auto a : allowed) known = known || it.key() == a;
        if (!known) fail("unknown key '" + ctx + "." + it.key() + "'");
    }
}

const Json& req(const Json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) fail("missing key '" + ctx + "." + key + "'");
    return *it;
}

double as_number(const Json& j, const std::string& path) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) fail(path + " must be a number");
    return j.get<double>();
}

double finite_number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path + " must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(path + " must be finite");
    return x;
}

std::size_t as_index(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::size_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::size_t>();
    fail(path + " must be a non-negative integer");
}

bool as_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path + " must be a boolean");
    return j.get<bool>();
}

std::vector<double> as_numbers(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(finite_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::size_t> as_indices(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path + " must be an array of indices");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_index(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

ElementValue parse_element(const Json& j, const std::string& ctx) {
    ElementValue e;
    const bool z = j.contains("r") || j.contains("x");
    const bool y = j.contains("g") || j.contains("b");
    if (z == y) fail(ctx + " needs either (r, x) or (g, b)");
    if (z) {
        e.form = ElementValue::Form::Impedance;
        e.first = finite_number(req(j, "r", ctx), ctx + ".r");
        e.second = finite_number(req(j, "x", ctx), ctx + ".x");
        if (e.first == 0.0 && e.second == 0.0) fail(ctx + " has zero impedance");
    } else {
        e.form = ElementValue::Form::Admittance;
        e.first = finite_number(req(j, "g", ctx), ctx + ".g");
        e.second = finite_number(req(j, "b", ctx), ctx + ".b");
    }
    return e;
}

void put_element(Json& j, const ElementValue& e) {
    if (e.form == ElementValue::Form::Impedance) {
        j["r"] = e.first;
        j["x"] = e.second;
    } else {
        j["g"] = e.first;
        j["b"] = e.second;
    }
}

NetworkSpec parse_network(const Json& j, const std::string& ctx) {
    check_keys(j, {"buses", "branches", "shunts", "converter_buses"}, ctx);
    NetworkSpec n;
    n.buses = as_index(req(j, "buses", ctx), ctx + ".buses");
    if (n.buses == 0) fail(ctx + ".buses must be positive");
    const Json& branches = req(j, "branches", ctx);
    if (!branches.is_array()) fail(ctx + ".branches must be an array");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string bctx = ctx + ".branches[" + std::to_string(i) + "]";
        check_keys(branches[i], {"from", "to", "r", "x", "g", "b"}, bctx);
        BranchSpec b;
        b.from = as_index(req(branches[i], "from", bctx), bctx + ".from");
        b.to = as_index(req(branches[i], "to", bctx), bctx + ".to");
        if (b.from >= n.buses || b.to >= n.buses) fail(bctx + " references a missing bus");
        if (b.from == b.to) fail(bctx + " connects a bus to itself");
        b.value = parse_element(branches[i], bctx);
        n.branches.push_back(b);
    }
    if (auto it = j.find("shunts"); it != j.end()) {
        if (!it->is_array()) fail(ctx + ".shunts must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string sctx = ctx + ".shunts[" + std::to_string(i) + "]";
            check_keys((*it)[i], {"bus", "r", "x", "g", "b"}, sctx);
            ShuntSpec s;
            s.bus = as_index(req((*it)[i], "bus", sctx), sctx + ".bus");
            if (s.bus >= n.buses) fail(sctx + " references a missing bus");
            s.value = parse_element((*it)[i], sctx);
            n.shunts.push_back(s);
        }
    }
    n.converter_buses = as_indices(req(j, "converter_buses", ctx), ctx + ".converter_buses");
    if (n.converter_buses.empty()) fail(ctx + ".converter_buses must not be empty");
    std::vector<bool> seen(n.buses, false);
    for (std::size_t b : n.converter_buses) {
        if (b >= n.buses) fail(ctx + ".converter_buses references a missing bus");
        if (seen[b]) fail(ctx + ".converter_buses contains a duplicate");
        seen[b] = true;
    }
    return n;
}

Json network_json(const NetworkSpec& n) {
    Json j;
    j["buses"] = n.buses;
    j["branches"] = Json::array();
    for (const auto& b : n.branches) {
        Json e{{"from", b.from}, {"to", b.to}};
        put_element(e, b.value);
        j["branches"].push_back(e);
    }
    j["shunts"] = Json::array();
    for (const auto& s : n.shunts) {
        Json e{{"bus", s.bus}};
        put_element(e, s.value);
        j["shunts"].push_back(e);
    }
    j["converter_buses"] = n.converter_buses;
    return j;
}

void check_length(const std::vector<double>& v, std::size_t n, const std::string& path) {
    if (v.size() != n) {
        fail(path + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
    }
}

EventSpec parse_event(const Json& j, const std::string& ctx, std::size_t n) {
    if (!j.is_object()) fail(ctx + " must be an object");
    EventSpec e;
    if (!req(j, "type", ctx).is_string()) fail(ctx + ".type must be a string");
    e.kind = j["type"].get<std::string>();
    if (e.kind == "set_alpha") {
        check_keys(j, {"time", "type", "alpha"}, ctx);
        e.value = finite_number(req(j, "alpha", ctx), ctx + ".alpha");
    } else if (e.kind == "scale_v_star") {
        check_keys(j, {"time", "type", "factor", "scale_powers"}, ctx);
        e.value = finite_number(req(j, "factor", ctx), ctx + ".factor");
        if (!(e.value > 0.0)) fail(ctx + ".factor must be positive");
        if (j.contains("scale_powers")) e.scale_powers = as_bool(j["scale_powers"], ctx + ".scale_powers");
    } else if (e.kind == "set_setpoints") {
        check_keys(j, {"time", "type", "p_star", "q_star", "v_star"}, ctx);
        e.p_star = as_numbers(req(j, "p_star", ctx), ctx + ".p_star");
        e.q_star = as_numbers(req(j, "q_star", ctx), ctx + ".q_star");
        e.v_star = as_numbers(req(j, "v_star", ctx), ctx + ".v_star");
        check_length(e.p_star, n, ctx + ".p_star");
        check_length(e.q_star, n, ctx + ".q_star");
        check_length(e.v_star, n, ctx + ".v_star");
    } else if (e.kind == "swap_network") {
        check_keys(j, {"time", "type", "network"}, ctx);
        e.network = parse_network(req(j, "network", ctx), ctx + ".network");
        if (e.network->converter_buses.size() != n) {
            fail(ctx + ".network must keep the number of converter buses");
        }
    } else {
        fail(ctx + ".type '" + e.kind + "' is not a known event");
    }
    e.time = finite_number(req(j, "time", ctx), ctx + ".time");
    if (e.time < 0.0) fail(ctx + ".time must be non-negative");
    return e;
}

Json event_json(const EventSpec& e) {
    Json j{{"time", e.time}, {"type", e.kind}};
    if (e.kind == "set_alpha") {
        j["alpha"] = e.value;
    } else if (e.kind == "scale_v_star") {
        j["factor"] = e.value;
        j["scale_powers"] = e.scale_powers;
    } else if (e.kind == "set_setpoints") {
        j["p_star"] = e.p_star;
        j["q_star"] = e.q_star;
        j["v_star"] = e.v_star;
    } else if (e.kind == "swap_network" && e.network) {
        j["network"] = network_json(*e.network);
    }
    return j;
}

RVector to_rvector(const std::vector<double>& v) {
    return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json rvector_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json cvector_json(const CVector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(complex_to_json(v(i)));
    return j;
}

CVector cvector_from(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path + " must be an array");
    CVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
    return v;
}

RVector rvector_from(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path + " must be an array");
    RVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], path);
    }
    return v;
}

}  // namespace

Complex ElementValue::admittance() const {
    if (form == Form::Admittance) return {first, second};
    return 1.0 / Complex(first, second);
}

bool SetpointSpec::operator==(const SetpointSpec& o) const {
    auto same_ref = [](const std::optional<ReferenceNode>& a, const std::optional<ReferenceNode>& b) {
        if (a.has_value() != b.has_value()) return false;
        return !a || (a->node == b->node && a->v_ref == b->v_ref);
    };
    return p_star == o.p_star && q_star == o.q_star && v_star == o.v_star &&
           same_ref(reference, o.reference);
}

ScenarioConfig parse_config(const Json& doc) {
    check_keys(doc, {"network", "gains", "setpoints", "envelope", "events", "sim", "initial"},
               "config");
    ScenarioConfig cfg;
    cfg.network = parse_network(req(doc, "network", "config"), "network");
    const std::size_t n = cfg.network.converter_buses.size();

    const Json& g = req(doc, "gains", "config");
    check_keys(g, {"eta", "alpha", "omega0", "phi"}, "gains");
    cfg.gains.eta = finite_number(req(g, "eta", "gains"), "gains.eta");
    cfg.gains.alpha = finite_number(req(g, "alpha", "gains"), "gains.alpha");
    cfg.gains.omega0 = finite_number(req(g, "omega0", "gains"), "gains.omega0");
    cfg.gains.phi = finite_number(req(g, "phi", "gains"), "gains.phi");

    const Json& s = req(doc, "setpoints", "config");
    check_keys(s, {"p_star", "q_star", "v_star", "reference"}, "setpoints");
    cfg.setpoints.p_star = as_numbers(req(s, "p_star", "setpoints"), "setpoints.p_star");
    cfg.setpoints.q_star = as_numbers(req(s, "q_star", "setpoints"), "setpoints.q_star");
    check_length(cfg.setpoints.p_star, n, "setpoints.p_star");
    check_length(cfg.setpoints.q_star, n, "setpoints.q_star");
    const Json& vs = req(s, "v_star", "setpoints");
    if (vs.is_string()) {
        if (vs.get<std::string>() != "consistent") {
            fail("setpoints.v_star must be an array or \"consistent\"");
        }
        const Json& r = req(s, "reference", "setpoints");
        check_keys(r, {"node", "v_ref"}, "setpoints.reference");
        ReferenceNode ref;
        ref.node = as_index(req(r, "node", "setpoints.reference"), "setpoints.reference.node");
        ref.v_ref = finite_number(req(r, "v_ref", "setpoints.reference"), "setpoints.reference.v_ref");
        if (ref.node >= n) fail("setpoints.reference.node is out of range");
        if (!(ref.v_ref > 0.0)) fail("setpoints.reference.v_ref must be positive");
        cfg.setpoints.reference = ref;
    } else {
        if (s.contains("reference")) fail("setpoints.reference is only valid with \"consistent\"");
        cfg.setpoints.v_star = as_numbers(vs, "setpoints.v_star");
        check_length(*cfg.setpoints.v_star, n, "setpoints.v_star");
    }

    if (auto it = doc.find("envelope"); it != doc.end()) {
        check_keys(*it, {"delta_bar", "gamma_bar"}, "envelope");
        if (it->contains("delta_bar")) {
            cfg.envelope.delta_bar = finite_number((*it)["delta_bar"], "envelope.delta_bar");
        }
        if (it->contains("gamma_bar")) {
            cfg.envelope.gamma_bar = finite_number((*it)["gamma_bar"], "envelope.gamma_bar");
        }
    }

    if (auto it = doc.find("events"); it != doc.end()) {
        if (!it->is_array()) fail("events must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            cfg.events.push_back(parse_event((*it)[i], "events[" + std::to_string(i) + "]", n));
        }
    }

    if (auto it = doc.find("sim"); it != doc.end()) {
        check_keys(*it, {"t_end", "rtol", "atol", "sample_dt", "seed", "max_step"}, "sim");
        SimSpec sim;
        if (it->contains("t_end")) sim.t_end = finite_number((*it)["t_end"], "sim.t_end");
        if (it->contains("rtol")) sim.rtol = finite_number((*it)["rtol"], "sim.rtol");
        if (it->contains("atol")) sim.atol = finite_number((*it)["atol"], "sim.atol");
        if (it->contains("sample_dt")) sim.sample_dt = finite_number((*it)["sample_dt"], "sim.sample_dt");
        if (it->contains("max_step")) sim.max_step = finite_number((*it)["max_step"], "sim.max_step");
        if (it->contains("seed")) {
            const Json& sd = (*it)["seed"];
            if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<long long>() >= 0)) {
                fail("sim.seed must be a non-negative integer");
            }
            sim.seed = sd.get<std::uint64_t>();
        }
        cfg.sim = sim;
    }

    if (auto it = doc.find("initial"); it != doc.end()) {
        if (!it->is_object()) fail("initial must be an object");
        InitialSpec init;
        if (!req(*it, "mode", "initial").is_string()) fail("initial.mode must be a string");
        init.mode = (*it)["mode"].get<std::string>();
        if (init.mode == "black_start") {
            check_keys(*it, {"mode", "scale"}, "initial");
            if (it->contains("scale")) init.scale = finite_number((*it)["scale"], "initial.scale");
            if (!(init.scale > 0.0)) fail("initial.scale must be positive");
        } else if (init.mode == "on_T") {
            check_keys(*it, {"mode", "phase"}, "initial");
            if (it->contains("phase")) init.phase = finite_number((*it)["phase"], "initial.phase");
        } else if (init.mode == "explicit") {
            check_keys(*it, {"mode", "re", "im"}, "initial");
            init.re = as_numbers(req(*it, "re", "initial"), "initial.re");
            init.im = as_numbers(req(*it, "im", "initial"), "initial.im");
            check_length(init.re, n, "initial.re");
            check_length(init.im, n, "initial.im");
        } else {
            fail("initial.mode '" + init.mode + "' must be black_start, on_T or explicit");
        }
        cfg.initial = init;
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(std::string("invalid JSON in '") + path + "': " + e.what());
    }
    return parse_config(doc);
}

Json to_json(const ScenarioConfig& cfg) {
    Json j;
    j["network"] = network_json(cfg.network);
    j["gains"] = {{"eta", cfg.gains.eta},
                  {"alpha", cfg.gains.alpha},
                  {"omega0", cfg.gains.omega0},
                  {"phi", cfg.gains.phi}};
    Json s{{"p_star", cfg.setpoints.p_star}, {"q_star", cfg.setpoints.q_star}};
    if (cfg.setpoints.v_star) {
        s["v_star"] = *cfg.setpoints.v_star;
    } else {
        s["v_star"] = "consistent";
        if (cfg.setpoints.reference) {
            s["reference"] = {{"node", cfg.setpoints.reference->node},
                              {"v_ref", cfg.setpoints.reference->v_ref}};
        }
    }
    j["setpoints"] = s;
    j["envelope"] = {{"delta_bar", cfg.envelope.delta_bar}, {"gamma_bar", cfg.envelope.gamma_bar}};
    j["events"] = Json::array();
    for (const auto& e : cfg.events) j["events"].push_back(event_json(e));
    if (cfg.sim) {
        Json sim{{"t_end", cfg.sim->t_end},
                 {"rtol", cfg.sim->rtol},
                 {"atol", cfg.sim->atol},
                 {"sample_dt", cfg.sim->sample_dt}};
        if (cfg.sim->seed) sim["seed"] = *cfg.sim->seed;
        if (cfg.sim->max_step) sim["max_step"] = *cfg.sim->max_step;
        j["sim"] = sim;
    }
    if (cfg.initial) {
        Json init{{"mode", cfg.initial->mode}};
        if (cfg.initial->mode == "black_start") init["scale"] = cfg.initial->scale;
        if (cfg.initial->mode == "on_T") init["phase"] = cfg.initial->phase;
        if (cfg.initial->mode == "explicit") {
            init["re"] = cfg.initial->re;
            init["im"] = cfg.initial->im;
        }
        j["initial"] = init;
    }
    return j;
}

FullNetwork to_full_network(const NetworkSpec& spec) {
    FullNetwork full;
    full.n_total = spec.buses;
    for (const auto& b : spec.branches) full.branches.push_back({b.from, b.to, b.value.admittance()});
    for (const auto& s : spec.shunts) full.shunts.push_back({s.bus, s.value.admittance()});
    full.converter_buses = spec.converter_buses;
    std::vector<bool> conv(spec.buses, false);
    for (auto b : spec.converter_buses) conv[b] = true;
    for (std::size_t b = 0; b < spec.buses; ++b) {
        if (!conv[b]) full.load_buses.push_back(b);
    }
    return full;
}

ResolvedScenario resolve(const ScenarioConfig& cfg) {
    ResolvedScenario sc;
    sc.full = to_full_network(cfg.network);
    sc.network = kron_reduce(sc.full);
    sc.gains = ControlGains{cfg.gains.eta, cfg.gains.alpha, cfg.gains.omega0, cfg.gains.phi};
    sc.gains.validate();
    sc.envelope = OperatingEnvelope{cfg.envelope.delta_bar, cfg.envelope.gamma_bar};
    sc.envelope.validate();

    const RVector p = to_rvector(cfg.setpoints.p_star);
    const RVector q = to_rvector(cfg.setpoints.q_star);
    if (cfg.setpoints.v_star) {
        sc.setpoints = Setpoints{p, q, to_rvector(*cfg.setpoints.v_star)};
    } else {
        sc.setpoints = make_consistent(sc.network, p, q, sc.gains, *cfg.setpoints.reference);
    }
    sc.setpoints.validate();

    for (const auto& e : cfg.events) {
        Event ev;
        ev.time = e.time;
        if (e.kind == "set_alpha") {
            ev.action = SetAlpha{e.value};
        } else if (e.kind == "scale_v_star") {
            ev.action = ScaleVStar{e.value, e.scale_powers};
        } else if (e.kind == "set_setpoints") {
            Setpoints s{to_rvector(e.p_star), to_rvector(e.q_star), to_rvector(e.v_star)};
            s.validate();
            ev.action = SetSetpoints{std::move(s)};
        } else {
            ev.action = SwapNetwork{kron_reduce(to_full_network(*e.network), false)};
        }
        sc.events.push_back(std::move(ev));
    }
    return sc;
}

std::optional<std::uint64_t> effective_seed(const ScenarioConfig& cfg,
                                            std::optional<std::uint64_t> seed_override) {
    if (seed_override) return seed_override;
    if (cfg.sim && cfg.sim->seed) return cfg.sim->seed;
    return std::nullopt;
}

SimConfig make_sim_config(const ScenarioConfig& cfg, const ResolvedScenario& sc,
                          std::optional<std::uint64_t> seed) {
    SimConfig sim;
    const SimSpec spec = cfg.sim.value_or(SimSpec{});
    sim.t_end = spec.t_end;
    sim.rtol = spec.rtol;
    sim.atol = spec.atol;
    sim.sample_dt = spec.sample_dt;
    sim.max_step = spec.max_step;
    sim.seed = seed.value_or(0);
    sim.envelope = sc.envelope;
    sim.validate();
    return sim;
}

CVector make_initial_state(const ScenarioConfig& cfg, const ResolvedScenario& sc,
                           std::optional<std::uint64_t> seed) {
    const InitialSpec init = cfg.initial.value_or(InitialSpec{});
    if (init.mode == "explicit") {
        CVector v(static_cast<Eigen::Index>(init.re.size()));
        for (std::size_t k = 0; k < init.re.size(); ++k) {
            v(static_cast<Eigen::Index>(k)) = Complex(init.re[k], init.im[k]);
        }
        return v;
    }
    if (init.mode == "on_T") {
        return steady_state_point(sc.network, sc.setpoints, sc.gains, init.phase);
    }
    if (!seed) fail("black_start initial state needs a seed (sim.seed or --seed)");
    return black_start_state(sc.setpoints, init.scale, *seed);
}

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) fail("complex value must be [re, im]");
    return {as_number(j[0], "re"), as_number(j[1], "im")};
}

Json prediction_to_json(const SteadyStatePrediction& pred) {
    return {{"omega_sync", pred.omega_sync},
            {"amplitude_scale", pred.amplitude_scale},
            {"v_ss", rvector_json(pred.v_ss)},
            {"varpi_sync", complex_to_json(pred.varpi_sync)}};
}

SteadyStatePrediction prediction_from_json(const Json& j) {
    SteadyStatePrediction p;
    p.omega_sync = as_number(req(j, "omega_sync", "predicted"), "predicted.omega_sync");
    p.amplitude_scale = as_number(req(j, "amplitude_scale", "predicted"), "predicted.amplitude_scale");
    p.v_ss = rvector_from(req(j, "v_ss", "predicted"), "predicted.v_ss");
    p.varpi_sync = complex_from_json(req(j, "varpi_sync", "predicted"));
    return p;
}

Json certificate_to_json(const StabilityCertificate& c) {
    Json j;
    j["eigenvalues"] = cvector_json(c.spectral.eigenvalues);
    Json vecs = Json::array();
    for (Eigen::Index i = 0; i < c.spectral.eigenvectors.cols(); ++i) {
        vecs.push_back(cvector_json(c.spectral.eigenvectors.col(i)));
    }
    j["eigenvectors"] = vecs;
    j["lambda1"] = complex_to_json(c.spectral.lambda1);
    j["gap"] = c.spectral.gap;
    j["multiplicity_ok"] = c.spectral.multiplicity_ok;
    j["phi1"] = cvector_json(c.spectral.phi1);
    j["lambda2_connectivity"] = c.lambda2_connectivity;
    j["lambda2_second_largest"] = c.lambda2_second_largest;
    j["lhs_sync"] = c.lhs_sync;
    j["rhs"] = c.rhs;
    j["condition1"] = c.condition1;
    j["condition3"] = c.condition3;
    j["margin_c"] = c.margin_c;
    j["alpha1"] = c.alpha1 ? Json(*c.alpha1) : Json(nullptr);
    j["shifted_norm"] = c.shifted_norm;
    j["delta_actual"] = c.delta_actual;
    j["gamma_actual"] = c.gamma_actual;
    j["envelope_ok"] = c.envelope_ok;
    j["setpoints_consistent"] = c.setpoints_consistent;
    j["predicted"] = c.predicted ? prediction_to_json(*c.predicted) : Json(nullptr);
    j["prediction_error"] = c.prediction_error;
    return j;
}

StabilityCertificate certificate_from_json(const Json& j) {
    const std::string ctx = "certificate";
    StabilityCertificate c;
    c.spectral.eigenvalues = cvector_from(req(j, "eigenvalues", ctx), "eigenvalues");
    const Json& vecs = req(j, "eigenvectors", ctx);
    const auto n = c.spectral.eigenvalues.size();
    c.spectral.eigenvectors.resize(n, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        CVector col = cvector_from(vecs[i], "eigenvectors");
        if (col.size() != n) fail("eigenvector length mismatch");
        c.spectral.eigenvectors.col(static_cast<Eigen::Index>(i)) = col;
    }
    c.spectral.lambda1 = complex_from_json(req(j, "lambda1", ctx));
    c.spectral.gap = as_number(req(j, "gap", ctx), "gap");
    c.spectral.multiplicity_ok = as_bool(req(j, "multiplicity_ok", ctx), "multiplicity_ok");
    c.spectral.phi1 = cvector_from(req(j, "phi1", ctx), "phi1");
    c.lambda2_connectivity = as_number(req(j, "lambda2_connectivity", ctx), "lambda2_connectivity");
    c.lambda2_second_largest =
        as_number(req(j, "lambda2_second_largest", ctx), "lambda2_second_largest");
    c.lhs_sync = as_number(req(j, "lhs_sync", ctx), "lhs_sync");
    c.rhs = as_number(req(j, "rhs", ctx), "rhs");
    c.condition1 = as_bool(req(j, "condition1", ctx), "condition1");
    c.condition3 = as_bool(req(j, "condition3", ctx), "condition3");
    c.margin_c = as_number(req(j, "margin_c", ctx), "margin_c");
    if (const Json& a = req(j, "alpha1", ctx); !a.is_null()) c.alpha1 = as_number(a, "alpha1");
    c.shifted_norm = as_number(req(j, "shifted_norm", ctx), "shifted_norm");
    c.delta_actual = as_number(req(j, "delta_actual", ctx), "delta_actual");
    c.gamma_actual = as_number(req(j, "gamma_actual", ctx), "gamma_actual");
    c.envelope_ok = as_bool(req(j, "envelope_ok", ctx), "envelope_ok");
    c.setpoints_consistent = as_bool(req(j, "setpoints_consistent", ctx), "setpoints_consistent");
    if (const Json& p = req(j, "predicted", ctx); !p.is_null()) c.predicted = prediction_from_json(p);
    const Json& pe = req(j, "prediction_error", ctx);
    if (!pe.is_string()) fail("prediction_error must be a string");
    c.prediction_error = pe.get<std::string>();
    return c;
}

Json network_to_json(const NetworkModel& net, const std::vector<std::size_t>& converter_buses) {
    Json j;
    j["size"] = net.size();
    j["converter_buses"] = converter_buses;
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < net.Y.rows(); ++r) rows.push_back(cvector_json(net.Y.row(r).transpose()));
    j["Y"] = rows;
    j["shunts"] = cvector_json(net.shunts);
    return j;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::optional<SyncVerdict>& verdict) {
    const std::size_t n = traj.samples.empty() ? 0 : static_cast<std::size_t>(traj.samples[0].v.size());
    out << "t";
    for (std::size_t k = 1; k <= n; ++k) {
        const std::string s = std::to_string(k);
        out << ",re_v_" << s << ",im_v_" << s << ",mag_v_" << s << ",theta_" << s << ",re_varpi_"
            << s << ",im_varpi_" << s;
    }
    out << ",dist_S,dist_T,V\n";
    for (const auto& smp : traj.samples) {
        out << format_number(smp.t);
        for (Eigen::Index k = 0; k < smp.v.size(); ++k) {
            out << ',' << format_number(smp.v(k).real()) << ',' << format_number(smp.v(k).imag())
                << ',' << format_number(std::abs(smp.v(k))) << ',' << format_number(smp.theta(k))
                << ',' << format_number(smp.varpi(k).real()) << ','
                << format_number(smp.varpi(k).imag());
        }
        out << ',' << format_number(smp.dist_S) << ',' << format_number(smp.dist_T) << ','
            << format_number(smp.V.value_or(std::numeric_limits<double>::quiet_NaN())) << '\n';
    }
    const bool sync = verdict && verdict->synchronized;
    const Complex w = verdict ? verdict->varpi_sync_est
                              : Complex(std::numeric_limits<double>::quiet_NaN(),
                                        std::numeric_limits<double>::quiet_NaN());
    out << "# sync=" << (sync ? "true" : "false") << " varpi=" << format_number(w.real()) << ','
        << format_number(w.imag()) << '\n';
}

}  // namespace dvoc
