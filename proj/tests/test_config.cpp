#include "doctest.h"

#include "dvoc/config.hpp"
#include "dvoc/error.hpp"
#include "dvoc/random.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace dvoc;

namespace {

const std::string kConfigDir = DVOC_CONFIG_DIR;

Json demo(const std::string& name) {
    std::ifstream in(kConfigDir + "/" + name);
    return Json::parse(in);
}

std::string parse_error(const Json& doc) {
    try {
        parse_config(doc);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigParse);
        return e.what();
    }
    FAIL("config accepted");
    return {};
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

}  // namespace

TEST_CASE("bundled configs parse and round-trip") {
    for (const char* name : {"three_bus_demo.json", "two_node_demo.json"}) {
        const ScenarioConfig a = load_config(kConfigDir + "/" + name);
        const Json j = to_json(a);
        const ScenarioConfig b = parse_config(j);
        CHECK(a == b);
        CHECK(parse_config(Json::parse(j.dump())) == a);
        CHECK(to_json(b) == j);
    }
}

TEST_CASE("unknown keys are rejected with their path") {
    Json doc = demo("two_node_demo.json");
    doc["gains"]["kappa"] = 1.0;
    CHECK(parse_error(doc).find("gains") != std::string::npos);

    doc = demo("two_node_demo.json");
    doc["extra"] = true;
    CHECK(parse_error(doc).find("extra") != std::string::npos);

    doc = demo("two_node_demo.json");
    doc["network"]["branches"][1]["l"] = 0.1;
    CHECK(parse_error(doc).find("network.branches[1]") != std::string::npos);
}

TEST_CASE("array lengths must match the converter count") {
    Json doc = demo("two_node_demo.json");
    doc["setpoints"]["p_star"] = {0.4, 0.3, 0.2};
    CHECK(parse_error(doc).find("setpoints.p_star") != std::string::npos);

    doc = demo("three_bus_demo.json");
    doc["setpoints"]["v_star"] = {1.0, 1.0};
    doc["setpoints"].erase("reference");
    CHECK(parse_error(doc).find("setpoints.v_star") != std::string::npos);
}

TEST_CASE("malformed values name the field") {
    Json doc = demo("two_node_demo.json");
    doc["gains"]["eta"] = "fast";
    CHECK(parse_error(doc).find("gains.eta") != std::string::npos);

    doc = demo("two_node_demo.json");
    doc["initial"] = {{"mode", "warm"}};
    CHECK(parse_error(doc).find("initial.mode") != std::string::npos);

    doc = demo("two_node_demo.json");
    doc["gains"]["eta"] = -1.0;
    const ScenarioConfig cfg = parse_config(doc);
    try {
        resolve(cfg);
        FAIL("negative eta accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("gains.eta") != std::string::npos);
    }

    CHECK_THROWS_AS(load_config(kConfigDir + "/does_not_exist.json"), Error);
}

TEST_CASE("resolve builds consistent setpoints and initial states") {
    const ScenarioConfig cfg = load_config(kConfigDir + "/two_node_demo.json");
    const ResolvedScenario sc = resolve(cfg);
    CHECK(sc.network.size() == 2);
    CHECK(sc.setpoints.v_star(0) == doctest::Approx(1.0).epsilon(1e-15));
    const auto cert = check_condition3(sc.network, sc.setpoints, sc.gains, sc.envelope);
    CHECK(cert.setpoints_consistent);

    const CVector x0 = make_initial_state(cfg, sc, effective_seed(cfg, std::nullopt));
    CHECK(std::abs(x0.norm() - cert.predicted->v_ss.norm()) < 1e-12);

    ScenarioConfig bs = cfg;
    bs.initial = InitialSpec{};
    bs.sim->seed.reset();
    CHECK_THROWS_AS(make_initial_state(bs, sc, std::nullopt), Error);
    const CVector a = make_initial_state(bs, sc, 5u);
    const CVector b = make_initial_state(bs, sc, 5u);
    CHECK((a.array() == b.array()).all());
    CHECK(effective_seed(cfg, 99u) == 99u);
    CHECK(effective_seed(cfg, std::nullopt) == 11u);
}

TEST_CASE("element values convert impedance and admittance") {
    const ElementValue z{ElementValue::Form::Impedance, 0.01, 0.05};
    CHECK(std::abs(z.admittance() - 1.0 / Complex(0.01, 0.05)) < 1e-12);
    const ElementValue y{ElementValue::Form::Admittance, 0.5, -0.1};
    CHECK(y.admittance() == Complex(0.5, -0.1));
}

TEST_CASE("17-digit numbers round-trip") {
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform(-60, 60)));
        CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
    }
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("certificate JSON round-trips losslessly") {
    const ScenarioConfig cfg = load_config(kConfigDir + "/two_node_demo.json");
    const ResolvedScenario sc = resolve(cfg);
    const auto cert = check_condition3(sc.network, sc.setpoints, sc.gains, sc.envelope);
    const Json j = certificate_to_json(cert);
    const auto back = certificate_from_json(Json::parse(j.dump()));
    CHECK((back.spectral.eigenvalues.array() == cert.spectral.eigenvalues.array()).all());
    CHECK((back.spectral.phi1.array() == cert.spectral.phi1.array()).all());
    CHECK(back.spectral.lambda1 == cert.spectral.lambda1);
    CHECK(back.spectral.gap == cert.spectral.gap);
    CHECK(back.lambda2_connectivity == cert.lambda2_connectivity);
    CHECK(back.lambda2_second_largest == cert.lambda2_second_largest);
    CHECK(back.lhs_sync == cert.lhs_sync);
    CHECK(back.rhs == cert.rhs);
    CHECK(back.condition1 == cert.condition1);
    CHECK(back.condition3 == cert.condition3);
    CHECK(back.margin_c == cert.margin_c);
    CHECK(back.alpha1 == cert.alpha1);
    CHECK(back.delta_actual == cert.delta_actual);
    CHECK(back.gamma_actual == cert.gamma_actual);
    REQUIRE(back.predicted.has_value());
    CHECK((back.predicted->v_ss.array() == cert.predicted->v_ss.array()).all());
    CHECK(back.predicted->amplitude_scale == cert.predicted->amplitude_scale);
    CHECK(certificate_to_json(back) == j);

    const auto pred = prediction_from_json(prediction_to_json(*cert.predicted));
    CHECK(pred.omega_sync == cert.predicted->omega_sync);
    CHECK(pred.varpi_sync == cert.predicted->varpi_sync);
}

TEST_CASE("trajectory CSV layout and lossless numbers") {
    Trajectory traj;
    for (int i = 0; i < 3; ++i) {
        Sample s;
        s.t = 0.1 * i;
        s.v = CVector(2);
        s.v << Complex(1.0 / 3.0, -2.0 / 7.0 * i), Complex(std::sqrt(2.0), 1e-17);
        s.varpi = CVector::Constant(2, Complex(0.1, 314.15926535897931));
        s.theta = RVector::Constant(2, 0.5 + i);
        s.dist_S = 1e-3 / 3.0;
        if (i > 0) s.V = 2.0 / 3.0;
        traj.samples.push_back(s);
    }
    SyncVerdict verdict{true, Complex(0.1, 314.0), 0.1, 0.0};
    std::ostringstream out;
    write_trajectory_csv(out, traj, verdict);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    const auto header = split(line, ',');
    REQUIRE(header.size() == 1 + 6 * 2 + 3);
    CHECK(header[0] == "t");
    CHECK(header[1] == "re_v_1");
    CHECK(header[6] == "im_varpi_1");
    CHECK(header[7] == "re_v_2");
    CHECK(header[13] == "dist_S");
    CHECK(header[15] == "V");
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) {
            CHECK(line == "# sync=true varpi=0.10000000000000001,314");
            continue;
        }
        const auto cells = split(line, ',');
        REQUIRE(cells.size() == header.size());
        const Sample& s = traj.samples[static_cast<std::size_t>(rows)];
        CHECK(std::strtod(cells[0].c_str(), nullptr) == s.t);
        CHECK(std::strtod(cells[1].c_str(), nullptr) == s.v(0).real());
        CHECK(std::strtod(cells[2].c_str(), nullptr) == s.v(0).imag());
        CHECK(std::strtod(cells[3].c_str(), nullptr) == std::abs(s.v(0)));
        CHECK(std::strtod(cells[8].c_str(), nullptr) == s.v(1).imag());
        CHECK(std::strtod(cells[13].c_str(), nullptr) == s.dist_S);
        CHECK(cells[14] == "nan");
        CHECK(cells[15] == (s.V ? format_number(*s.V) : "nan"));
        ++rows;
    }
    CHECK(rows == 3);
}
