#include "doctest.h"

#include "dvoc/error.hpp"
#include "dvoc/random.hpp"
#include "dvoc/simkit.hpp"
#include "support/random_systems.hpp"

#include <string>

using namespace dvoc;

namespace {

NetworkModel two_bus(Complex y) {
    CMatrix m(2, 2);
    m << y, -y, -y, y;
    return {m, CVector::Zero(2)};
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("single node closed form") {
    const NetworkModel net{CMatrix::Zero(1, 1), CVector::Zero(1)};
    const Setpoints sp{RVector::Constant(1, 0.6), RVector::Constant(1, -0.2), RVector::Constant(1, 1.0)};
    const ControlGains g{1.5, 0.0, 2 * kPi * 50, 1.1};
    SimConfig cfg;
    cfg.t_end = 1.0;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    cfg.sample_dt = 0.01;
    CVector x0(1);
    x0 << Complex(0.2, -0.1);
    const auto traj = integrate(x0, net, sp, g, {}, cfg);
    const Complex rate = Complex(0, g.omega0) + g.eta * std::polar(1.0, g.phi) * Complex(0.6, 0.2);
    for (const auto& s : traj.samples) {
        const Complex exact = x0(0) * std::exp(rate * s.t);
        CHECK(std::abs(s.v(0) - exact) < 10.0 * cfg.rtol * std::abs(exact));
        CHECK(std::abs(s.varpi(0) - rate) < 1e-12 * std::abs(rate));
    }
    CHECK(traj.samples.back().t == 1.0);
}

TEST_CASE("pure rotation keeps magnitudes") {
    Rng rng(5);
    const auto full = gen::random_network(rng, 3, 1);
    const auto net = kron_reduce(full);
    const Setpoints sp{RVector::Constant(3, 0.5), RVector::Constant(3, 0.1), RVector::Ones(3)};
    const ControlGains g{1e-300, 0.0, 2 * kPi * 50, 1.0};
    SimConfig cfg;
    cfg.t_end = 1.0;
    CVector x0(3);
    x0 << 1.0, Complex(0.0, 0.5), Complex(-0.3, 0.3);
    const auto traj = integrate(x0, net, sp, g, {}, cfg);
    for (const auto& s : traj.samples)
        for (Eigen::Index k = 0; k < 3; ++k) CHECK(std::abs(std::abs(s.v(k)) / std::abs(x0(k)) - 1.0) < 1e-9);
}

TEST_CASE("state on the steady-state circle stays there") {
    for (int trial = 0; trial < 3; ++trial) {
        const auto s = gen::certified_system(2000 + trial);
        const CVector x0 = steady_state_point(s.net, s.sp, s.gains, 0.3);
        SimConfig cfg;
        cfg.t_end = 1.0;
        cfg.rtol = 1e-11;
        cfg.atol = 1e-14;
        const auto traj = integrate(x0, s.net, s.sp, s.gains, {}, cfg);
        const RVector vss = s.cert.predicted->v_ss;
        double worst = 0.0;
        for (const auto& smp : traj.samples) {
            const RVector mag = smp.v.cwiseAbs();
            worst = std::max(worst, ((mag - vss).array() / vss.array()).abs().maxCoeff());
            CHECK(smp.dist_T < 1e-9 * vss.norm());
        }
        CHECK(worst < 1e-6);
        const double rate = (traj.samples.back().theta(0) - traj.samples.front().theta(0)) / cfg.t_end;
        CHECK(std::abs(rate - s.cert.spectral.lambda1.imag()) < 1e-6);

        const auto verdict = detect_sync(traj.segment_samples(0));
        CHECK(verdict.synchronized);
        CHECK(std::abs(verdict.varpi_sync_est - Complex(0, s.cert.spectral.lambda1.imag())) < 1e-6);
    }
}

TEST_CASE("linear run converges to the dominant mode and grows at Re(lambda1)") {
    const auto s = gen::sync_system(17, 0.5, 0.05);
    const auto& rep = s.cert.spectral;
    Rng rng(18);
    CVector x0(static_cast<Eigen::Index>(s.net.size()));
    for (Eigen::Index k = 0; k < x0.size(); ++k) {
        const auto [a, b] = rng.normal_pair();
        x0(k) = Complex(a, b);
    }
    SimConfig cfg;
    cfg.t_end = 20.0 / rep.gap;
    cfg.sample_dt = cfg.t_end / 400;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-30;
    const auto traj = integrate(x0, s.net, s.sp, s.gains, {}, cfg);
    const auto& last = traj.samples.back();
    for (Eigen::Index k = 0; k < last.varpi.size(); ++k) CHECK(std::abs(last.varpi(k) - rep.lambda1) < 1e-4 * rep.gap);

    std::vector<double> t, lnv;
    for (const auto& smp : traj.samples) {
        if (smp.t < 0.5 * cfg.t_end) continue;
        t.push_back(smp.t);
        lnv.push_back(std::log(smp.v.norm()));
    }
    CHECK(std::abs(ls_slope(t, lnv) - rep.lambda1.real()) < 0.01 * std::abs(rep.lambda1.real()));
    CHECK_FALSE(last.V.has_value());
}

TEST_CASE("decoupled subnetworks do not synchronize") {
    CMatrix y = CMatrix::Zero(4, 4);
    const Complex ya(1.0, -5.0), yb(0.5, -2.0);
    y.block(0, 0, 2, 2) = two_bus(ya).Y;
    y.block(2, 2, 2, 2) = two_bus(yb).Y;
    const NetworkModel net{y, CVector::Zero(4)};
    Setpoints sp{RVector(4), RVector(4), RVector::Ones(4)};
    sp.p_star << 0.2, 0.2, 0.6, 0.6;
    sp.q_star << 0.1, 0.1, 0.4, 0.4;
    const ControlGains g{2.0, 0.0, 10.0, 1.2};
    CVector x0(4);
    x0 << 1.0, Complex(0.2, 0.9), Complex(-0.4, 0.1), Complex(0.3, -0.8);
    SimConfig cfg;
    cfg.t_end = 5.0;
    cfg.sample_dt = 0.01;
    const auto traj = integrate(x0, net, sp, g, {}, cfg);
    const auto verdict = detect_sync(traj.segment_samples(0), 0.5);
    CHECK_FALSE(verdict.synchronized);
    CHECK(std::isnan(verdict.t_sync));
}

TEST_CASE("events split segments and samples land on event times") {
    const auto s = gen::certified_system(2100);
    SimConfig cfg;
    cfg.t_end = 0.3;
    cfg.sample_dt = 0.007;
    ControlGains g = s.gains;
    const double alpha = g.alpha;
    g.alpha = 0.0;
    Setpoints next = s.sp;
    next.v_star *= 1.1;
    const std::vector<Event> events{{0.1, SetAlpha{alpha}},
                                    {0.2, ScaleVStar{1.05, true}},
                                    {0.25, SetSetpoints{next}}};
    const CVector x0 = black_start_state(s.sp, 1e-3, 3);
    const auto traj = integrate(x0, s.net, s.sp, g, events, cfg);
    REQUIRE(traj.segments.size() == 4);
    CHECK(traj.segments[0].gains.alpha == 0.0);
    CHECK(traj.segments[1].gains.alpha == alpha);
    CHECK((traj.segments[2].setpoints.v_star - 1.05 * s.sp.v_star).norm() < 1e-15);
    CHECK((traj.segments[2].setpoints.p_star - 1.05 * 1.05 * s.sp.p_star).norm() < 1e-15);
    CHECK((traj.segments[3].setpoints.v_star - next.v_star).norm() == 0.0);
    CHECK(traj.segments[1].t_start == 0.1);
    CHECK(traj.segments[3].t_end == 0.3);

    for (const double te : {0.1, 0.2, 0.25, 0.3}) {
        bool found = false;
        for (const auto& smp : traj.samples) found |= smp.t == te;
        CHECK(found);
    }
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        CHECK(traj.samples[i].t > traj.samples[i - 1].t);
        CHECK(traj.samples[i].segment >= traj.samples[i - 1].segment);
    }
    CHECK_FALSE(traj.segment_samples(0).back().V.has_value());
    CHECK(traj.segment_samples(1).back().V.has_value());
    CHECK(std::isnan(traj.segment_samples(0).back().dist_T));

    const std::vector<Event> unordered{{0.2, SetAlpha{1.0}}, {0.1, SetAlpha{1.0}}};
    CHECK(code_of([&] { integrate(x0, s.net, s.sp, g, unordered, cfg); }) == ErrorCode::InvalidArgument);
    const std::vector<Event> late{{0.5, SetAlpha{1.0}}};
    CHECK(code_of([&] { integrate(x0, s.net, s.sp, g, late, cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sample cadence larger than the horizon gives two rows") {
    const auto s = gen::certified_system(2200);
    SimConfig cfg;
    cfg.t_end = 0.05;
    cfg.sample_dt = 1.0;
    const auto traj = integrate(black_start_state(s.sp, 1e-3, 1), s.net, s.sp, s.gains, {}, cfg);
    REQUIRE(traj.samples.size() == 2);
    CHECK(traj.samples[0].t == 0.0);
    CHECK(traj.samples[1].t == 0.05);
}

TEST_CASE("certified trajectory converges and V never increases") {
    const auto s = gen::certified_system(2300);
    const double ga = s.gains.eta * s.gains.alpha;
    const double rate = std::min(s.gains.eta * s.cert.margin_c, 2.0 * (ga + s.cert.spectral.lambda1.real()));
    SimConfig cfg;
    cfg.t_end = 30.0 / rate;
    cfg.sample_dt = cfg.t_end / 500;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-14;
    const auto traj = integrate(black_start_state(s.sp, 1e-2, 4), s.net, s.sp, s.gains, {}, cfg);
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        REQUIRE(traj.samples[i].V.has_value());
        CHECK(*traj.samples[i].V <= *traj.samples[i - 1].V + 1e-9 * std::max(1.0, *traj.samples[i - 1].V));
    }
    CHECK(traj.samples.back().dist_T < 1e-6 * s.cert.predicted->v_ss.norm());
}

TEST_CASE("parallel batch equals serial batch") {
    const auto s = gen::certified_system(2400);
    std::vector<CVector> x0s;
    for (std::uint64_t seed = 0; seed < 6; ++seed) x0s.push_back(black_start_state(s.sp, 1e-3 * (seed + 1), seed));
    SimConfig cfg;
    cfg.t_end = 0.1;
    cfg.sample_dt = 0.01;
    const auto par = integrate_batch(x0s, s.net, s.sp, s.gains, {}, cfg, Execution::Parallel);
    const auto ser = integrate_batch(x0s, s.net, s.sp, s.gains, {}, cfg, Execution::Serial);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        REQUIRE(par[i].samples.size() == ser[i].samples.size());
        for (std::size_t j = 0; j < par[i].samples.size(); ++j) {
            CHECK((par[i].samples[j].v.array() == ser[i].samples[j].v.array()).all());
            CHECK(*par[i].samples[j].V == *ser[i].samples[j].V);
        }
        CHECK(par[i].stats.accepted == ser[i].stats.accepted);
    }
}

TEST_CASE("black start: magnitudes, determinism and generic initial states") {
    const auto s = gen::certified_system(2500);
    const CVector a = black_start_state(s.sp, 1e-3, 42);
    const CVector b = black_start_state(s.sp, 1e-3, 42);
    CHECK((a.array() == b.array()).all());
    for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(std::abs(a(k)) == doctest::Approx(1e-3 * s.sp.v_star(k)).epsilon(1e-14));
    CHECK((black_start_state(s.sp, 1e-3, 43) - a).norm() > 0.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        CHECK(std::abs((s.cert.spectral.phi1.transpose() * black_start_state(s.sp, 1e-3, seed)).value()) > 1e-12);
    CHECK_THROWS_AS(black_start_state(s.sp, 0.0, 1), Error);
}

TEST_CASE("detect_sync needs enough samples") {
    std::vector<Sample> one(1);
    one[0].varpi = CVector::Zero(2);
    CHECK(code_of([&] { detect_sync(one); }) == ErrorCode::InsufficientSamples);
    std::vector<Sample> short_span(3);
    for (int i = 0; i < 3; ++i) {
        short_span[i].t = 0.001 * i;
        short_span[i].varpi = CVector::Zero(2);
    }
    CHECK(code_of([&] { detect_sync(short_span); }) == ErrorCode::InsufficientSamples);
    CHECK(detect_sync(short_span, 0.002).synchronized);
}

TEST_CASE("scenario with a disconnecting swap keeps running") {
    const auto s = gen::certified_system(2600, 2 * kPi * 50, 3, 3);
    CMatrix y = CMatrix::Zero(3, 3);
    y.block(0, 0, 2, 2) = two_bus({1.0, -5.0}).Y;
    ScenarioSpec spec;
    spec.network = s.net;
    spec.setpoints = s.sp;
    spec.gains = s.gains;
    spec.events = {{0.1, SwapNetwork{NetworkModel{y, CVector::Zero(3)}}}};
    spec.sim.t_end = 0.2;
    spec.sim.sample_dt = 1e-3;
    spec.x0 = steady_state_point(s.net, s.sp, s.gains, 0.0);
    const auto res = run_scenario(spec);
    REQUIRE(res.segments.size() == 2);
    CHECK(res.segments[0].certificate.has_value());
    CHECK(res.segments[0].sync->synchronized);
    CHECK_FALSE(res.segments[1].certificate.has_value());
    CHECK(res.segments[1].certificate_error.find("DisconnectedGraph") != std::string::npos);
    CHECK(res.trajectory.samples.back().t == 0.2);
}
