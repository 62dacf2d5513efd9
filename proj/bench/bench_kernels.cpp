#include "dvoc/certify.hpp"
#include "dvoc/lyapunov.hpp"
#include "dvoc/netmodel.hpp"
#include "dvoc/simkit.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace dvoc;

namespace {

struct Fixture {
    NetworkModel net;
    Setpoints sp;
    ControlGains gains;
    LyapunovContext ctx;
};

// Six converters on a ring with one chord.
const Fixture& fixture() {
    static const Fixture f = [] {
        FullNetwork full;
        full.n_total = 6;
        for (BusId k = 0; k < 6; ++k) {
            full.branches.push_back({k, (k + 1) % 6, 1.0 / Complex(0.01 + 0.002 * k, 0.05)});
            full.converter_buses.push_back(k);
        }
        full.branches.push_back({0, 3, 1.0 / Complex(0.02, 0.08)});
        Fixture out;
        out.net = kron_reduce(full);
        out.gains = {2.0, 0.0, 2 * kPi * 50, 1.37};
        const RVector p = RVector::Constant(6, 0.3), q = RVector::Constant(6, 0.2);
        out.sp = make_consistent(out.net, p, q, out.gains, {0, 1.0});
        const auto c1 = check_condition1(out.net, out.sp, out.gains, {});
        out.gains.alpha = 0.5 * (c1.rhs - c1.lhs_sync);
        out.ctx = make_lyapunov_context(out.net, out.sp, out.gains, {});
        return out;
    }();
    return f;
}

void BM_SampleChecks(benchmark::State& state, Execution exec) {
    const auto& f = fixture();
    const SampleOptions opts{static_cast<std::size_t>(state.range(0)), 1};
    for (auto _ : state) benchmark::DoNotOptimize(sample_checks(f.ctx, opts, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_IntegrateBatch(benchmark::State& state, Execution exec) {
    const auto& f = fixture();
    std::vector<CVector> x0s;
    for (int i = 0; i < state.range(0); ++i) x0s.push_back(black_start_state(f.sp, 1e-2, static_cast<std::uint64_t>(i)));
    SimConfig cfg;
    cfg.t_end = 0.2;
    cfg.sample_dt = 0.01;
    for (auto _ : state) benchmark::DoNotOptimize(integrate_batch(x0s, f.net, f.sp, f.gains, {}, cfg, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_SampleChecks, serial, Execution::Serial)->Arg(10000);
BENCHMARK_CAPTURE(BM_SampleChecks, parallel, Execution::Parallel)->Arg(10000);
BENCHMARK_CAPTURE(BM_IntegrateBatch, serial, Execution::Serial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_IntegrateBatch, parallel, Execution::Parallel)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
