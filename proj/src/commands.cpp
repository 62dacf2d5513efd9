#include "dvoc/commands.hpp"

#include "dvoc/config.hpp"
#include "dvoc/error.hpp"
#include "dvoc/lyapunov.hpp"
#include "dvoc/simkit.hpp"

#include <fstream>
#include <functional>
#include <ostream>

namespace dvoc {

namespace {

ScenarioConfig load_with_overrides(const CommandOptions& opts) {
    ScenarioConfig cfg = load_config(opts.config);
    if (opts.delta_bar) cfg.envelope.delta_bar = *opts.delta_bar;
    if (opts.gamma_bar) cfg.envelope.gamma_bar = *opts.gamma_bar;
    return cfg;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int cmd_certify(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_with_overrides(opts);
        const ResolvedScenario sc = resolve(cfg);
        const StabilityCertificate cert =
            check_condition3(sc.network, sc.setpoints, sc.gains, sc.envelope);
        out << certificate_to_json(cert).dump(2) << '\n';
        return cert.condition3 ? 0 : 2;
    });
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_with_overrides(opts);
        const ResolvedScenario sc = resolve(cfg);
        const auto seed = effective_seed(cfg, opts.seed);

        ScenarioSpec spec;
        spec.network = sc.network;
        spec.setpoints = sc.setpoints;
        spec.gains = sc.gains;
        spec.envelope = sc.envelope;
        spec.events = sc.events;
        spec.sim = make_sim_config(cfg, sc, seed);
        spec.x0 = make_initial_state(cfg, sc, seed);
        const ScenarioResult res = run_scenario(spec);

        std::optional<SyncVerdict> verdict;
        if (!res.segments.empty()) verdict = res.segments.back().sync;

        if (opts.out) {
            std::ofstream file(*opts.out);
            if (!file) throw Error(ErrorCode::Io, "cannot open output file '" + *opts.out + "'");
            write_trajectory_csv(file, res.trajectory, verdict);
            if (!file) throw Error(ErrorCode::Io, "failed writing '" + *opts.out + "'");
            out << "wrote " << res.trajectory.samples.size() << " samples to " << *opts.out << '\n';
            for (std::size_t i = 0; i < res.segments.size(); ++i) {
                const auto& s = res.segments[i];
                out << "segment " << i << " [" << s.params.t_start << ", " << s.params.t_end
                    << "]: ";
                if (s.sync) {
                    out << (s.sync->synchronized ? "synchronized" : "not synchronized")
                        << " varpi=" << format_number(s.sync->varpi_sync_est.real()) << ","
                        << format_number(s.sync->varpi_sync_est.imag());
                } else {
                    out << s.sync_error;
                }
                out << '\n';
            }
        } else {
            write_trajectory_csv(out, res.trajectory, verdict);
        }
        return 0;
    });
}

int cmd_steady(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_with_overrides(opts);
        const ResolvedScenario sc = resolve(cfg);
        const SystemMatrix sys =
            build_system_matrix(sc.network, normalize_setpoints(sc.setpoints), sc.gains);
        const SpectralReport report = analyze(sys);
        try {
            out << prediction_to_json(predict_steady_state(report, sc.setpoints, sc.gains)).dump(2)
                << '\n';
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IllPosedAmplitude) {
                err << "error: " << e.what() << '\n';
                return 3;
            }
            if (e.code() == ErrorCode::InconsistentSetpoints) {
                err << "error: " << e.what() << '\n';
                return 2;
            }
            throw;
        }
        return 0;
    });
}

int cmd_lemmas(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_with_overrides(opts);
        const auto seed = effective_seed(cfg, opts.seed);
        if (!seed) throw Error(ErrorCode::ConfigParse, "lemmas needs a seed (sim.seed or --seed)");
        const ResolvedScenario sc = resolve(cfg);

        std::optional<LyapunovContext> ctx;
        try {
            ctx = make_lyapunov_context(sc.network, sc.setpoints, sc.gains, sc.envelope);
        } catch (const Error& e) {
            switch (e.code()) {
                case ErrorCode::ConditionNotCertified:
                case ErrorCode::InconsistentSetpoints:
                case ErrorCode::IllPosedAmplitude:
                    err << "not certified: " << e.what() << '\n';
                    return 2;
                default: throw;
            }
        }

        SampleOptions so;
        so.samples = opts.samples.value_or(kDefaultLemmaSamples);
        so.seed = *seed;
        const SampleTally tally = sample_checks(*ctx, so);
        out << "samples " << tally.samples << '\n'
            << "lemma1 failures " << tally.lemma1_failures << '\n'
            << "lemma2 failures " << tally.lemma2_failures << '\n'
            << "rate failures " << tally.rate_failures << '\n'
            << (tally.all_pass() ? "PASS" : "FAIL") << '\n';
        return tally.all_pass() ? 0 : 2;
    });
}

int cmd_kron(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_with_overrides(opts);
        const FullNetwork full = to_full_network(cfg.network);
        const NetworkModel net = kron_reduce(full);
        out << network_to_json(net, full.converter_buses).dump(2) << '\n';
        return 0;
    });
}

}  // namespace dvoc
