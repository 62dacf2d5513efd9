#include "dvoc/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"dVOC network certification and simulation"};
    app.require_subcommand(1);

    dvoc::CommandOptions opts;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double delta_bar = 0.0, gamma_bar = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "scenario JSON file")->required();
        sub->add_option("--delta-bar", delta_bar, "phase envelope override (rad)");
        sub->add_option("--gamma-bar", gamma_bar, "amplitude envelope override");
        sub->add_option("--seed", seed, "random seed");
    };

    auto* certify = app.add_subcommand("certify", "print the stability certificate");
    auto* simulate = app.add_subcommand("simulate", "integrate the scenario and write CSV");
    auto* steady = app.add_subcommand("steady", "predict the synchronous steady state");
    auto* lemmas = app.add_subcommand("lemmas", "sampled check of the Lyapunov inequalities");
    auto* kron = app.add_subcommand("kron", "print the Kron-reduced network");
    for (auto* sub : {certify, simulate, steady, lemmas, kron}) add_common(sub);
    simulate->add_option("--out", opts.out, "output CSV path");
    lemmas->add_option("--samples", samples, "number of sampled states");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--delta-bar")) opts.delta_bar = delta_bar;
        if (sub->count("--gamma-bar")) opts.gamma_bar = gamma_bar;
    }
    if (lemmas->parsed() && lemmas->count("--samples")) opts.samples = samples;

    if (certify->parsed()) return dvoc::cmd_certify(opts, std::cout, std::cerr);
    if (simulate->parsed()) return dvoc::cmd_simulate(opts, std::cout, std::cerr);
    if (steady->parsed()) return dvoc::cmd_steady(opts, std::cout, std::cerr);
    if (lemmas->parsed()) return dvoc::cmd_lemmas(opts, std::cout, std::cerr);
    return dvoc::cmd_kron(opts, std::cout, std::cerr);
}
