#pragma once

// Subcommands of the dvoc tool. Each returns the process exit code:
// 0 ok/certified, 1 usage or parse error, 2 condition failed, 3 ill-posed.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace dvoc {

struct CommandOptions {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> delta_bar;
    std::optional<double> gamma_bar;
};

inline constexpr std::size_t kDefaultLemmaSamples = 1000;

int cmd_certify(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_steady(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_lemmas(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_kron(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace dvoc
