#pragma once

#include <iostream>
#include <string>

#include "twistcalc/config.hpp"
#include "twistcalc/states.hpp"
#include "twistcalc/twist.hpp"

namespace twistcalc {

// Exit codes: 0 every check met its tolerance, 1 a check failed, 2 configuration error or
// invariant violation.
enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfig = 2 };

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240601;

int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

// Builders shared by the commands; each throws ConfigError or a domain error on bad input.
TwistMap twist_from(const Config& c, const MoleculeConfig& m);
BoundState state_from(const Config& c, const MoleculeConfig& m);
GridGeometry internal_grid_from(const Config& c, const MoleculeConfig& m);

}  // namespace twistcalc
