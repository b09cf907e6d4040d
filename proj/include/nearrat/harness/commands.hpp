#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "nearrat/harness/config.hpp"
#include "nearrat/matrix.hpp"

namespace nearrat::harness {

const std::vector<std::string>& subcommands();
std::string usage();

// Runs one subcommand, writing <out>/<subcommand>.csv and .json. Returns 0,
// or 1 when one of its checks fails. ConfigError and SchemaError propagate.
int run_subcommand(const std::string& name, const RunConfig& cfg, std::ostream& log);

// Full command line: flags, environment, subcommand; returns the exit code.
int cli_main(int argc, char** argv, const EnvLookup& env, std::ostream& out, std::ostream& err);

// Nonsingular k x k matrix with integer entries in [-range, range].
Matrix<double> random_integer_basis(std::mt19937_64& rng, int k, int range);
// delta_1(g) delta_k(g*) over `count` random integer bases of size k.
std::vector<double> transference_products(std::uint64_t seed, int k, std::int64_t count, int workers = 1);

}  // namespace nearrat::harness
