#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "partmatch/clique_matcher.h"
#include "partmatch/part_model.h"
#include "partmatch/viewpoint_search.h"

namespace partmatch::cli {

// Everything a command can be steered by, after flag parsing.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 42;
  int jobs = 1;
  MatchConfig match;
  ConsistencyConfig consistency;
  ViewpointEnergyConfig energy;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Parses argv (argv[0] is the program name) and runs one command.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace partmatch::cli
