#pragma once

#include <iosfwd>
#include <string>

#include "rtlab/config.hpp"

namespace rtlab {

enum class Subcommand { Simulate, Transform, Laws, Verify, Scaling };

Subcommand parse_subcommand(const std::string& name);
std::string subcommand_name(Subcommand s);

// Exit status of a run.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitTolerance = 2;

struct RunOptions {
    std::string out_dir;          // empty: use the config's output field
    bool timestamp = true;        // write the generation time into the report header
};

// Runs one subcommand, writing report.txt and CSV files into the output
// directory. Errors propagate as exceptions; the caller maps them to kExitError.
int run(Subcommand cmd, const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

}  // namespace rtlab
