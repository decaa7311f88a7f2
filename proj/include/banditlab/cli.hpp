#pragma once
// Command-line front end: classify | simulate | experiment | diagnose.
// Configuration comes from flags, an optional flat `key = value` file
// (# comments), or both; flags override file values. The BANDITLAB_SEED
// environment variable is the seed fallback when neither provides one.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "banditlab/montecarlo.hpp"

namespace banditlab::cli {

struct CliConfig {
    std::string command;  // classify | simulate | experiment | diagnose
    double pa = 0.0;
    double pb = 0.0;
    std::string schedule_spec;
    double x0 = 0.5;
    std::uint64_t horizon = 10000;
    std::uint64_t replicates = 1000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out;
    bool json = false;
    double delta0 = 1e-3;
    double delta1 = 1e-3;
    std::uint64_t budget = 100000;
    std::size_t checkpoints = 512;
    bool tail_check = false;

    BanditParams params() const { return BanditParams(pa, pb); }
    StepSchedule schedule() const { return parse_schedule_spec(schedule_spec); }
};

// Applies `key = value` lines onto cfg. Unknown keys and malformed lines
// raise std::invalid_argument citing the line number; value errors cite the
// violated precondition.
void apply_config_file(CliConfig& cfg, const std::string& content);

// File-content route: defaults + config file, fully validated.
CliConfig parse_config(const std::string& file_content);

// Validates cross-field preconditions by constructing the domain objects.
void validate_config(const CliConfig& cfg);

// Exit status: 0 success, 1 validation error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace banditlab::cli
