#pragma once
// Replicated-experiment harness: R seeded trajectories across a worker pool,
// outcome counts with Wilson intervals, exponent distributions per outcome
// class, bimodality detection, and the attached regime prediction.
//
// Determinism contract: each replicate is a pure function of (config,
// master_seed, replicate index); workers fill a preallocated per-replicate
// table and aggregation always walks it in replicate order, so summaries are
// bit-identical for any worker count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/analysis.hpp"
#include "banditlab/dynamics.hpp"
#include "banditlab/params.hpp"
#include "banditlab/regimes.hpp"
#include "banditlab/schedule.hpp"

namespace banditlab {

struct FitSettings {
    std::uint64_t window_divisor = 10;  // fit window = [N/divisor, N]
    std::optional<FitDomain> domain;    // default: LogN for power alpha=1, Gamma otherwise
};

struct ExperimentConfig {
    BanditParams params;
    StepSchedule schedule;
    double x0 = 0.5;
    std::uint64_t horizon = 1000;
    std::uint64_t replicates = 1;
    std::uint64_t master_seed = 1;
    OutcomeThresholds thresholds;
    FitSettings fit;
    unsigned workers = 1;
    std::size_t checkpoints = 512;
    bool verify_tails = false;      // record branch logs and check tail products
    std::uint64_t series_budget = 100000;

    void validate() const;  // R >= 1, N >= 100, x0 in (0,1), schedule well formed
};

struct ZeroTrials : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ProbabilityEstimate {
    double p_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Wilson score interval at 95% (z = 1.959964).
ProbabilityEstimate estimate_probability(std::uint64_t successes, std::uint64_t trials);

struct InsufficientSamples : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::uint64_t count = 0;
};

struct BimodalityReport {
    bool bimodal = false;
    double mean_low = 0.0;
    double mean_high = 0.0;
    double frac_low = 0.0;
    double frac_high = 0.0;
    double pooled_sd = 0.0;
    double separation = 0.0;
    // deviations of the cluster means from the expected (slow, fast) pair
    std::optional<double> dev_low;
    std::optional<double> dev_high;
};

struct ExponentHistogram {
    std::vector<HistogramBin> bins;
    BimodalityReport bimodality;
    std::size_t samples = 0;
};

// Histogram plus a two-cluster split of the samples. Bimodal when the
// cluster-mean separation exceeds 3x the pooled within-cluster standard
// deviation and each cluster holds at least 5% of the samples; a pragmatic
// detector, not a statistical test. Requires >= 20 samples.
ExponentHistogram exponent_histogram(const std::vector<double>& samples,
                                     std::optional<std::pair<double, double>> expected = {});

struct ReplicateRecord {
    std::uint64_t replicate = 0;
    Outcome outcome = Outcome::Undecided;
    double final_x = 0.0;
    double final_d = 0.0;
    std::optional<double> beta_hat;
    std::optional<double> beta_stderr;
    RateMode mode = RateMode::Undecided;
    std::optional<double> tail_dev;       // when tail verification ran
    std::optional<double> tail_sum_frac;  // last-decade share of sum d_n
    std::string failure;                  // nonempty if a per-replicate step failed
};

struct CheckpointStat {
    std::uint64_t n = 0;
    double mean_x = 0.0;
    double se_x = 0.0;
    double mean_recursion_x = 0.0;
};

struct ExperimentSummary {
    std::uint64_t to_zero = 0;
    std::uint64_t to_one = 0;
    std::uint64_t undecided = 0;
    ProbabilityEstimate p_zero;
    ProbabilityEstimate p_one;
    std::vector<double> exponents_to_one;
    std::vector<double> exponents_to_zero;
    std::optional<ExponentHistogram> histogram_to_one;
    std::optional<RegimeReport> regime;
    std::vector<CheckpointStat> checkpoint_stats;
    std::vector<ReplicateRecord> replicates;
    std::uint64_t failures = 0;

    // volatile facts, never serialized (summary files must be byte-identical
    // across worker counts and reruns)
    double wall_seconds = 0.0;
    unsigned workers_used = 1;

    // deterministic serializations
    std::string to_json(const ExperimentConfig& config) const;
    std::string replicates_csv() const;
};

ExperimentSummary run_experiment(const ExperimentConfig& config);

}  // namespace banditlab
