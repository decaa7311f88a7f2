#pragma once
// The linear reward-inaction recursion simulated exactly, together with its
// drift + martingale decomposition
//   X_{n+1} = X_n + gamma_{n+1} pi X_n (1-X_n) + gamma_{n+1} dM_{n+1},
// the deterministic mean recursion x' = x + gamma pi x (1-x), and the
// logistic solution of the mean ODE xdot = pi x (1-x).
//
// State carries x and the complement d = 1-x as independent tracks with
// per-branch multiplicative updates; this preserves relative precision next
// to both absorbing boundaries, which rate fitting needs down to d ~ 1e-15.

#include <cstdint>
#include <vector>

#include "banditlab/params.hpp"
#include "banditlab/schedule.hpp"

namespace banditlab {

enum class Branch : std::uint8_t { NoChange = 0, RewardA = 1, PenaltyB = 2 };

const char* to_string(Branch b);

struct StatePair {
    double x = 0.0;
    double d = 1.0;
};

struct StepOutcome {
    Branch branch = Branch::NoChange;
    double delta_m = 0.0;
    StatePair next;
};

// One step of the recursion given the two uniform draws of the step: u picks
// the evaluated arm (A iff u <= x), v thresholds that arm's success
// probability (pa on the A side, pb on the B side). x = 0 and d = 0 are
// absorbing. Total on valid inputs (u, v in [0,1), gamma in (0,1)).
StepOutcome lri_step(StatePair s, double gamma, double u, double v, const BanditParams& p);

struct RecordingPlan {
    std::size_t checkpoints = 512;  // minimum number of recorded states
    bool record_branches = false;   // keep the full branch log
};

struct Checkpoint {
    std::uint64_t n = 0;
    double gamma = 0.0;  // step size used at step n (0 on the initial row)
    double x = 0.0;
    double d = 1.0;
    Branch branch = Branch::NoChange;
    double delta_m = 0.0;
    double big_gamma = 0.0;     // Gamma_n
    double log_theta = 0.0;     // log prod_{k<=n} (1 - gamma_k pi X_{k-1})
    double sum_d = 0.0;         // sum_{k<=n} d_k (error series partial sum)
    double sum_dm2 = 0.0;       // realized quadratic variation of M
    double sum_cond_var = 0.0;  // summed conditional variances of dM
};

struct Trajectory {
    BanditParams params;
    StepSchedule schedule;
    double x0 = 0.5;
    std::uint64_t horizon = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::vector<Checkpoint> checkpoints;
    std::vector<Branch> branches;  // full log iff plan.record_branches
    StatePair final_state;

    const Checkpoint& last() const { return checkpoints.back(); }
};

// Log-uniformly spaced indices {0, ..., horizon} with at least min_points+1
// entries whenever the horizon allows (all indices for small horizons).
std::vector<std::uint64_t> checkpoint_grid(std::uint64_t horizon, std::size_t min_points);

// Runs the recursion for `horizon` steps with draws from the counter-based
// stream keyed by (master_seed, replicate). Deterministic: identical
// arguments reproduce the trajectory bit for bit.
Trajectory simulate(const BanditParams& p, const StepSchedule& s, double x0,
                    std::uint64_t horizon, std::uint64_t master_seed,
                    std::uint64_t replicate = 0, const RecordingPlan& plan = {});

// Deterministic mean recursion x_{n+1} = x_n + gamma_{n+1} pi x_n (1-x_n);
// returns x_0 .. x_N. Stays in [0,1] since gamma*pi < 1.
std::vector<double> mean_recursion(const BanditParams& p, const StepSchedule& s, double x0,
                                   std::uint64_t horizon);

// Logistic solution of xdot = pi x (1-x): x(t) = x0 / (x0 + (1-x0) e^{-pi t}).
double ode_solution(double pi, double x0, double t);

}  // namespace banditlab
