#pragma once
// Per-trajectory diagnostics: the companion processes theta_n, Y_n, Z_n,
// finite-horizon outcome labels, rate-exponent fitting, exact tail-product
// verification, and branch-enumeration martingale checks.
//
// theta_n = prod_{k<=n} (1 - gamma_k pi X_{k-1}) is kept in log domain
// (it underflows long before 1e6 steps on constant schedules);
// Y_n = (1-X_n)/theta_n is the companion non-negative martingale whose death
// marks the fast-rate branch, Z_n = (1-X_n)/gamma_n the submartingale that
// appears once the schedule curvature eps_n turns nonnegative.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "banditlab/dynamics.hpp"
#include "banditlab/regimes.hpp"

namespace banditlab {

struct CompanionPoint {
    std::uint64_t n = 0;
    double log_theta = 0.0;
    double y = 0.0;  // (1-X_n)/theta_n, 0 once absorbed at 1
    double z = 0.0;  // (1-X_n)/gamma_n, NaN on the n = 0 row
};

struct CompanionSeries {
    std::vector<CompanionPoint> points;  // aligned with the recording plan
};

// Reads the companion processes off the trajectory's checkpoints. Requires a
// plan that stored at least 8 intermediate states and params matching the
// ones the trajectory was simulated under.
CompanionSeries companion_processes(const Trajectory& traj, const BanditParams& p);

struct OutcomeThresholds {
    double delta0 = 1e-3;  // x_N below this => ToZero
    double delta1 = 1e-3;  // d_N below this => ToOne
};

enum class Outcome { ToZero, ToOne, Undecided };

const char* to_string(Outcome o);

struct OutcomeLabel {
    Outcome label = Outcome::Undecided;
    double final_x = 0.0;
    double final_d = 0.0;
    OutcomeThresholds thresholds;
};

// Finite-horizon proxy for the limit events; thresholds must lie in (0, 0.1).
OutcomeLabel classify_outcome(const Trajectory& traj, OutcomeThresholds t = {});

enum class FitTarget { DistanceToOne, DistanceToZero };
using FitDomain = ScaleDomain;

struct ExponentFit {
    double beta_hat = 0.0;
    double stderr_ = 0.0;
    FitDomain domain = FitDomain::LogN;
    std::uint64_t window_lo = 0;
    std::uint64_t window_hi = 0;
    std::size_t n_points = 0;
};

struct DistanceNotPositive : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares slope of log(distance) against -log n (LogN) or -Gamma_n
// (GammaDomain) over the window's checkpoints; beta_hat > 0 for decaying
// sequences. Requires >= 8 checkpoints spanning a decade in n (LogN) or 2.0
// in Gamma. Throws DistanceNotPositive when an in-window checkpoint has
// already been absorbed.
ExponentFit fit_exponent(const Trajectory& traj, FitTarget target, FitDomain domain,
                         IndexWindow window);

enum class TailSide { ZeroSide, OneSide };

struct TailMatch {
    std::uint64_t n0 = 0;        // last opposing-branch step (0 if none)
    double max_rel_dev = 0.0;    // worst relative deviation at a checkpoint
    std::size_t points_checked = 0;
};

struct NoTailFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trap-side runs end on a pure penalty tail: X_n = X_{n0} prod (1 - 1_B
// gamma_k) after the last reward step n0 (and symmetrically for the target
// side with rewards). Recomputes that product from the full branch log, in
// log domain, and reports the worst relative deviation at checkpoints past
// n0; checkpoints whose distance is subnormal or zero are skipped (the
// multiplicative update saturates there). Throws NoTailFound when the
// opposing branch persists into the final 8 steps (whole path minus one on
// very short horizons) or the run was absorbed at the opposite boundary.
TailMatch verify_tail_product(const Trajectory& traj, const BanditParams& p, TailSide side);

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;
    std::string location;
};

struct DiagnosticsReport {
    std::vector<CheckResult> checks;
    double qv_ratio = 1.0;  // realized quadratic variation / summed cond. variances

    bool all_pass() const;
    std::string to_json() const;
};

// Enumerates the three branch outcomes at each grid state by driving
// lri_step through every (u, v) region: conditional mean of dM is 0, drift
// is gamma pi x (1-x), conditional variance matches the closed form
// x(1-x)(pa(1-x) + pb x - pi^2 x(1-x)) and sits inside
// [pb x(1-x), pa x(1-x)]. Tolerance 1e-12.
DiagnosticsReport martingale_diagnostics(const BanditParams& p, const std::vector<double>& x_grid,
                                         double gamma);

// Same enumeration at the trajectory's checkpoint states, plus dual-track
// consistency |x + d - 1| and the realized/conditional quadratic-variation
// ratio.
DiagnosticsReport martingale_diagnostics(const Trajectory& traj, const BanditParams& p);

enum class RateMode { Fast, Slow, Undecided };

const char* to_string(RateMode m);

// Assigns a fitted exponent to a rate branch: against the slow/fast midpoint
// under coexistence (Undecided within one stderr of the midpoint), against
// the single predicted exponent within 3 stderr otherwise.
RateMode detect_rate_mode(const ExponentFit& fit, const RegimeReport& regime);

}  // namespace banditlab
