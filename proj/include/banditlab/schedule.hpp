#pragma once
// Step-size (reward) schedules gamma_n and their derived quantities: the
// partial sums Gamma_n = sum gamma_k and Gamma2_n = sum gamma_k^2, the
// curvature eps_n = 1/gamma_{n+1} - 1/gamma_n - pi, and convergence verdicts
// for the handful of series that drive every fallibility/rate condition.
//
// Constant and power-family schedules get exact closed-form verdicts (they
// all reduce to geometric or p-series comparisons); arbitrary schedules fall
// back on a partial-sum ratio heuristic that never returns a wrong
// definitive answer: outside its confidence band it says Inconclusive.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "banditlab/params.hpp"

namespace banditlab {

enum class ScheduleFamily { Constant, Power, Custom };

// gamma_n families:
//   Constant: gamma_n = value, value in (0,1)
//   Power:    gamma_n = (C / (C' + n))^alpha, C > 0, C' > 0, alpha in (0,1]
//   Custom:   gamma_n = fn(n), n >= 1
struct StepSchedule {
    ScheduleFamily family = ScheduleFamily::Constant;

    double value = 0.1;

    double power_c = 1.0;
    double power_cprime = 1.0;
    double alpha = 1.0;

    std::function<double(std::uint64_t)> custom;

    static StepSchedule constant(double gamma);
    static StepSchedule power(double c, double cprime, double alpha);
    static StepSchedule custom_fn(std::function<double(std::uint64_t)> fn);
    // Table read from a file: one gamma per line, 1-based indexing.
    static StepSchedule custom_table(std::vector<double> values);

    std::string describe() const;
};

// Parses the schedule grammar used by configs and the CLI:
//   constant:<gamma> | power:<C>,<C'>,<alpha> | custom:<path>
// Throws std::invalid_argument naming the violated constraint.
StepSchedule parse_schedule_spec(const std::string& text);

// gamma_n per the family formula. Throws std::domain_error when the formula
// leaves (0,1) at this n (e.g. power with C > C'+1 at small n under alpha=1).
double gamma_at(const StepSchedule& s, std::uint64_t n);

struct CumulativeSums {
    double gamma_sum = 0.0;     // Gamma_n
    double gamma_sq_sum = 0.0;  // Gamma2_n
};

// Exact running sums by direct summation; Gamma_0 = Gamma2_0 = 0.
CumulativeSums cumulative(const StepSchedule& s, std::uint64_t n);

// Everything the regime conditions consume at one index.
struct ScheduleDerived {
    std::uint64_t n = 0;
    double gamma = 0.0;      // gamma_n
    double big_gamma = 0.0;  // Gamma_n
    double big_gamma2 = 0.0; // Gamma2_n
    double eps = 0.0;        // 1/gamma_{n+1} - 1/gamma_n - pi
};

ScheduleDerived derived_at(const StepSchedule& s, std::uint64_t n, const BanditParams& p);

// eps_n = 1/gamma_{n+1} - 1/gamma_n - pi. For the alpha=1 power family the
// reciprocals telescope to 1/C exactly, independent of n and C'.
double epsilon_at(const StepSchedule& s, std::uint64_t n, const BanditParams& p);

struct IndexWindow {
    std::uint64_t lo = 1;
    std::uint64_t hi = 1;
};

enum class LiminfVerdict { Holds, Fails, Inconclusive };

// Checks liminf(1/gamma_{n+1} - 1/gamma_n) > -pi. Holds outright for the
// nonincreasing families (constant, power); for custom schedules the infimum
// over the window is compared against -pi with tolerance 1e-12.
LiminfVerdict check_liminf_condition(const StepSchedule& s, const BanditParams& p,
                                     IndexWindow window);

enum class SeriesKind {
    SumGammaSq,              // sum gamma_n^2
    SumGammaSqExpPiGamma,    // sum gamma_n^2 exp(pi Gamma_n)
    SumExpMinusPaGamma,      // sum exp(-pa Gamma_n)
    SumProdOneMinusPbGamma,  // sum prod_{k<=n} (1 - pb gamma_k)
    SumGammaEpsPlus,         // sum gamma_n max(eps_n, 0)
    WeakFallible,            // sum exp(-rho Gamma2_n) prod_{k<=n} (1 - pb gamma_k)
};

enum class Verdict { Converges, Diverges, Inconclusive };
enum class VerdictMethod { ClosedForm, NumericPartialSum };

struct SeriesVerdict {
    Verdict verdict = Verdict::Inconclusive;
    VerdictMethod method = VerdictMethod::NumericPartialSum;
    std::string rule;             // symbolic rule id or heuristic trace
    double q_hat = 0.0;           // fitted local p-series exponent (numeric path)
    double log_partial_sum = 0.0; // log S_N at the last term examined
    std::uint64_t terms_used = 0;
};

struct SeriesOptions {
    std::uint64_t budget = 100000;  // max terms for the numeric path
    double rho = -1.0;              // WeakFallible only; <0 selects pb(1-pb)/4
};

// Convergence verdict for the requested series. Closed form for constant and
// power families, numeric ratio heuristic otherwise. Budget exhaustion yields
// Inconclusive, never a wrong definitive verdict.
SeriesVerdict series_verdict(SeriesKind kind, const StepSchedule& s,
                             const BanditParams& p, const SeriesOptions& opt = {});

// sum_n prod_{k<=n} (1 - coeff * gamma_k) for an arbitrary coefficient in
// (0,1): the tail-product series with pb gives the trap-side criterion, with
// pa the target-side mirror.
SeriesVerdict tail_product_series_verdict(const StepSchedule& s, double coeff,
                                          std::uint64_t budget);

const char* to_string(Verdict v);
const char* to_string(VerdictMethod m);

// Regime thresholds are closed inequalities (C*pb <= 1, pi*C >= 1, ...), and
// derived quantities like pi = pa - pb carry rounding noise, so a value
// within 1e-12 of a threshold is taken to sit exactly on it.
inline double boundary_snap(double v, double threshold) {
    return (v < threshold + 1e-12 && v > threshold - 1e-12) ? threshold : v;
}

}  // namespace banditlab
