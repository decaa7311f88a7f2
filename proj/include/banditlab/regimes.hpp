#pragma once
// The fallibility / rate taxonomy as a schedule classifier: closed-form for
// the parametric family gamma_n = (C/(C'+n))^alpha, condition-by-condition
// for arbitrary schedules via the series verdicts of the schedule module.
//
// Vocabulary: "fallible" = converges to the trap 0 with positive probability
// from interior starts. Rates to the target 1 are "slow" e^{-pi Gamma_n}
// (the rate of the deterministic mean recursion) or "fast" e^{-pa Gamma_n}
// (equivalently, a summable error series); for alpha = 1 these read
// n^{-C pi} and n^{-C pa}, and the trap-side rate reads n^{-C pb}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/params.hpp"
#include "banditlab/schedule.hpp"

namespace banditlab {

enum class Fallibility { Fallible, Infallible, Unknown };
enum class RateKind { Slow, Fast };
enum class Occurrence { AlmostSure, PositiveProbability };
enum class ScaleDomain { LogN, GammaDomain };  // n^-beta vs exp(-beta*Gamma_n)

const char* to_string(Fallibility f);
const char* to_string(RateKind k);
const char* to_string(Occurrence o);
const char* to_string(ScaleDomain d);

struct RateDescriptor {
    RateKind kind = RateKind::Slow;
    Occurrence occurrence = Occurrence::AlmostSure;
    ScaleDomain domain = ScaleDomain::LogN;
    double exponent = 0.0;

    std::string text() const;  // "n^-0.40" or "exp(-0.40*Gamma_n)"
};

struct Evidence {
    std::string condition;
    std::string verdict;
    std::string method;
    std::string detail;
};

Evidence to_evidence(const std::string& condition, const SeriesVerdict& sv);

struct RegimeReport {
    Fallibility fallibility = Fallibility::Unknown;
    std::optional<RateDescriptor> rate_to_zero;  // absent when not applicable
    std::vector<RateDescriptor> rates_to_one;
    bool coexistence = false;
    std::vector<Evidence> evidence;

    std::string summary_line() const;
    std::string to_json() const;  // stable field set, schema_version tagged
};

// The closed-form decision table for gamma_n = (C/(C'+n))^alpha. C' does not
// affect the asymptotics, so it is not a parameter here.
RegimeReport classify_power_family(double alpha, double c, const BanditParams& p);

struct FallibilityCheck {
    Fallibility verdict = Fallibility::Unknown;
    std::vector<Evidence> evidence;
};

// Decision tree: when sum gamma^2 converges the tail-product series verdict
// is an exact equivalence; otherwise the weak exponentially-discounted
// product series gives a sufficient condition and failing that the answer is
// genuinely unknown. The liminf prerequisite is checked and flagged first.
FallibilityCheck check_fallibility(const StepSchedule& s, const BanditParams& p,
                                   std::uint64_t budget);

enum class TriVerdict { Yes, No, Unknown };

const char* to_string(TriVerdict v);

struct ConditionCheck {
    TriVerdict verdict = TriVerdict::Unknown;
    std::vector<Evidence> evidence;
};

// Can the fast rate occur with positive probability? With sum gamma^2 < inf
// the criterion is sum exp(-pa Gamma_n) < inf (exact); otherwise the
// pa-coefficient tail product series gives a sufficient condition.
ConditionCheck check_fast_rate_possible(const StepSchedule& s, const BanditParams& p,
                                        std::uint64_t budget);

// Does the fast rate hold almost surely on runs converging to 1? Criterion:
// sum gamma_n * max(eps_n, 0) < inf.
ConditionCheck check_fast_rate_almost_sure(const StepSchedule& s, const BanditParams& p,
                                           std::uint64_t budget);

struct DichotomyCheck {
    TriVerdict verdict = TriVerdict::Unknown;
    bool coexistence = false;
    std::vector<Evidence> evidence;
};

// liminf eps_n > 0 forces an at-most-two-rates dichotomy: fast on the runs
// where the companion martingale dies, slow e^{-pi Gamma_n} on the rest.
// Combined with fast-rate possibility this decides coexistence.
DichotomyCheck check_two_rate_dichotomy(const StepSchedule& s, const BanditParams& p,
                                        std::uint64_t budget);

// Composition of the four general checkers into a full report; this is the
// route for non-power schedules and the cross-check for the closed-form
// table.
RegimeReport classify_schedule(const StepSchedule& s, const BanditParams& p,
                               std::uint64_t budget);

}  // namespace banditlab
