#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "banditlab/regimes.hpp"
#include "banditlab/rng.hpp"
#include "json.hpp"

using namespace banditlab;

namespace {

bool has_converges_evidence(const RegimeReport& r) {
    for (const auto& e : r.evidence) {
        if ((e.condition == "sum_prod_one_minus_pb_gamma" || e.condition == "weak_fallible") &&
            e.verdict == "converges") {
            return true;
        }
    }
    return false;
}

// Compact regime fingerprint for cross-path comparisons.
struct Shape {
    Fallibility fallibility;
    bool coexistence;
    bool slow = false, fast = false;
    Occurrence slow_occ = Occurrence::AlmostSure, fast_occ = Occurrence::AlmostSure;
    double slow_exp = -1.0, fast_exp = -1.0;
};

Shape shape_of(const RegimeReport& r) {
    Shape s{r.fallibility, r.coexistence};
    for (const auto& rd : r.rates_to_one) {
        if (rd.kind == RateKind::Slow) {
            s.slow = true;
            s.slow_occ = rd.occurrence;
            s.slow_exp = rd.exponent;
        } else {
            s.fast = true;
            s.fast_occ = rd.occurrence;
            s.fast_exp = rd.exponent;
        }
    }
    return s;
}

int regime_rank(const Shape& s) {
    if (s.fallibility == Fallibility::Fallible) return 3;
    if (s.fast && !s.slow) return 2;
    if (s.coexistence) return 1;
    return 0;  // slow only
}

}  // namespace

TEST_CASE("power-family decision table") {
    SUBCASE("C*pb > 1: fallible with the n^-C*pb trap rate") {
        const RegimeReport r = classify_power_family(1.0, 4.0, BanditParams(0.6, 0.3));
        CHECK(r.fallibility == Fallibility::Fallible);
        REQUIRE(r.rate_to_zero.has_value());
        CHECK(r.rate_to_zero->domain == ScaleDomain::LogN);
        CHECK(r.rate_to_zero->exponent == doctest::Approx(1.2));
        CHECK(has_converges_evidence(r));
    }
    SUBCASE("C = 1 on (0.6, 0.2): infallible, slow only") {
        const RegimeReport r = classify_power_family(1.0, 1.0, BanditParams(0.6, 0.2));
        CHECK(r.fallibility == Fallibility::Infallible);
        CHECK_FALSE(r.rate_to_zero.has_value());
        REQUIRE(r.rates_to_one.size() == 1);
        CHECK(r.rates_to_one[0].kind == RateKind::Slow);
        CHECK(r.rates_to_one[0].occurrence == Occurrence::AlmostSure);
        CHECK(r.rates_to_one[0].exponent == doctest::Approx(0.4));
        CHECK_FALSE(r.coexistence);
        CHECK(r.summary_line() == "infallible; rate to 1: slow n^-0.40 only");
    }
    SUBCASE("1/pa < C < 1/pi: coexistence") {
        const RegimeReport r = classify_power_family(1.0, 2.0, BanditParams(0.9, 0.45));
        CHECK(r.fallibility == Fallibility::Infallible);
        CHECK(r.coexistence);
        const Shape s = shape_of(r);
        CHECK(s.slow);
        CHECK(s.fast);
        CHECK(s.slow_occ == Occurrence::PositiveProbability);
        CHECK(s.fast_occ == Occurrence::PositiveProbability);
        CHECK(s.slow_exp == doctest::Approx(0.9));
        CHECK(s.fast_exp == doctest::Approx(1.8));
        const std::string line = r.summary_line();
        CHECK(line.find("coexistence") != std::string::npos);
        CHECK(line.find("n^-0.90") != std::string::npos);
        CHECK(line.find("n^-1.80") != std::string::npos);
    }
    SUBCASE("C = 1/pi sits on the fast-almost-sure side") {
        const RegimeReport r = classify_power_family(1.0, 2.5, BanditParams(0.6, 0.2));
        CHECK(r.fallibility == Fallibility::Infallible);
        const Shape s = shape_of(r);
        CHECK(s.fast);
        CHECK_FALSE(s.slow);
        CHECK(s.fast_occ == Occurrence::AlmostSure);
        CHECK(s.fast_exp == doctest::Approx(1.5));
    }
    SUBCASE("alpha < 1 is always fallible, fast in the Gamma domain") {
        for (double c : {0.3, 1.0, 5.0}) {
            const RegimeReport r = classify_power_family(0.5, c, BanditParams(0.6, 0.2));
            CHECK(r.fallibility == Fallibility::Fallible);
            REQUIRE(r.rate_to_zero.has_value());
            CHECK(r.rate_to_zero->domain == ScaleDomain::GammaDomain);
            const Shape s = shape_of(r);
            CHECK(s.fast);
            CHECK_FALSE(s.slow);
            CHECK(s.fast_exp == doctest::Approx(0.6));
        }
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(classify_power_family(0.0, 1.0, BanditParams(0.6, 0.2)),
                        std::invalid_argument);
        CHECK_THROWS_AS(classify_power_family(1.0, -1.0, BanditParams(0.6, 0.2)),
                        std::invalid_argument);
    }
}

TEST_CASE("general fallibility checker") {
    const BanditParams p(0.6, 0.2);
    const std::uint64_t budget = 20000;

    CHECK(check_fallibility(StepSchedule::constant(0.1), p, budget).verdict ==
          Fallibility::Fallible);
    CHECK(check_fallibility(StepSchedule::power(1, 1, 1), p, budget).verdict ==
          Fallibility::Infallible);
    CHECK(check_fallibility(StepSchedule::power(1, 1, 0.5), p, budget).verdict ==
          Fallibility::Fallible);

    SUBCASE("liminf failure blocks the equivalences") {
        const StepSchedule alternating =
            StepSchedule::custom_fn([](std::uint64_t n) { return n % 2 == 0 ? 0.1 : 0.9; });
        const FallibilityCheck out = check_fallibility(alternating, p, budget);
        CHECK(out.verdict == Fallibility::Unknown);
        REQUIRE_FALSE(out.evidence.empty());
        CHECK(out.evidence.front().condition == "liminf_reciprocal_increments");
        CHECK(out.evidence.front().verdict == "fails");
    }

    SUBCASE("tiny budgets yield Unknown, never a guess") {
        const StepSchedule harmonic =
            StepSchedule::custom_fn([](std::uint64_t n) { return 1.0 / (1.0 + double(n)); });
        CHECK(check_fallibility(harmonic, p, 12).verdict == Fallibility::Unknown);
    }

    SUBCASE("fallible verdicts always carry a converging series in evidence") {
        for (const StepSchedule& s :
             {StepSchedule::constant(0.1), StepSchedule::power(1, 1, 0.5),
              StepSchedule::power(7, 7, 1)}) {
            const FallibilityCheck out = check_fallibility(s, p, budget);
            if (out.verdict != Fallibility::Fallible) continue;
            bool converges = false;
            for (const auto& e : out.evidence) {
                if ((e.condition == "sum_prod_one_minus_pb_gamma" ||
                     e.condition == "weak_fallible") &&
                    e.verdict == "converges") {
                    converges = true;
                }
            }
            CHECK(converges);
        }
    }
}

TEST_CASE("fast-rate checkers") {
    const BanditParams p(0.6, 0.2);
    const std::uint64_t budget = 20000;

    SUBCASE("possibility") {
        CHECK(check_fast_rate_possible(StepSchedule::power(2, 2, 1), p, budget).verdict ==
              TriVerdict::Yes);
        CHECK(check_fast_rate_possible(StepSchedule::power(1.5, 1.5, 1), p, budget).verdict ==
              TriVerdict::No);
        CHECK(check_fast_rate_possible(StepSchedule::constant(0.1), p, budget).verdict ==
              TriVerdict::Yes);
    }
    SUBCASE("almost sure") {
        CHECK(check_fast_rate_almost_sure(StepSchedule::constant(0.1), p, budget).verdict ==
              TriVerdict::Yes);
        CHECK(check_fast_rate_almost_sure(StepSchedule::power(2.5, 2.5, 1), p, budget).verdict ==
              TriVerdict::Yes);
        CHECK(check_fast_rate_almost_sure(StepSchedule::power(2, 2, 1), p, budget).verdict ==
              TriVerdict::No);
        CHECK(check_fast_rate_almost_sure(StepSchedule::power(1, 1, 0.5), p, budget).verdict ==
              TriVerdict::Yes);
    }
    SUBCASE("two-rate dichotomy") {
        const DichotomyCheck coexist =
            check_two_rate_dichotomy(StepSchedule::power(2, 2, 1), BanditParams(0.9, 0.45), budget);
        CHECK(coexist.verdict == TriVerdict::Yes);
        CHECK(coexist.coexistence);

        const DichotomyCheck slow_only =
            check_two_rate_dichotomy(StepSchedule::power(1, 1, 1), p, budget);
        CHECK(slow_only.verdict == TriVerdict::Yes);
        CHECK_FALSE(slow_only.coexistence);

        const DichotomyCheck none =
            check_two_rate_dichotomy(StepSchedule::constant(0.1), p, budget);
        CHECK(none.verdict == TriVerdict::No);
    }
}

TEST_CASE("closed-form table agrees with the composed checkers") {
    const UniformStream stream(314159, 0);
    std::uint64_t draw = 0;
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        const double pa = 0.1 + 0.88 * stream.uniform(draw++);
        const double pb = 0.02 + (pa - 0.04) * stream.uniform(draw++);
        const double c = 0.1 + 8.0 * stream.uniform(draw++);
        const BanditParams p(pa, pb);
        const RegimeReport table = classify_power_family(1.0, c, p);
        const RegimeReport composed = classify_schedule(StepSchedule::power(c, c, 1), p, 1000);
        const Shape a = shape_of(table);
        const Shape b = shape_of(composed);
        CAPTURE(pa);
        CAPTURE(pb);
        CAPTURE(c);
        CHECK(a.fallibility == b.fallibility);
        CHECK(a.coexistence == b.coexistence);
        CHECK(a.slow == b.slow);
        CHECK(a.fast == b.fast);
        if (a.slow && b.slow) {
            CHECK(a.slow_occ == b.slow_occ);
            CHECK(a.slow_exp == doctest::Approx(b.slow_exp).epsilon(1e-12));
        }
        if (a.fast && b.fast) {
            CHECK(a.fast_occ == b.fast_occ);
            CHECK(a.fast_exp == doctest::Approx(b.fast_exp).epsilon(1e-12));
        }
        ++checked;
    }
    CHECK(checked == 120);
}

TEST_CASE("regime order is monotone in C") {
    // against (0.6, 0.2): thresholds at 1/pa = 1.667, 1/pi = 2.5, 1/pb = 5
    const BanditParams p(0.6, 0.2);
    int prev = -1;
    for (double c = 0.2; c < 8.0; c += 0.06) {
        const int rank = regime_rank(shape_of(classify_power_family(1.0, c, p)));
        CHECK(rank >= prev);
        prev = rank;
    }
    // exact threshold hits resolve to the stated closed sides
    CHECK(regime_rank(shape_of(classify_power_family(1.0, 1.0 / p.pa, p))) == 0);
    CHECK(regime_rank(shape_of(classify_power_family(1.0, 2.5, p))) == 2);
    CHECK(classify_power_family(1.0, 5.0, p).fallibility == Fallibility::Infallible);
    CHECK(classify_power_family(1.0, 5.0 + 1e-6, p).fallibility == Fallibility::Fallible);
}

TEST_CASE("composed classification of custom schedules") {
    const BanditParams p(0.6, 0.2);

    SUBCASE("harmonic-like custom schedule: infallible, slow only") {
        const StepSchedule s =
            StepSchedule::custom_fn([](std::uint64_t n) { return 1.0 / (1.0 + double(n)); });
        const RegimeReport r = classify_schedule(s, p, 50000);
        CHECK(r.fallibility == Fallibility::Infallible);
        const Shape sh = shape_of(r);
        CHECK(sh.slow);
        CHECK_FALSE(sh.fast);
        CHECK(r.rates_to_one[0].domain == ScaleDomain::GammaDomain);
        CHECK(r.rates_to_one[0].exponent == doctest::Approx(p.pi));
    }

    SUBCASE("constant schedule: fallible, fast almost sure on the target side") {
        const RegimeReport r = classify_schedule(StepSchedule::constant(0.1), p, 20000);
        CHECK(r.fallibility == Fallibility::Fallible);
        const Shape sh = shape_of(r);
        CHECK(sh.fast);
        CHECK(sh.fast_occ == Occurrence::AlmostSure);
        CHECK(has_converges_evidence(r));
    }
}

TEST_CASE("report serialization") {
    const RegimeReport r = classify_power_family(1.0, 2.0, BanditParams(0.9, 0.45));
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["schema_version"] == 1);
    CHECK(j["fallibility"] == "infallible");
    CHECK(j["coexistence"] == true);
    CHECK(j["rate_to_zero"].is_null());
    REQUIRE(j["rates_to_one"].size() == 2);
    CHECK(j["rates_to_one"][0].contains("exponent"));
    CHECK(j["evidence"].is_array());
    REQUIRE(!j["evidence"].empty());
    CHECK(j["evidence"][0].contains("condition"));
    CHECK(j["evidence"][0].contains("verdict"));
    CHECK(j["evidence"][0].contains("method"));
}
