#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "banditlab/schedule.hpp"

using namespace banditlab;

namespace {

// Independent summation oracle in extended precision.
long double direct_gamma_sum(const StepSchedule& s, std::uint64_t n) {
    long double acc = 0.0L;
    for (std::uint64_t k = 1; k <= n; ++k) acc += static_cast<long double>(gamma_at(s, k));
    return acc;
}

StepSchedule as_custom(const StepSchedule& s) {
    return StepSchedule::custom_fn([s](std::uint64_t n) { return gamma_at(s, n); });
}

}  // namespace

TEST_CASE("gamma_at evaluates each family") {
    CHECK(gamma_at(StepSchedule::power(2, 2, 1), 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gamma_at(StepSchedule::constant(0.1), 7) == 0.1);
    CHECK(gamma_at(StepSchedule::power(1, 1, 0.5), 3) == doctest::Approx(0.5).epsilon(1e-15));

    SUBCASE("rejects values outside (0,1)") {
        const StepSchedule bad = StepSchedule::power(4, 1, 1);  // gamma_1 = 2
        CHECK_THROWS_AS(gamma_at(bad, 1), std::domain_error);
        CHECK_NOTHROW(gamma_at(bad, 4));  // 4/5 < 1 once n is large enough
        CHECK_THROWS_AS(gamma_at(StepSchedule::constant(0.1), 0), std::invalid_argument);
    }

    SUBCASE("family constructors validate their domains") {
        CHECK_THROWS_WITH_AS(StepSchedule::power(1, 1, 1.5),
                             doctest::Contains("alpha must lie in (0,1]"), std::invalid_argument);
        CHECK_THROWS_AS(StepSchedule::constant(1.0), std::invalid_argument);
        CHECK_THROWS_AS(StepSchedule::constant(0.0), std::invalid_argument);
        CHECK_THROWS_AS(StepSchedule::power(0, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(StepSchedule::power(1, -2, 1), std::invalid_argument);
    }
}

TEST_CASE("cumulative sums are exact running sums") {
    const auto c10 = cumulative(StepSchedule::constant(0.1), 10);
    CHECK(c10.gamma_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c10.gamma_sq_sum == doctest::Approx(0.1).epsilon(1e-12));

    const auto p3 = cumulative(StepSchedule::power(1, 1, 1), 3);
    CHECK(p3.gamma_sum == doctest::Approx(13.0 / 12.0).epsilon(1e-15));
    CHECK(p3.gamma_sq_sum == doctest::Approx(0.25 + 1.0 / 9.0 + 1.0 / 16.0).epsilon(1e-15));

    const auto z = cumulative(StepSchedule::power(1, 1, 1), 0);
    CHECK(z.gamma_sum == 0.0);
    CHECK(z.gamma_sq_sum == 0.0);

    SUBCASE("agrees with the long-double oracle at n = 1e5") {
        const StepSchedule s = StepSchedule::power(2, 2, 1);
        const auto got = cumulative(s, 100000);
        const long double oracle = direct_gamma_sum(s, 100000);
        CHECK(std::abs(got.gamma_sum - static_cast<double>(oracle)) / got.gamma_sum < 1e-12);
        // Gamma_n ~ C ln n: the constant offset cancels in increments.
        const auto got6 = cumulative(s, 1000000);
        CHECK(got6.gamma_sum - got.gamma_sum ==
              doctest::Approx(2.0 * std::log(10.0)).epsilon(1e-4));
    }
}

TEST_CASE("derived bundle matches the individual accessors") {
    const BanditParams p(0.6, 0.2);
    const StepSchedule s = StepSchedule::power(2, 2, 1);
    const ScheduleDerived d = derived_at(s, 10, p);
    CHECK(d.n == 10);
    CHECK(d.gamma == gamma_at(s, 10));
    CHECK(d.big_gamma == cumulative(s, 10).gamma_sum);
    CHECK(d.big_gamma2 == cumulative(s, 10).gamma_sq_sum);
    CHECK(d.eps == epsilon_at(s, 10, p));
    CHECK(d.eps == 1.0 / 2.0 - p.pi);
}

TEST_CASE("epsilon telescopes for the alpha=1 power family") {
    const BanditParams p(0.6, 0.2);  // pi = 0.4
    const StepSchedule s22 = StepSchedule::power(2, 2, 1);
    for (std::uint64_t n : {std::uint64_t(1), std::uint64_t(17), std::uint64_t(1000000)}) {
        CHECK(epsilon_at(s22, n, p) == 1.0 / 2.0 - p.pi);  // bitwise-stable
    }
    CHECK(epsilon_at(s22, 5, p) == doctest::Approx(0.1).epsilon(1e-14));

    CHECK(epsilon_at(StepSchedule::constant(0.1), 3, p) == -p.pi);

    SUBCASE("alpha=1 with distinct C' still telescopes to 1/C - pi") {
        const StepSchedule s = StepSchedule::power(2, 7, 1);
        CHECK(epsilon_at(s, 42, p) == 1.0 / 2.0 - p.pi);
        // oracle: definition evaluated directly
        const double direct = 1.0 / gamma_at(s, 43) - 1.0 / gamma_at(s, 42) - p.pi;
        CHECK(epsilon_at(s, 42, p) == doctest::Approx(direct).epsilon(1e-12));
    }

    SUBCASE("alpha=0.5 drifts to -pi") {
        const StepSchedule s = StepSchedule::power(1, 1, 0.5);
        CHECK(epsilon_at(s, 10000, p) == doctest::Approx(-0.4).epsilon(0.025));
        const double direct = 1.0 / gamma_at(s, 10001) - 1.0 / gamma_at(s, 10000) - p.pi;
        CHECK(epsilon_at(s, 10000, p) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("liminf condition") {
    const BanditParams p(0.6, 0.2);
    CHECK(check_liminf_condition(StepSchedule::constant(0.1), p, {1, 10}) ==
          LiminfVerdict::Holds);
    CHECK(check_liminf_condition(StepSchedule::power(2, 2, 1), p, {1, 10}) ==
          LiminfVerdict::Holds);

    const StepSchedule alternating = StepSchedule::custom_fn(
        [](std::uint64_t n) { return n % 2 == 0 ? 0.1 : 0.9; });
    CHECK(check_liminf_condition(alternating, p, {1, 100}) == LiminfVerdict::Fails);

    CHECK_THROWS_AS(check_liminf_condition(alternating, p, {5, 4}), std::invalid_argument);
}

TEST_CASE("series verdicts: closed forms") {
    const BanditParams p62(0.6, 0.2);   // pi = 0.4
    const BanditParams p63(0.6, 0.3);   // pi = 0.3

    SUBCASE("sum gamma^2 exp(pi Gamma): p-series in 2 - C*pi") {
        const auto v = series_verdict(SeriesKind::SumGammaSqExpPiGamma,
                                      StepSchedule::power(2, 2, 1), p62);  // C*pi = 0.8
        CHECK(v.verdict == Verdict::Converges);
        CHECK(v.method == VerdictMethod::ClosedForm);
        CHECK(series_verdict(SeriesKind::SumGammaSqExpPiGamma, StepSchedule::power(3, 3, 1), p62)
                  .verdict == Verdict::Diverges);  // C*pi = 1.2
    }

    SUBCASE("sum exp(-pa Gamma): p-series in C*pa") {
        CHECK(series_verdict(SeriesKind::SumExpMinusPaGamma, StepSchedule::power(2, 2, 1), p62)
                  .verdict == Verdict::Converges);  // C*pa = 1.2
        CHECK(series_verdict(SeriesKind::SumExpMinusPaGamma, StepSchedule::power(1.5, 1.5, 1), p62)
                  .verdict == Verdict::Diverges);  // C*pa = 0.9
    }

    SUBCASE("tail product: geometric for constant schedules") {
        const auto v = series_verdict(SeriesKind::SumProdOneMinusPbGamma,
                                      StepSchedule::constant(0.1), p62);
        CHECK(v.verdict == Verdict::Converges);
        CHECK(v.method == VerdictMethod::ClosedForm);
    }

    SUBCASE("sum gamma eps+: vanishes for constant schedules") {
        CHECK(series_verdict(SeriesKind::SumGammaEpsPlus, StepSchedule::constant(0.3), p62)
                  .verdict == Verdict::Converges);
        // power alpha=1: converges iff pi*C >= 1
        CHECK(series_verdict(SeriesKind::SumGammaEpsPlus, StepSchedule::power(2.5, 2.5, 1), p62)
                  .verdict == Verdict::Converges);
        CHECK(series_verdict(SeriesKind::SumGammaEpsPlus, StepSchedule::power(2, 2, 1), p62)
                  .verdict == Verdict::Diverges);
        // alpha < 1: eps -> -pi, only finitely many positive terms
        CHECK(series_verdict(SeriesKind::SumGammaEpsPlus, StepSchedule::power(1, 1, 0.5), p62)
                  .verdict == Verdict::Converges);
    }

    SUBCASE("sum gamma^2") {
        CHECK(series_verdict(SeriesKind::SumGammaSq, StepSchedule::constant(0.1), p62).verdict ==
              Verdict::Diverges);
        CHECK(series_verdict(SeriesKind::SumGammaSq, StepSchedule::power(1, 1, 1), p62).verdict ==
              Verdict::Converges);
        CHECK(series_verdict(SeriesKind::SumGammaSq, StepSchedule::power(1, 1, 0.5), p62)
                  .verdict == Verdict::Diverges);
        CHECK(series_verdict(SeriesKind::SumGammaSq, StepSchedule::power(1, 1, 0.75), p62)
                  .verdict == Verdict::Converges);
    }

    SUBCASE("fallibility boundary on C*pb") {
        CHECK(series_verdict(SeriesKind::SumProdOneMinusPbGamma, StepSchedule::power(4, 4, 1), p63)
                  .verdict == Verdict::Converges);  // C*pb = 1.2
        CHECK(series_verdict(SeriesKind::SumProdOneMinusPbGamma, StepSchedule::power(1, 1, 1), p62)
                  .verdict == Verdict::Diverges);  // C*pb = 0.2
        // boundary C*pb = 1 diverges (harmonic)
        CHECK(series_verdict(SeriesKind::SumProdOneMinusPbGamma, StepSchedule::power(5, 5, 1), p62)
                  .verdict == Verdict::Diverges);
    }

    SUBCASE("weak fallible condition") {
        CHECK(series_verdict(SeriesKind::WeakFallible, StepSchedule::constant(0.1), p62).verdict ==
              Verdict::Converges);
        CHECK(series_verdict(SeriesKind::WeakFallible, StepSchedule::power(1, 1, 0.5), p62)
                  .verdict == Verdict::Converges);
        SeriesOptions bad;
        bad.rho = p62.pb * (1 - p62.pb);  // above the admissible range
        CHECK_THROWS_AS(
            series_verdict(SeriesKind::WeakFallible, StepSchedule::constant(0.1), p62, bad),
            std::invalid_argument);
    }
}

TEST_CASE("series verdicts: numeric heuristic on custom schedules") {
    const BanditParams p(0.6, 0.2);
    SeriesOptions opt;
    opt.budget = 20000;

    SUBCASE("matches closed forms when the exponent is clear of the band") {
        struct Row {
            SeriesKind kind;
            StepSchedule sched;
        };
        const Row rows[] = {
            {SeriesKind::SumExpMinusPaGamma, StepSchedule::power(4, 4, 1)},    // n^-2.4
            {SeriesKind::SumExpMinusPaGamma, StepSchedule::power(0.5, 0.5, 1)},  // n^-0.3
            {SeriesKind::SumProdOneMinusPbGamma, StepSchedule::power(10, 10, 1)},  // n^-2
            {SeriesKind::SumGammaSq, StepSchedule::power(1, 1, 1)},            // n^-2
            {SeriesKind::SumGammaSqExpPiGamma, StepSchedule::power(1, 1, 1)},  // n^-1.6
            {SeriesKind::WeakFallible, StepSchedule::power(0.5, 0.5, 1)},      // n^-0.1
        };
        for (const Row& row : rows) {
            const auto closed = series_verdict(row.kind, row.sched, p, opt);
            const auto numeric = series_verdict(row.kind, as_custom(row.sched), p, opt);
            CAPTURE(static_cast<int>(row.kind));
            REQUIRE(closed.method == VerdictMethod::ClosedForm);
            REQUIRE(numeric.method == VerdictMethod::NumericPartialSum);
            CHECK(closed.verdict == numeric.verdict);
        }
    }

    SUBCASE("near the harmonic boundary the heuristic stays inconclusive") {
        // terms ~ n^-1.05: convergent but inside the safety band
        const auto v = series_verdict(SeriesKind::SumExpMinusPaGamma,
                                      as_custom(StepSchedule::power(1.75, 1.75, 1)), p, opt);
        CHECK(v.verdict == Verdict::Inconclusive);
    }

    SUBCASE("budget exhaustion never fabricates a verdict") {
        SeriesOptions tiny;
        tiny.budget = 12;
        const auto v = series_verdict(SeriesKind::SumExpMinusPaGamma,
                                      as_custom(StepSchedule::power(4, 4, 1)), p, tiny);
        CHECK(v.verdict == Verdict::Inconclusive);
    }

    SUBCASE("geometric custom terms converge fast") {
        const auto v = series_verdict(SeriesKind::SumProdOneMinusPbGamma,
                                      as_custom(StepSchedule::constant(0.1)), p, opt);
        CHECK(v.verdict == Verdict::Converges);
    }
}

TEST_CASE("closed-form verdicts match raw partial sums on power alpha=1") {
    const BanditParams p(0.6, 0.2);

    SUBCASE("divergent series blow past a fixed bound") {
        // C*pa = 0.5: partial sums ~ 2 sqrt(n)
        const StepSchedule s = StepSchedule::power(0.5 / p.pa, 0.5 / p.pa, 1);
        REQUIRE(series_verdict(SeriesKind::SumExpMinusPaGamma, s, p).verdict ==
                Verdict::Diverges);
        double big_gamma = 0.0;
        double sum = 0.0;
        for (std::uint64_t n = 1; n <= 1000000; ++n) {
            big_gamma += gamma_at(s, n);
            sum += std::exp(-p.pa * big_gamma);
        }
        CHECK(sum > 1e3);
    }

    SUBCASE("convergent series have negligible tail increments") {
        // C*pa = 1.5
        const StepSchedule s = StepSchedule::power(2.5, 2.5, 1);
        REQUIRE(series_verdict(SeriesKind::SumExpMinusPaGamma, s, p).verdict ==
                Verdict::Converges);
        double big_gamma = 0.0;
        double sum = 0.0;
        double last_term = 0.0;
        for (std::uint64_t n = 1; n <= 1000000; ++n) {
            big_gamma += gamma_at(s, n);
            last_term = std::exp(-p.pa * big_gamma);
            sum += last_term;
        }
        CHECK(last_term / sum < 1e-4);
    }
}

TEST_CASE("per-step increments of cumulative match gamma_at up to 1e6") {
    const StepSchedule s = StepSchedule::power(2, 2, 1);
    double gsum = 0.0;
    double g2sum = 0.0;
    bool ok = true;
    for (std::uint64_t n = 1; n <= 1000000; ++n) {
        const double g = gamma_at(s, n);
        const double before = gsum;
        gsum += g;
        g2sum += g * g;
        if (!(g > 0.0 && g < 1.0) || gsum < before) {
            ok = false;
            break;
        }
    }
    CHECK(ok);
    const auto direct = cumulative(s, 1000);
    const auto prev = cumulative(s, 999);
    CHECK(direct.gamma_sum - prev.gamma_sum ==
          doctest::Approx(gamma_at(s, 1000)).epsilon(1e-12));
    CHECK(direct.gamma_sq_sum - prev.gamma_sq_sum ==
          doctest::Approx(gamma_at(s, 1000) * gamma_at(s, 1000)).epsilon(1e-12));
    CHECK(gsum == doctest::Approx(cumulative(s, 1000000).gamma_sum).epsilon(1e-12));
    CHECK(g2sum == doctest::Approx(cumulative(s, 1000000).gamma_sq_sum).epsilon(1e-12));
}

TEST_CASE("schedule spec grammar") {
    const StepSchedule c = parse_schedule_spec("constant:0.1");
    CHECK(c.family == ScheduleFamily::Constant);
    CHECK(c.value == 0.1);

    const StepSchedule pw = parse_schedule_spec("power:2,2,1");
    CHECK(pw.family == ScheduleFamily::Power);
    CHECK(gamma_at(pw, 2) == doctest::Approx(0.5));

    CHECK_THROWS_WITH_AS(parse_schedule_spec("power:1,1,1.5"),
                         doctest::Contains("alpha must lie in (0,1]"), std::invalid_argument);
    CHECK_THROWS_AS(parse_schedule_spec("power:1,1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_schedule_spec("mystery:1"), std::invalid_argument);

    SUBCASE("custom file: one gamma per line") {
        const char* path = "schedule_test_custom.txt";
        {
            std::ofstream f(path);
            f << "0.5\n0.25\n0.125\n";
        }
        const StepSchedule cu = parse_schedule_spec(std::string("custom:") + path);
        CHECK(gamma_at(cu, 1) == 0.5);
        CHECK(gamma_at(cu, 3) == 0.125);
        CHECK_THROWS_AS(gamma_at(cu, 4), std::out_of_range);
        {
            std::ofstream f(path);
            f << "0.5\nnot-a-number\n";
        }
        CHECK_THROWS_WITH_AS(parse_schedule_spec(std::string("custom:") + path),
                             doctest::Contains("line 2"), std::invalid_argument);
        std::remove(path);
    }
}
