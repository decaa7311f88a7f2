#include "banditlab/regimes.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace banditlab {

namespace {

std::string fmt2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

constexpr std::uint64_t kLiminfWindowCap = 10000;

IndexWindow liminf_window(std::uint64_t budget) {
    return IndexWindow{1, std::max<std::uint64_t>(2, std::min(budget, kLiminfWindowCap))};
}

Evidence liminf_evidence(LiminfVerdict v) {
    Evidence e;
    e.condition = "liminf_reciprocal_increments";
    e.method = "closed_form";
    switch (v) {
        case LiminfVerdict::Holds:
            e.verdict = "holds";
            break;
        case LiminfVerdict::Fails:
            e.verdict = "fails";
            e.detail = "prerequisite fails; trap-side equivalences unavailable";
            break;
        default:
            e.verdict = "inconclusive";
            e.detail = "window infimum within tolerance of -pi";
            break;
    }
    return e;
}

RateDescriptor slow_rate(const StepSchedule& s, const BanditParams& p, Occurrence occ) {
    RateDescriptor r;
    r.kind = RateKind::Slow;
    r.occurrence = occ;
    if (s.family == ScheduleFamily::Power && s.alpha == 1.0) {
        r.domain = ScaleDomain::LogN;
        r.exponent = s.power_c * p.pi;
    } else {
        r.domain = ScaleDomain::GammaDomain;
        r.exponent = p.pi;
    }
    return r;
}

RateDescriptor fast_rate(const StepSchedule& s, const BanditParams& p, Occurrence occ) {
    RateDescriptor r;
    r.kind = RateKind::Fast;
    r.occurrence = occ;
    if (s.family == ScheduleFamily::Power && s.alpha == 1.0) {
        r.domain = ScaleDomain::LogN;
        r.exponent = s.power_c * p.pa;
    } else {
        r.domain = ScaleDomain::GammaDomain;
        r.exponent = p.pa;
    }
    return r;
}

RateDescriptor zero_rate(const StepSchedule& s, const BanditParams& p) {
    RateDescriptor r;
    r.kind = RateKind::Fast;  // trap-side convergence is always fast-rate
    r.occurrence = Occurrence::PositiveProbability;
    if (s.family == ScheduleFamily::Power && s.alpha == 1.0) {
        r.domain = ScaleDomain::LogN;
        r.exponent = s.power_c * p.pb;
    } else {
        r.domain = ScaleDomain::GammaDomain;
        r.exponent = p.pb;
    }
    return r;
}

}  // namespace

const char* to_string(Fallibility f) {
    switch (f) {
        case Fallibility::Fallible: return "fallible";
        case Fallibility::Infallible: return "infallible";
        default: return "unknown";
    }
}

const char* to_string(RateKind k) { return k == RateKind::Slow ? "slow" : "fast"; }

const char* to_string(Occurrence o) {
    return o == Occurrence::AlmostSure ? "almost_sure" : "positive_probability";
}

const char* to_string(ScaleDomain d) { return d == ScaleDomain::LogN ? "log_n" : "gamma_domain"; }

const char* to_string(TriVerdict v) {
    switch (v) {
        case TriVerdict::Yes: return "yes";
        case TriVerdict::No: return "no";
        default: return "unknown";
    }
}

std::string RateDescriptor::text() const {
    if (domain == ScaleDomain::LogN) return "n^-" + fmt2(exponent);
    return "exp(-" + fmt2(exponent) + "*Gamma_n)";
}

Evidence to_evidence(const std::string& condition, const SeriesVerdict& sv) {
    Evidence e;
    e.condition = condition;
    e.verdict = to_string(sv.verdict);
    e.method = to_string(sv.method);
    e.detail = sv.rule;
    return e;
}

std::string RegimeReport::summary_line() const {
    std::string out;
    out += to_string(fallibility);
    if (fallibility == Fallibility::Fallible && rate_to_zero) {
        out += " (rate to 0: " + rate_to_zero->text() + ")";
    }
    if (rates_to_one.empty()) {
        out += "; rates to 1: undecided";
        return out;
    }
    const char* cond = fallibility == Fallibility::Fallible ? " conditional on non-failure" : "";
    if (coexistence && rates_to_one.size() == 2) {
        const RateDescriptor& a = rates_to_one[0].kind == RateKind::Slow ? rates_to_one[0]
                                                                         : rates_to_one[1];
        const RateDescriptor& b = rates_to_one[0].kind == RateKind::Fast ? rates_to_one[0]
                                                                         : rates_to_one[1];
        out += "; rates to 1" + std::string(cond) + ": coexistence of slow " + a.text() +
               " and fast " + b.text();
        return out;
    }
    const RateDescriptor& r = rates_to_one.front();
    out += "; rate to 1" + std::string(cond) + ": ";
    out += to_string(r.kind);
    out += " " + r.text();
    if (r.kind == RateKind::Slow && r.occurrence == Occurrence::AlmostSure) {
        out += " only";
    } else if (r.occurrence == Occurrence::AlmostSure) {
        out += " almost surely";
    }
    return out;
}

std::string RegimeReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["fallibility"] = to_string(fallibility);
    if (rate_to_zero) {
        j["rate_to_zero"] = {{"domain", to_string(rate_to_zero->domain)},
                             {"exponent", rate_to_zero->exponent},
                             {"text", rate_to_zero->text()}};
    } else {
        j["rate_to_zero"] = nullptr;
    }
    j["rates_to_one"] = nlohmann::json::array();
    for (const auto& r : rates_to_one) {
        j["rates_to_one"].push_back({{"kind", to_string(r.kind)},
                                     {"occurrence", to_string(r.occurrence)},
                                     {"domain", to_string(r.domain)},
                                     {"exponent", r.exponent},
                                     {"text", r.text()}});
    }
    j["coexistence"] = coexistence;
    j["evidence"] = nlohmann::json::array();
    for (const auto& e : evidence) {
        j["evidence"].push_back({{"condition", e.condition},
                                 {"verdict", e.verdict},
                                 {"method", e.method},
                                 {"detail", e.detail}});
    }
    return j.dump(2);
}

RegimeReport classify_power_family(double alpha, double c, const BanditParams& p) {
    if (!(c > 0.0)) throw std::invalid_argument("classify_power_family: C must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("classify_power_family: alpha must lie in (0,1]");
    }
    const StepSchedule s = StepSchedule::power(c, c, alpha);
    const SeriesOptions opt{};

    RegimeReport r;
    r.evidence.push_back(liminf_evidence(LiminfVerdict::Holds));
    r.evidence.push_back(
        to_evidence("sum_prod_one_minus_pb_gamma", series_verdict(SeriesKind::SumProdOneMinusPbGamma, s, p, opt)));

    const bool a1 = alpha == 1.0;
    if (!a1 || boundary_snap(c * p.pb, 1.0) > 1.0) {
        r.fallibility = Fallibility::Fallible;
        r.rate_to_zero = zero_rate(s, p);
        if (!a1 && 2.0 * alpha <= 1.0) {
            Evidence e;
            e.condition = "rate_to_zero_descriptor";
            e.verdict = "leading_order";
            e.method = "closed_form";
            e.detail = "product-tail leading order; sum gamma^2 diverges here";
            r.evidence.push_back(e);
        }
    } else {
        r.fallibility = Fallibility::Infallible;
    }

    const Occurrence cond_occ = Occurrence::AlmostSure;
    if (a1) {
        r.evidence.push_back(
            to_evidence("sum_gamma_eps_plus", series_verdict(SeriesKind::SumGammaEpsPlus, s, p, opt)));
        // Same predicate as the sum_gamma_eps_plus closed form, so the table
        // and the composed checkers cannot disagree at the threshold.
        if (boundary_snap(1.0 / c - p.pi, 0.0) <= 0.0) {
            r.rates_to_one.push_back(fast_rate(s, p, cond_occ));
        } else {
            r.evidence.push_back(to_evidence(
                "sum_exp_minus_pa_gamma", series_verdict(SeriesKind::SumExpMinusPaGamma, s, p, opt)));
            if (boundary_snap(c * p.pa, 1.0) > 1.0) {
                r.rates_to_one.push_back(slow_rate(s, p, Occurrence::PositiveProbability));
                r.rates_to_one.push_back(fast_rate(s, p, Occurrence::PositiveProbability));
                r.coexistence = true;
            } else {
                r.rates_to_one.push_back(slow_rate(s, p, cond_occ));
            }
        }
    } else {
        r.evidence.push_back(
            to_evidence("sum_gamma_eps_plus", series_verdict(SeriesKind::SumGammaEpsPlus, s, p, opt)));
        r.rates_to_one.push_back(fast_rate(s, p, cond_occ));
    }

    if (r.fallibility == Fallibility::Fallible) {
        Evidence e;
        e.condition = "rates_to_one_scope";
        e.verdict = "conditional";
        e.method = "closed_form";
        e.detail = "conditional on non-failure";
        r.evidence.push_back(e);
    }
    Evidence norm;
    norm.condition = "family_normalization";
    norm.verdict = "noted";
    norm.method = "closed_form";
    norm.detail = "C' ignored: asymptotics depend on (alpha, C) only";
    r.evidence.push_back(norm);
    return r;
}

FallibilityCheck check_fallibility(const StepSchedule& s, const BanditParams& p,
                                   std::uint64_t budget) {
    FallibilityCheck out;
    const LiminfVerdict lim = check_liminf_condition(s, p, liminf_window(budget));
    out.evidence.push_back(liminf_evidence(lim));
    if (lim == LiminfVerdict::Fails) {
        out.verdict = Fallibility::Unknown;
        return out;
    }

    SeriesOptions opt;
    opt.budget = budget;
    const SeriesVerdict g2 = series_verdict(SeriesKind::SumGammaSq, s, p, opt);
    out.evidence.push_back(to_evidence("sum_gamma_sq", g2));

    if (g2.verdict == Verdict::Converges) {
        const SeriesVerdict prod = series_verdict(SeriesKind::SumProdOneMinusPbGamma, s, p, opt);
        out.evidence.push_back(to_evidence("sum_prod_one_minus_pb_gamma", prod));
        switch (prod.verdict) {
            case Verdict::Converges: out.verdict = Fallibility::Fallible; break;
            case Verdict::Diverges: out.verdict = Fallibility::Infallible; break;
            default: out.verdict = Fallibility::Unknown; break;
        }
        return out;
    }

    const SeriesVerdict weak = series_verdict(SeriesKind::WeakFallible, s, p, opt);
    out.evidence.push_back(to_evidence("weak_fallible", weak));
    if (weak.verdict == Verdict::Converges) {
        out.verdict = Fallibility::Fallible;
    } else {
        out.verdict = Fallibility::Unknown;  // no converse without sum gamma^2 < inf
    }
    return out;
}

ConditionCheck check_fast_rate_possible(const StepSchedule& s, const BanditParams& p,
                                        std::uint64_t budget) {
    ConditionCheck out;
    SeriesOptions opt;
    opt.budget = budget;
    const SeriesVerdict g2 = series_verdict(SeriesKind::SumGammaSq, s, p, opt);
    out.evidence.push_back(to_evidence("sum_gamma_sq", g2));

    if (g2.verdict == Verdict::Converges) {
        const SeriesVerdict e = series_verdict(SeriesKind::SumExpMinusPaGamma, s, p, opt);
        out.evidence.push_back(to_evidence("sum_exp_minus_pa_gamma", e));
        switch (e.verdict) {
            case Verdict::Converges: out.verdict = TriVerdict::Yes; break;
            case Verdict::Diverges: out.verdict = TriVerdict::No; break;
            default: out.verdict = TriVerdict::Unknown; break;
        }
        return out;
    }

    const SeriesVerdict mirror = tail_product_series_verdict(s, p.pa, budget);
    Evidence ev = to_evidence("sum_prod_one_minus_pa_gamma", mirror);
    ev.detail += ev.detail.empty() ? "" : "; ";
    ev.detail += "sufficient condition only";
    out.evidence.push_back(ev);
    out.verdict = mirror.verdict == Verdict::Converges ? TriVerdict::Yes : TriVerdict::Unknown;
    return out;
}

ConditionCheck check_fast_rate_almost_sure(const StepSchedule& s, const BanditParams& p,
                                           std::uint64_t budget) {
    ConditionCheck out;
    SeriesOptions opt;
    opt.budget = budget;
    const SeriesVerdict e = series_verdict(SeriesKind::SumGammaEpsPlus, s, p, opt);
    out.evidence.push_back(to_evidence("sum_gamma_eps_plus", e));
    switch (e.verdict) {
        case Verdict::Converges: out.verdict = TriVerdict::Yes; break;
        case Verdict::Diverges: out.verdict = TriVerdict::No; break;
        default: out.verdict = TriVerdict::Unknown; break;
    }
    return out;
}

DichotomyCheck check_two_rate_dichotomy(const StepSchedule& s, const BanditParams& p,
                                        std::uint64_t budget) {
    DichotomyCheck out;
    Evidence e;
    e.condition = "liminf_eps_positive";

    switch (s.family) {
        case ScheduleFamily::Constant:
            e.verdict = "no";
            e.method = "closed_form";
            e.detail = "eps_n = -pi < 0";
            out.verdict = TriVerdict::No;
            break;
        case ScheduleFamily::Power:
            e.method = "closed_form";
            if (s.alpha == 1.0) {
                const double eps = boundary_snap(1.0 / s.power_c - p.pi, 0.0);
                if (eps > 0.0) {
                    e.verdict = "yes";
                    e.detail = "eps_n = 1/C - pi = " + std::to_string(eps);
                    out.verdict = TriVerdict::Yes;
                } else {
                    e.verdict = "no";
                    e.detail = "eps_n = 1/C - pi <= 0";
                    out.verdict = TriVerdict::No;
                }
            } else {
                e.verdict = "no";
                e.detail = "eps_n -> -pi < 0 for alpha < 1";
                out.verdict = TriVerdict::No;
            }
            break;
        case ScheduleFamily::Custom:
        default: {
            const std::uint64_t hi = std::max<std::uint64_t>(budget, 20);
            const std::uint64_t lo = std::max<std::uint64_t>(hi / 10, 2);
            double inf = std::numeric_limits<double>::infinity();
            for (std::uint64_t n = lo; n <= hi; ++n) {
                inf = std::min(inf, epsilon_at(s, n, p));
            }
            e.method = "numeric_partial_sum";
            e.detail = "windowed inf eps over [" + std::to_string(lo) + "," +
                       std::to_string(hi) + "] = " + std::to_string(inf);
            if (inf > 1e-12) {
                e.verdict = "yes";
                out.verdict = TriVerdict::Yes;
            } else if (inf < -1e-12) {
                e.verdict = "no";
                out.verdict = TriVerdict::No;
            } else {
                e.verdict = "unknown";
                out.verdict = TriVerdict::Unknown;
            }
            break;
        }
    }
    out.evidence.push_back(e);

    if (out.verdict == TriVerdict::Yes) {
        ConditionCheck fp = check_fast_rate_possible(s, p, budget);
        for (auto& ev : fp.evidence) out.evidence.push_back(std::move(ev));
        out.coexistence = fp.verdict == TriVerdict::Yes;
    }
    return out;
}

RegimeReport classify_schedule(const StepSchedule& s, const BanditParams& p,
                               std::uint64_t budget) {
    RegimeReport r;

    FallibilityCheck fall = check_fallibility(s, p, budget);
    r.fallibility = fall.verdict;
    for (auto& e : fall.evidence) r.evidence.push_back(std::move(e));
    if (r.fallibility == Fallibility::Fallible) r.rate_to_zero = zero_rate(s, p);

    ConditionCheck fas = check_fast_rate_almost_sure(s, p, budget);
    for (auto& e : fas.evidence) r.evidence.push_back(std::move(e));

    if (fas.verdict == TriVerdict::Yes) {
        r.rates_to_one.push_back(fast_rate(s, p, Occurrence::AlmostSure));
    } else {
        DichotomyCheck dich = check_two_rate_dichotomy(s, p, budget);
        for (auto& e : dich.evidence) r.evidence.push_back(std::move(e));
        if (dich.verdict == TriVerdict::Yes) {
            if (dich.coexistence) {
                r.rates_to_one.push_back(slow_rate(s, p, Occurrence::PositiveProbability));
                r.rates_to_one.push_back(fast_rate(s, p, Occurrence::PositiveProbability));
                r.coexistence = true;
            } else {
                // Under the dichotomy, ruling the fast rate out leaves the
                // slow rate almost surely on runs converging to 1.
                bool fast_ruled_out = false;
                for (const auto& e : r.evidence) {
                    if (e.condition == "sum_exp_minus_pa_gamma" && e.verdict == "diverges") {
                        fast_ruled_out = true;
                    }
                }
                r.rates_to_one.push_back(slow_rate(
                    s, p, fast_ruled_out ? Occurrence::AlmostSure : Occurrence::PositiveProbability));
                if (!fast_ruled_out) {
                    Evidence e;
                    e.condition = "rates_to_one_scope";
                    e.verdict = "partial";
                    e.method = "numeric_partial_sum";
                    e.detail = "fast-rate possibility undecided";
                    r.evidence.push_back(e);
                }
            }
        }
        // No dichotomy and no almost-sure fast rate: leave rates_to_one as
        // whatever the evidence supports (possibly empty).
    }

    if (r.fallibility == Fallibility::Fallible && !r.rates_to_one.empty()) {
        Evidence e;
        e.condition = "rates_to_one_scope";
        e.verdict = "conditional";
        e.method = "closed_form";
        e.detail = "conditional on non-failure";
        r.evidence.push_back(e);
    }
    return r;
}

}  // namespace banditlab
