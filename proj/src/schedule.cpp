#include "banditlab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace banditlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Converges: return "converges";
        case Verdict::Diverges: return "diverges";
        default: return "inconclusive";
    }
}

const char* to_string(VerdictMethod m) {
    return m == VerdictMethod::ClosedForm ? "closed_form" : "numeric_partial_sum";
}

StepSchedule StepSchedule::constant(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("constant schedule: gamma must lie in (0,1)");
    }
    StepSchedule s;
    s.family = ScheduleFamily::Constant;
    s.value = gamma;
    return s;
}

StepSchedule StepSchedule::power(double c, double cprime, double alpha) {
    if (!(c > 0.0)) throw std::invalid_argument("power schedule: C must be positive");
    if (!(cprime > 0.0)) throw std::invalid_argument("power schedule: C' must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("power schedule: alpha must lie in (0,1]");
    }
    StepSchedule s;
    s.family = ScheduleFamily::Power;
    s.power_c = c;
    s.power_cprime = cprime;
    s.alpha = alpha;
    return s;
}

StepSchedule StepSchedule::custom_fn(std::function<double(std::uint64_t)> fn) {
    if (!fn) throw std::invalid_argument("custom schedule: generator must be callable");
    StepSchedule s;
    s.family = ScheduleFamily::Custom;
    s.custom = std::move(fn);
    return s;
}

StepSchedule StepSchedule::custom_table(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("custom schedule: table is empty");
    auto table = std::make_shared<std::vector<double>>(std::move(values));
    return custom_fn([table](std::uint64_t n) -> double {
        if (n == 0 || n > table->size()) {
            throw std::out_of_range("custom schedule: index " + std::to_string(n) +
                                    " beyond table of size " + std::to_string(table->size()));
        }
        return (*table)[n - 1];
    });
}

std::string StepSchedule::describe() const {
    std::ostringstream os;
    os.precision(12);
    switch (family) {
        case ScheduleFamily::Constant:
            os << "constant:" << value;
            break;
        case ScheduleFamily::Power:
            os << "power:" << power_c << "," << power_cprime << "," << alpha;
            break;
        case ScheduleFamily::Custom:
            os << "custom";
            break;
    }
    return os.str();
}

StepSchedule parse_schedule_spec(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);

    auto parse_num = [&](const std::string& tok, const char* what) -> double {
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("schedule spec: cannot parse ") + what +
                                        " from '" + tok + "'");
        }
    };

    if (head == "constant") {
        return StepSchedule::constant(parse_num(rest, "gamma"));
    }
    if (head == "power") {
        std::vector<std::string> toks;
        std::string cur;
        std::istringstream is(rest);
        while (std::getline(is, cur, ',')) toks.push_back(cur);
        if (toks.size() != 3) {
            throw std::invalid_argument("schedule spec: power requires power:<C>,<C'>,<alpha>");
        }
        return StepSchedule::power(parse_num(toks[0], "C"), parse_num(toks[1], "C'"),
                                   parse_num(toks[2], "alpha"));
    }
    if (head == "custom") {
        std::ifstream in(rest);
        if (!in) throw std::invalid_argument("schedule spec: cannot open custom file '" + rest + "'");
        std::vector<double> values;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            double v;
            try {
                std::size_t pos = 0;
                v = std::stod(line, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("schedule spec: line " + std::to_string(lineno) +
                                            " of '" + rest + "' is not a decimal number");
            }
            if (!(v > 0.0 && v < 1.0)) {
                throw std::invalid_argument("schedule spec: line " + std::to_string(lineno) +
                                            " of '" + rest + "': gamma must lie in (0,1)");
            }
            values.push_back(v);
        }
        return StepSchedule::custom_table(std::move(values));
    }
    throw std::invalid_argument("schedule spec: unknown family '" + head +
                                "' (expected constant/power/custom)");
}

double gamma_at(const StepSchedule& s, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("gamma_at: index must be >= 1");
    double g;
    switch (s.family) {
        case ScheduleFamily::Constant:
            return s.value;
        case ScheduleFamily::Power: {
            const double base = s.power_c / (s.power_cprime + static_cast<double>(n));
            g = (s.alpha == 1.0) ? base : std::pow(base, s.alpha);
            break;
        }
        case ScheduleFamily::Custom:
            g = s.custom(n);
            break;
        default:
            g = 0.0;
    }
    if (!(g > 0.0 && g < 1.0)) {
        throw std::domain_error("gamma_at: schedule yields gamma outside (0,1) at n = " +
                                std::to_string(n));
    }
    return g;
}

CumulativeSums cumulative(const StepSchedule& s, std::uint64_t n) {
    CumulativeSums sums;
    for (std::uint64_t k = 1; k <= n; ++k) {
        const double g = gamma_at(s, k);
        sums.gamma_sum += g;
        sums.gamma_sq_sum += g * g;
    }
    return sums;
}

ScheduleDerived derived_at(const StepSchedule& s, std::uint64_t n, const BanditParams& p) {
    ScheduleDerived d;
    d.n = n;
    d.gamma = gamma_at(s, n);
    const CumulativeSums sums = cumulative(s, n);
    d.big_gamma = sums.gamma_sum;
    d.big_gamma2 = sums.gamma_sq_sum;
    d.eps = epsilon_at(s, n, p);
    return d;
}

double epsilon_at(const StepSchedule& s, std::uint64_t n, const BanditParams& p) {
    if (n == 0) throw std::invalid_argument("epsilon_at: index must be >= 1");
    switch (s.family) {
        case ScheduleFamily::Constant:
            return -p.pi;
        case ScheduleFamily::Power: {
            if (s.alpha == 1.0) {
                // 1/gamma_n = (C'+n)/C, so consecutive reciprocals telescope.
                return 1.0 / s.power_c - p.pi;
            }
            const double ca = std::pow(s.power_c, s.alpha);
            const double a = std::pow(s.power_cprime + static_cast<double>(n) + 1.0, s.alpha);
            const double b = std::pow(s.power_cprime + static_cast<double>(n), s.alpha);
            return (a - b) / ca - p.pi;
        }
        case ScheduleFamily::Custom:
        default:
            return 1.0 / gamma_at(s, n + 1) - 1.0 / gamma_at(s, n) - p.pi;
    }
}

LiminfVerdict check_liminf_condition(const StepSchedule& s, const BanditParams& p,
                                     IndexWindow window) {
    if (s.family == ScheduleFamily::Constant || s.family == ScheduleFamily::Power) {
        // Nonincreasing sequences: 1/gamma_{n+1} - 1/gamma_n >= 0 > -pi.
        return LiminfVerdict::Holds;
    }
    if (window.lo == 0 || window.hi < window.lo) {
        throw std::invalid_argument("check_liminf_condition: window must be nonempty with lo >= 1");
    }
    constexpr double tol = 1e-12;
    double inf = kInf;
    for (std::uint64_t n = window.lo; n <= window.hi; ++n) {
        const double diff = 1.0 / gamma_at(s, n + 1) - 1.0 / gamma_at(s, n);
        inf = std::min(inf, diff);
    }
    if (inf > -p.pi + tol) return LiminfVerdict::Holds;
    if (inf < -p.pi - tol) return LiminfVerdict::Fails;
    return LiminfVerdict::Inconclusive;
}

namespace {

// --- closed-form rules ------------------------------------------------------

SeriesVerdict closed(Verdict v, std::string rule) {
    SeriesVerdict sv;
    sv.verdict = v;
    sv.method = VerdictMethod::ClosedForm;
    sv.rule = std::move(rule);
    return sv;
}

// p-series sum n^-p: converges iff p > 1 (boundary snapped to the divergent
// closed side).
SeriesVerdict p_series(double p, const std::string& what) {
    return closed(boundary_snap(p, 1.0) > 1.0 ? Verdict::Converges : Verdict::Diverges,
                  what + ": p-series exponent " + fmt(p));
}

// --- numeric ratio heuristic -------------------------------------------------
//
// Partial sums S_N plus a fit of the local ratio a_{n+1}/a_n ~ 1 - q/n over
// the last decade of the budget. Converges if q > 1.2, Diverges if q < 0.8 or
// S_N blows past the overflow guard, else Inconclusive. All the families the
// theory cares about reduce to p-series-like tails, so the band [0.8, 1.2]
// around the harmonic boundary keeps definitive verdicts safe.

constexpr double kQConverge = 1.2;
constexpr double kQDiverge = 0.8;
constexpr double kOverflowGuardLog = 34.5;  // S_N > ~1e15

struct LogSum {
    double log_sum = -kInf;
    void add(double log_term) {
        if (log_term == -kInf) return;
        if (log_sum == -kInf) {
            log_sum = log_term;
        } else if (log_term > log_sum) {
            log_sum = log_term + std::log1p(std::exp(log_sum - log_term));
        } else {
            log_sum = log_sum + std::log1p(std::exp(log_term - log_sum));
        }
    }
};

// log_term(n) must be callable for n = 1..budget+1 and may return -inf for
// exactly-zero terms.
SeriesVerdict numeric_ratio_heuristic(std::uint64_t budget,
                                      const std::function<double(std::uint64_t)>& log_term) {
    SeriesVerdict sv;
    sv.method = VerdictMethod::NumericPartialSum;
    if (budget < 20) {
        sv.rule = "budget too small for the ratio heuristic";
        return sv;
    }

    LogSum sum;
    const std::uint64_t window_lo = std::max<std::uint64_t>(budget / 10, 2);
    std::vector<double> qs;
    qs.reserve(static_cast<std::size_t>(budget - window_lo + 2));

    double prev_log = -kInf;
    std::uint64_t zero_tail = 0;
    for (std::uint64_t n = 1; n <= budget; ++n) {
        const double lt = log_term(n);
        sum.add(lt);
        sv.terms_used = n;
        if (sum.log_sum > kOverflowGuardLog) {
            sv.verdict = Verdict::Diverges;
            sv.rule = "partial sum exceeded the overflow guard at n = " + std::to_string(n);
            sv.log_partial_sum = sum.log_sum;
            return sv;
        }
        if (n >= window_lo) {
            if (lt == -kInf) {
                ++zero_tail;
            } else if (prev_log != -kInf) {
                const double ratio = std::exp(lt - prev_log);
                qs.push_back(static_cast<double>(n - 1) * (1.0 - ratio));
            }
        }
        prev_log = lt;
    }
    sv.log_partial_sum = sum.log_sum;

    if (zero_tail == budget - window_lo + 1) {
        // Every term in the window vanished: the tail contributes nothing.
        sv.verdict = Verdict::Converges;
        sv.rule = "all terms in the last decade are zero";
        return sv;
    }
    if (qs.size() < 8) {
        sv.rule = "too few nonzero consecutive terms for a ratio fit";
        return sv;
    }
    const double q = median_of(qs);
    sv.q_hat = q;
    sv.rule = "ratio fit q = " + fmt(q) + " over n in [" + std::to_string(window_lo) + "," +
              std::to_string(budget) + "]";
    if (q > kQConverge) {
        sv.verdict = Verdict::Converges;
    } else if (q < kQDiverge) {
        sv.verdict = Verdict::Diverges;
    } else {
        sv.verdict = Verdict::Inconclusive;
    }
    return sv;
}

SeriesVerdict numeric_tail_product(const StepSchedule& s, double coeff, std::uint64_t budget) {
    // term(n) = prod_{k<=n} (1 - coeff*gamma_k), accumulated in log domain.
    auto log_prod = std::make_shared<double>(0.0);
    auto last_n = std::make_shared<std::uint64_t>(0);
    return numeric_ratio_heuristic(budget, [&s, coeff, log_prod, last_n](std::uint64_t n) {
        // Terms are requested with strictly increasing n.
        while (*last_n < n) {
            ++*last_n;
            *log_prod += std::log1p(-coeff * gamma_at(s, *last_n));
        }
        return *log_prod;
    });
}

}  // namespace

SeriesVerdict tail_product_series_verdict(const StepSchedule& s, double coeff,
                                          std::uint64_t budget) {
    if (!(coeff > 0.0 && coeff < 1.0)) {
        throw std::invalid_argument("tail_product_series_verdict: coefficient must lie in (0,1)");
    }
    switch (s.family) {
        case ScheduleFamily::Constant:
            return closed(Verdict::Converges,
                          "geometric series with ratio " + fmt(1.0 - coeff * s.value));
        case ScheduleFamily::Power:
            if (s.alpha == 1.0) {
                return p_series(s.power_c * coeff, "tail product ~ n^-(C*coeff)");
            }
            return closed(Verdict::Converges,
                          "stretched-exponential tail exp(-coeff*Gamma_n), alpha < 1");
        case ScheduleFamily::Custom:
        default:
            return numeric_tail_product(s, coeff, budget);
    }
}

SeriesVerdict series_verdict(SeriesKind kind, const StepSchedule& s, const BanditParams& p,
                             const SeriesOptions& opt) {
    double rho = opt.rho;
    if (kind == SeriesKind::WeakFallible) {
        const double half = p.pb * (1.0 - p.pb) / 2.0;
        if (rho < 0.0) rho = half / 2.0;  // midpoint of the admissible range
        if (!(rho > 0.0 && rho < half)) {
            throw std::invalid_argument("series_verdict: rho must lie in (0, pb(1-pb)/2)");
        }
    }

    const bool is_constant = s.family == ScheduleFamily::Constant;
    const bool is_power1 = s.family == ScheduleFamily::Power && s.alpha == 1.0;
    const bool is_power_sub1 = s.family == ScheduleFamily::Power && s.alpha < 1.0;

    switch (kind) {
        case SeriesKind::SumGammaSq:
            if (is_constant) return closed(Verdict::Diverges, "constant terms gamma^2");
            if (is_power1) return p_series(2.0, "gamma_n^2 ~ n^-2");
            if (is_power_sub1) return p_series(2.0 * s.alpha, "gamma_n^2 ~ n^-(2*alpha)");
            return numeric_ratio_heuristic(opt.budget, [&s](std::uint64_t n) {
                return 2.0 * std::log(gamma_at(s, n));
            });

        case SeriesKind::SumGammaSqExpPiGamma:
            if (is_constant) {
                return closed(Verdict::Diverges, "terms gamma^2 exp(pi*gamma*n) grow");
            }
            if (is_power1) {
                return p_series(2.0 - s.power_c * p.pi, "gamma^2 exp(pi*Gamma) ~ n^-(2-C*pi)");
            }
            if (is_power_sub1) {
                return closed(Verdict::Diverges,
                              "exp(pi*Gamma_n) outgrows gamma_n^2 for alpha < 1");
            }
            return numeric_ratio_heuristic(opt.budget, [&s, &p, big = std::make_shared<double>(0.0),
                                                        last = std::make_shared<std::uint64_t>(0)](
                                                           std::uint64_t n) {
                while (*last < n) {
                    ++*last;
                    *big += gamma_at(s, *last);
                }
                return 2.0 * std::log(gamma_at(s, n)) + p.pi * *big;
            });

        case SeriesKind::SumExpMinusPaGamma:
            if (is_constant) {
                return closed(Verdict::Converges,
                              "geometric series with ratio " + fmt(std::exp(-p.pa * s.value)));
            }
            if (is_power1) return p_series(s.power_c * p.pa, "exp(-pa*Gamma_n) ~ n^-(C*pa)");
            if (is_power_sub1) {
                return closed(Verdict::Converges,
                              "stretched-exponential tail exp(-pa*Gamma_n), alpha < 1");
            }
            return numeric_ratio_heuristic(opt.budget, [&s, &p, big = std::make_shared<double>(0.0),
                                                        last = std::make_shared<std::uint64_t>(0)](
                                                           std::uint64_t n) {
                while (*last < n) {
                    ++*last;
                    *big += gamma_at(s, *last);
                }
                return -p.pa * *big;
            });

        case SeriesKind::SumProdOneMinusPbGamma:
            return tail_product_series_verdict(s, p.pb, opt.budget);

        case SeriesKind::SumGammaEpsPlus:
            if (is_constant) return closed(Verdict::Converges, "eps_n = -pi < 0; all terms vanish");
            if (is_power1) {
                const double eps = boundary_snap(1.0 / s.power_c - p.pi, 0.0);
                if (eps <= 0.0) {
                    return closed(Verdict::Converges, "eps_n = 1/C - pi <= 0; all terms vanish");
                }
                return closed(Verdict::Diverges,
                              "gamma_n*eps_n ~ (1 - pi*C)/n, harmonic tail");
            }
            if (is_power_sub1) {
                return closed(Verdict::Converges,
                              "eps_n -> -pi < 0; only finitely many positive terms");
            }
            return numeric_ratio_heuristic(opt.budget, [&s, &p](std::uint64_t n) {
                const double eps = epsilon_at(s, n, p);
                if (eps <= 0.0) return -kInf;
                return std::log(gamma_at(s, n)) + std::log(eps);
            });

        case SeriesKind::WeakFallible:
            if (is_constant) {
                return closed(Verdict::Converges,
                              "terms bounded by the geometric tail (1 - pb*gamma)^n");
            }
            if (is_power1) {
                // Gamma2 converges, so exp(-rho*Gamma2_n) tends to a positive
                // constant and the verdict matches the plain tail product.
                return p_series(s.power_c * p.pb,
                                "exp(-rho*Gamma2) bounded; tail product ~ n^-(C*pb)");
            }
            if (is_power_sub1) {
                return closed(Verdict::Converges,
                              "stretched-exponential tail exp(-pb*Gamma_n), alpha < 1");
            }
            return numeric_ratio_heuristic(
                opt.budget, [&s, &p, rho, big2 = std::make_shared<double>(0.0),
                             logprod = std::make_shared<double>(0.0),
                             last = std::make_shared<std::uint64_t>(0)](std::uint64_t n) {
                    while (*last < n) {
                        ++*last;
                        const double g = gamma_at(s, *last);
                        *big2 += g * g;
                        *logprod += std::log1p(-p.pb * g);
                    }
                    return -rho * *big2 + *logprod;
                });
    }
    return SeriesVerdict{};
}

}  // namespace banditlab
