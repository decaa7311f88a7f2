#include "banditlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace banditlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_params(const Trajectory& traj, const BanditParams& p, const char* who) {
    if (traj.params.pa != p.pa || traj.params.pb != p.pb) {
        throw std::invalid_argument(std::string(who) +
                                    ": params differ from the ones the trajectory used");
    }
}

}  // namespace

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::ToZero: return "to_zero";
        case Outcome::ToOne: return "to_one";
        default: return "undecided";
    }
}

const char* to_string(RateMode m) {
    switch (m) {
        case RateMode::Fast: return "fast";
        case RateMode::Slow: return "slow";
        default: return "undecided";
    }
}

CompanionSeries companion_processes(const Trajectory& traj, const BanditParams& p) {
    require_same_params(traj, p, "companion_processes");
    if (traj.checkpoints.size() < 8) {
        throw std::invalid_argument(
            "companion_processes: recording plan stored fewer than 8 states");
    }
    CompanionSeries out;
    out.points.reserve(traj.checkpoints.size());
    for (const Checkpoint& c : traj.checkpoints) {
        CompanionPoint pt;
        pt.n = c.n;
        pt.log_theta = c.log_theta;
        pt.y = c.d == 0.0 ? 0.0 : std::exp(std::log(c.d) - c.log_theta);
        pt.z = c.n == 0 ? kNaN : c.d / c.gamma;
        out.points.push_back(pt);
    }
    return out;
}

OutcomeLabel classify_outcome(const Trajectory& traj, OutcomeThresholds t) {
    if (!(t.delta0 > 0.0 && t.delta0 < 0.1) || !(t.delta1 > 0.0 && t.delta1 < 0.1)) {
        throw std::invalid_argument("classify_outcome: thresholds must lie in (0, 0.1)");
    }
    OutcomeLabel label;
    label.final_x = traj.final_state.x;
    label.final_d = traj.final_state.d;
    label.thresholds = t;
    if (traj.final_state.x < t.delta0) {
        label.label = Outcome::ToZero;
    } else if (traj.final_state.d < t.delta1) {
        label.label = Outcome::ToOne;
    } else {
        label.label = Outcome::Undecided;
    }
    return label;
}

ExponentFit fit_exponent(const Trajectory& traj, FitTarget target, FitDomain domain,
                         IndexWindow window) {
    std::vector<double> ts;
    std::vector<double> ys;
    for (const Checkpoint& c : traj.checkpoints) {
        if (c.n < std::max<std::uint64_t>(window.lo, 1) || c.n > window.hi) continue;
        const double dist = target == FitTarget::DistanceToOne ? c.d : c.x;
        if (!(dist > 0.0)) {
            throw DistanceNotPositive("fit_exponent: distance is zero at n = " +
                                      std::to_string(c.n) + "; shrink the window");
        }
        ts.push_back(domain == FitDomain::LogN ? std::log(static_cast<double>(c.n))
                                               : c.big_gamma);
        ys.push_back(std::log(dist));
    }
    if (ts.size() < 8) {
        throw std::invalid_argument("fit_exponent: window holds fewer than 8 checkpoints");
    }
    if (domain == FitDomain::LogN) {
        // requested window must span a decade; the realized checkpoint span
        // may fall a grid step short of it
        if (static_cast<double>(window.hi) <
            10.0 * static_cast<double>(std::max<std::uint64_t>(window.lo, 1)) * (1.0 - 1e-12)) {
            throw std::invalid_argument("fit_exponent: window must span at least one decade in n");
        }
    } else if (ts.back() - ts.front() < 2.0 * 0.95) {
        throw std::invalid_argument("fit_exponent: window must span at least 2.0 in Gamma");
    }

    const std::size_t m = ts.size();
    double t_mean = 0.0;
    double y_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        t_mean += ts[i];
        y_mean += ys[i];
    }
    t_mean /= static_cast<double>(m);
    y_mean /= static_cast<double>(m);
    double stt = 0.0;
    double sty = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        stt += (ts[i] - t_mean) * (ts[i] - t_mean);
        sty += (ts[i] - t_mean) * (ys[i] - y_mean);
    }
    const double slope = sty / stt;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ys[i] - y_mean - slope * (ts[i] - t_mean);
        ssr += r * r;
    }
    ExponentFit fit;
    fit.beta_hat = -slope;
    fit.stderr_ = std::sqrt(ssr / static_cast<double>(m - 2) / stt);
    fit.domain = domain;
    fit.window_lo = window.lo;
    fit.window_hi = window.hi;
    fit.n_points = m;
    return fit;
}

TailMatch verify_tail_product(const Trajectory& traj, const BanditParams& p, TailSide side) {
    require_same_params(traj, p, "verify_tail_product");
    if (traj.branches.size() != traj.horizon) {
        throw std::invalid_argument("verify_tail_product: full branch log required");
    }
    const Branch opposing = side == TailSide::ZeroSide ? Branch::RewardA : Branch::PenaltyB;
    const Branch shrinking = side == TailSide::ZeroSide ? Branch::PenaltyB : Branch::RewardA;

    // A path absorbed at the opposite boundary has no tail on this side (the
    // opposing branch only stopped because the state saturated).
    if ((side == TailSide::ZeroSide && traj.final_state.d == 0.0) ||
        (side == TailSide::OneSide && traj.final_state.x == 0.0)) {
        throw NoTailFound("verify_tail_product: trajectory absorbed at the opposite boundary");
    }

    std::uint64_t n0 = 0;
    for (std::uint64_t n = traj.horizon; n >= 1; --n) {
        if (traj.branches[n - 1] == opposing) {
            n0 = n;
            break;
        }
    }
    // The pure tail must cover at least 8 steps (the whole path minus one
    // step on very short horizons), otherwise the run is not in its terminal
    // phase and there is nothing to verify.
    const std::uint64_t need = std::min<std::uint64_t>(8, traj.horizon - 1);
    if (traj.horizon - n0 < need) {
        throw NoTailFound("verify_tail_product: opposing branch persists into the final steps");
    }

    auto dist_of = [side](const Checkpoint& c) {
        return side == TailSide::ZeroSide ? c.x : c.d;
    };

    // Anchor on the first positive-distance value past n0 (the initial value
    // when n0 = 0) and check every later checkpoint against the product
    // replayed from the branch log.
    TailMatch match;
    match.n0 = n0;
    bool have_anchor = n0 == 0;
    double anchor_dist = side == TailSide::ZeroSide ? traj.x0 : 1.0 - traj.x0;
    std::uint64_t replay_n = 0;  // product currently covers (anchor, replay_n]
    double log_prod = 0.0;

    for (const Checkpoint& c : traj.checkpoints) {
        if (c.n <= n0) continue;
        const double dist = dist_of(c);
        if (!have_anchor) {
            if (dist >= std::numeric_limits<double>::min()) {
                anchor_dist = dist;
                replay_n = c.n;
                have_anchor = true;
            }
            continue;
        }
        while (replay_n < c.n) {
            ++replay_n;
            if (traj.branches[replay_n - 1] == shrinking) {
                log_prod += std::log1p(-gamma_at(traj.schedule, replay_n));
            }
        }
        // skip absorbed and subnormal checkpoints: below DBL_MIN the
        // multiplicative update saturates and no longer tracks the product
        if (!(dist >= std::numeric_limits<double>::min())) continue;
        // compare in log domain: the replayed product spans hundreds of
        // decades on deep decays and would underflow linear arithmetic
        const double pred_log = std::log(anchor_dist) + log_prod;
        const double dev = std::abs(std::expm1(pred_log - std::log(dist)));
        match.max_rel_dev = std::max(match.max_rel_dev, dev);
        ++match.points_checked;
    }
    if (!have_anchor || match.points_checked == 0) {
        throw NoTailFound("verify_tail_product: no positive-distance checkpoint past n0");
    }
    return match;
}

namespace {

struct BranchCase {
    double prob;
    StepOutcome out;
};

// Drives lri_step through one representative (u, v) per probability region.
std::vector<BranchCase> enumerate_cases(double x, double gamma, const BanditParams& p) {
    const StatePair s{x, 1.0 - x};
    std::vector<BranchCase> cases;
    const double u_low = x * 0.5;
    const double u_high = x + (1.0 - x) * 0.5;
    cases.push_back({x * p.pa, lri_step(s, gamma, u_low, p.pa * 0.5, p)});
    cases.push_back({(1.0 - x) * p.pb, lri_step(s, gamma, u_high, p.pb * 0.5, p)});
    cases.push_back({x * (1.0 - p.pa), lri_step(s, gamma, u_low, p.pa + (1.0 - p.pa) * 0.5, p)});
    cases.push_back(
        {(1.0 - x) * (1.0 - p.pb), lri_step(s, gamma, u_high, p.pb + (1.0 - p.pb) * 0.5, p)});
    return cases;
}

struct GridCheck {
    double worst_mean = 0.0, worst_drift = 0.0, worst_var = 0.0, worst_env = 0.0;
    double at_mean = 0.0, at_drift = 0.0, at_var = 0.0, at_env = 0.0;

    void visit(double x, double gamma, const BanditParams& p) {
        const auto cases = enumerate_cases(x, gamma, p);
        double mean_dm = 0.0, drift = 0.0, var = 0.0;
        for (const auto& c : cases) {
            mean_dm += c.prob * c.out.delta_m;
            drift += c.prob * (c.out.next.x - x);
            var += c.prob * c.out.delta_m * c.out.delta_m;
        }
        const double xd = x * (1.0 - x);
        const double closed = xd * (p.pa * (1.0 - x) + p.pb * x - p.pi * p.pi * xd);
        const double lo = p.pb * xd;
        const double hi = p.pa * xd;

        auto track = [x](double dev, double& worst, double& at) {
            if (dev > worst) {
                worst = dev;
                at = x;
            }
        };
        track(std::abs(mean_dm), worst_mean, at_mean);
        track(std::abs(drift - gamma * p.pi * xd), worst_drift, at_drift);
        track(std::abs(var - closed), worst_var, at_var);
        track(std::max(lo - var, var - hi), worst_env, at_env);
    }

    void emit(std::vector<CheckResult>& checks, double tol) const {
        auto loc = [](double x) { return "x = " + std::to_string(x); };
        checks.push_back({"conditional_mean_dm_zero", worst_mean <= tol, worst_mean, loc(at_mean)});
        checks.push_back(
            {"conditional_drift_identity", worst_drift <= tol, worst_drift, loc(at_drift)});
        checks.push_back(
            {"conditional_variance_closed_form", worst_var <= tol, worst_var, loc(at_var)});
        checks.push_back(
            {"conditional_variance_envelope", worst_env <= tol, worst_env, loc(at_env)});
    }
};

constexpr double kEnumTol = 1e-12;

}  // namespace

bool DiagnosticsReport::all_pass() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

std::string DiagnosticsReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["qv_ratio"] = qv_ratio;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        j["checks"].push_back({{"check", c.name},
                               {"status", c.pass ? "pass" : "fail"},
                               {"worst_deviation", c.worst},
                               {"location", c.location}});
    }
    return j.dump(2);
}

DiagnosticsReport martingale_diagnostics(const BanditParams& p, const std::vector<double>& x_grid,
                                         double gamma) {
    DiagnosticsReport report;
    GridCheck grid;
    for (double x : x_grid) grid.visit(x, gamma, p);
    grid.emit(report.checks, kEnumTol);
    return report;
}

DiagnosticsReport martingale_diagnostics(const Trajectory& traj, const BanditParams& p) {
    require_same_params(traj, p, "martingale_diagnostics");
    DiagnosticsReport report;
    GridCheck grid;
    double worst_track = 0.0;
    double at_track = 0.0;
    for (const Checkpoint& c : traj.checkpoints) {
        grid.visit(c.x, c.n == 0 ? 0.5 : c.gamma, p);
        const double dev = std::abs(c.x + c.d - 1.0);
        if (dev > worst_track) {
            worst_track = dev;
            at_track = static_cast<double>(c.n);
        }
    }
    grid.emit(report.checks, kEnumTol);
    report.checks.push_back({"dual_track_consistency", worst_track <= 1e-12, worst_track,
                             "n = " + std::to_string(static_cast<std::uint64_t>(at_track))});
    const Checkpoint& last = traj.checkpoints.back();
    report.qv_ratio = last.sum_cond_var > 0.0 ? last.sum_dm2 / last.sum_cond_var
                                              : (last.sum_dm2 == 0.0 ? 1.0 : kNaN);
    return report;
}

RateMode detect_rate_mode(const ExponentFit& fit, const RegimeReport& regime) {
    const RateDescriptor* slow = nullptr;
    const RateDescriptor* fast = nullptr;
    for (const auto& r : regime.rates_to_one) {
        if (r.domain != fit.domain) continue;
        if (r.kind == RateKind::Slow) slow = &r;
        if (r.kind == RateKind::Fast) fast = &r;
    }
    if (regime.coexistence && slow && fast) {
        const double mid = 0.5 * (slow->exponent + fast->exponent);
        if (std::abs(fit.beta_hat - mid) <= fit.stderr_) return RateMode::Undecided;
        return fit.beta_hat > mid ? RateMode::Fast : RateMode::Slow;
    }
    const RateDescriptor* only = slow ? slow : fast;
    if (only && regime.rates_to_one.size() == 1) {
        if (std::abs(fit.beta_hat - only->exponent) <= 3.0 * fit.stderr_) {
            return only->kind == RateKind::Fast ? RateMode::Fast : RateMode::Slow;
        }
    }
    return RateMode::Undecided;
}

}  // namespace banditlab
