#include "banditlab/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "banditlab/format.hpp"
#include "json.hpp"

namespace banditlab {

namespace {

constexpr double kWilsonZ = 1.959964;
constexpr std::size_t kHistogramBins = 24;
constexpr std::size_t kMinBimodalSamples = 20;

FitDomain default_fit_domain(const StepSchedule& s) {
    if (s.family == ScheduleFamily::Power && s.alpha == 1.0) return FitDomain::LogN;
    if (s.family == ScheduleFamily::Power) return FitDomain::GammaDomain;
    return FitDomain::GammaDomain;
}

struct ReplicateResult {
    ReplicateRecord record;
    std::vector<double> xs;  // x at each checkpoint of the shared grid
};

}  // namespace

void ExperimentConfig::validate() const {
    if (replicates < 1) throw std::invalid_argument("experiment: requires replicates >= 1");
    if (horizon < 100) throw std::invalid_argument("experiment: requires horizon >= 100");
    if (!(x0 > 0.0 && x0 < 1.0)) {
        throw std::invalid_argument("experiment: x0 must lie in the open interval (0,1)");
    }
    if (workers < 1) throw std::invalid_argument("experiment: requires workers >= 1");
    if (!(thresholds.delta0 > 0.0 && thresholds.delta0 < 0.1 && thresholds.delta1 > 0.0 &&
          thresholds.delta1 < 0.1)) {
        throw std::invalid_argument("experiment: thresholds must lie in (0, 0.1)");
    }
    gamma_at(schedule, 1);  // fail fast on schedules invalid from the start
}

ProbabilityEstimate estimate_probability(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw ZeroTrials("estimate_probability: trials must be >= 1");
    if (successes > trials) {
        throw std::invalid_argument("estimate_probability: successes exceed trials");
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    ProbabilityEstimate est;
    est.p_hat = p;
    est.lower = std::max(0.0, center - half);
    est.upper = std::min(1.0, center + half);
    return est;
}

ExponentHistogram exponent_histogram(const std::vector<double>& samples,
                                     std::optional<std::pair<double, double>> expected) {
    if (samples.size() < kMinBimodalSamples) {
        throw InsufficientSamples("exponent_histogram: need >= 20 samples, have " +
                                  std::to_string(samples.size()));
    }
    ExponentHistogram out;
    out.samples = samples.size();

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    const double width = hi > lo ? (hi - lo) / static_cast<double>(kHistogramBins) : 1.0;
    out.bins.resize(kHistogramBins);
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
        out.bins[b].lo = lo + width * static_cast<double>(b);
        out.bins[b].hi = lo + width * static_cast<double>(b + 1);
    }
    for (double v : sorted) {
        auto b = hi > lo ? static_cast<std::size_t>((v - lo) / width) : 0;
        if (b >= kHistogramBins) b = kHistogramBins - 1;
        ++out.bins[b].count;
    }

    // Optimal 1-D two-cluster split: minimize within-cluster sum of squares
    // over all prefix/suffix partitions of the sorted samples.
    const std::size_t m = sorted.size();
    std::vector<double> pre_sum(m + 1, 0.0);
    std::vector<double> pre_sq(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        pre_sum[i + 1] = pre_sum[i] + sorted[i];
        pre_sq[i + 1] = pre_sq[i] + sorted[i] * sorted[i];
    }
    auto sse = [&](std::size_t a, std::size_t b) {  // [a, b)
        const double cnt = static_cast<double>(b - a);
        const double s = pre_sum[b] - pre_sum[a];
        const double sq = pre_sq[b] - pre_sq[a];
        return sq - s * s / cnt;
    };
    std::size_t best_k = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < m; ++k) {
        const double v = sse(0, k) + sse(k, m);
        if (v < best) {
            best = v;
            best_k = k;
        }
    }
    const double n1 = static_cast<double>(best_k);
    const double n2 = static_cast<double>(m - best_k);
    BimodalityReport& bi = out.bimodality;
    bi.mean_low = pre_sum[best_k] / n1;
    bi.mean_high = (pre_sum[m] - pre_sum[best_k]) / n2;
    bi.frac_low = n1 / static_cast<double>(m);
    bi.frac_high = n2 / static_cast<double>(m);
    bi.separation = bi.mean_high - bi.mean_low;
    const double dof = n1 + n2 - 2.0;
    bi.pooled_sd = dof > 0.0 ? std::sqrt((sse(0, best_k) + sse(best_k, m)) / dof) : 0.0;
    bi.bimodal = bi.separation > 3.0 * bi.pooled_sd && bi.frac_low >= 0.05 && bi.frac_high >= 0.05;
    if (expected) {
        bi.dev_low = std::abs(bi.mean_low - expected->first);
        bi.dev_high = std::abs(bi.mean_high - expected->second);
    }
    return out;
}

namespace {

ReplicateResult run_replicate(const ExperimentConfig& config, std::uint64_t r,
                              const std::vector<std::uint64_t>& grid,
                              const std::optional<RegimeReport>& regime, FitDomain domain) {
    ReplicateResult res;
    res.record.replicate = r;
    RecordingPlan plan;
    plan.checkpoints = config.checkpoints;
    plan.record_branches = config.verify_tails;

    Trajectory traj;
    try {
        traj = simulate(config.params, config.schedule, config.x0, config.horizon,
                        config.master_seed, r, plan);
    } catch (const std::exception& e) {
        res.record.failure = std::string("simulate: ") + e.what();
        res.xs.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
        return res;
    }

    res.xs.reserve(traj.checkpoints.size());
    for (const Checkpoint& c : traj.checkpoints) res.xs.push_back(c.x);

    const OutcomeLabel label = classify_outcome(traj, config.thresholds);
    res.record.outcome = label.label;
    res.record.final_x = label.final_x;
    res.record.final_d = label.final_d;

    auto note_failure = [&res](const std::string& what) {
        if (!res.record.failure.empty()) res.record.failure += "; ";
        res.record.failure += what;
    };

    if (label.label != Outcome::Undecided) {
        const FitTarget target = label.label == Outcome::ToOne ? FitTarget::DistanceToOne
                                                               : FitTarget::DistanceToZero;
        auto try_fit = [&](IndexWindow window) {
            const ExponentFit fit = fit_exponent(traj, target, domain, window);
            res.record.beta_hat = fit.beta_hat;
            res.record.beta_stderr = fit.stderr_;
            if (regime && label.label == Outcome::ToOne) {
                res.record.mode = detect_rate_mode(fit, *regime);
            }
        };
        try {
            try_fit({std::max<std::uint64_t>(config.horizon / config.fit.window_divisor, 1),
                     config.horizon});
        } catch (const DistanceNotPositive&) {
            // absorbed inside the window: shrink to the positive prefix
            std::uint64_t last_pos = 0;
            for (const Checkpoint& c : traj.checkpoints) {
                const double dist = target == FitTarget::DistanceToOne ? c.d : c.x;
                if (c.n >= 1 && dist > 0.0) last_pos = c.n;
            }
            try {
                try_fit({std::max<std::uint64_t>(last_pos / config.fit.window_divisor, 1),
                         last_pos});
            } catch (const std::exception& e) {
                note_failure(std::string("fit: ") + e.what());
            }
        } catch (const std::exception& e) {
            note_failure(std::string("fit: ") + e.what());
        }

        if (config.verify_tails) {
            try {
                const TailMatch match = verify_tail_product(
                    traj, config.params,
                    label.label == Outcome::ToZero ? TailSide::ZeroSide : TailSide::OneSide);
                res.record.tail_dev = match.max_rel_dev;
            } catch (const NoTailFound& e) {
                note_failure(std::string("tail: ") + e.what());
            }
        }
    }

    if (label.label == Outcome::ToOne) {
        // share of the error-series sum accumulated in the last decade
        const Checkpoint& last = traj.checkpoints.back();
        double sum_low = 0.0;
        const std::uint64_t cut = config.horizon / 10;
        for (const Checkpoint& c : traj.checkpoints) {
            if (c.n >= cut) {
                sum_low = c.sum_d;
                break;
            }
        }
        if (last.sum_d > 0.0) {
            res.record.tail_sum_frac = (last.sum_d - sum_low) / last.sum_d;
        }
    }
    return res;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    std::optional<RegimeReport> regime;
    if (config.schedule.family == ScheduleFamily::Power) {
        regime = classify_power_family(config.schedule.alpha, config.schedule.power_c,
                                       config.params);
    } else {
        regime = classify_schedule(config.schedule, config.params, config.series_budget);
    }
    const FitDomain domain = config.fit.domain.value_or(default_fit_domain(config.schedule));
    const auto grid = checkpoint_grid(config.horizon, config.checkpoints);

    std::vector<ReplicateResult> results(config.replicates);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(config.workers, config.replicates));
    if (workers <= 1) {
        for (std::uint64_t r = 0; r < config.replicates; ++r) {
            results[r] = run_replicate(config, r, grid, regime, domain);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::uint64_t r = w; r < config.replicates; r += workers) {
                    results[r] = run_replicate(config, r, grid, regime, domain);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    ExperimentSummary summary;
    summary.regime = std::move(regime);
    summary.replicates.reserve(config.replicates);

    // Aggregation in replicate order: bit-identical regardless of workers.
    std::vector<double> sum_x(grid.size(), 0.0);
    std::vector<double> sum_x2(grid.size(), 0.0);
    std::uint64_t valid_runs = 0;
    for (std::uint64_t r = 0; r < config.replicates; ++r) {
        const ReplicateResult& res = results[r];
        switch (res.record.outcome) {
            case Outcome::ToZero: ++summary.to_zero; break;
            case Outcome::ToOne: ++summary.to_one; break;
            default: ++summary.undecided; break;
        }
        if (!res.record.failure.empty()) ++summary.failures;
        if (res.record.beta_hat) {
            if (res.record.outcome == Outcome::ToOne) {
                summary.exponents_to_one.push_back(*res.record.beta_hat);
            } else if (res.record.outcome == Outcome::ToZero) {
                summary.exponents_to_zero.push_back(*res.record.beta_hat);
            }
        }
        if (res.xs.size() == grid.size() && !std::isnan(res.xs[0])) {
            ++valid_runs;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                sum_x[k] += res.xs[k];
                sum_x2[k] += res.xs[k] * res.xs[k];
            }
        }
        summary.replicates.push_back(res.record);
    }

    summary.p_zero = estimate_probability(summary.to_zero, config.replicates);
    summary.p_one = estimate_probability(summary.to_one, config.replicates);

    if (summary.exponents_to_one.size() >= kMinBimodalSamples) {
        std::optional<std::pair<double, double>> expected;
        if (summary.regime) {
            const RateDescriptor* slow = nullptr;
            const RateDescriptor* fast = nullptr;
            for (const auto& rd : summary.regime->rates_to_one) {
                if (rd.domain != domain) continue;
                (rd.kind == RateKind::Slow ? slow : fast) = &rd;
            }
            if (slow && fast) expected = std::make_pair(slow->exponent, fast->exponent);
        }
        summary.histogram_to_one = exponent_histogram(summary.exponents_to_one, expected);
    }

    const std::vector<double> mean_path =
        mean_recursion(config.params, config.schedule, config.x0, config.horizon);
    summary.checkpoint_stats.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CheckpointStat st;
        st.n = grid[k];
        if (valid_runs > 0) {
            const double n = static_cast<double>(valid_runs);
            st.mean_x = sum_x[k] / n;
            const double var = std::max(0.0, sum_x2[k] / n - st.mean_x * st.mean_x);
            st.se_x = valid_runs > 1 ? std::sqrt(var / n) : 0.0;
        }
        st.mean_recursion_x = mean_path[static_cast<std::size_t>(grid[k])];
        summary.checkpoint_stats.push_back(st);
    }

    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.workers_used = workers;
    return summary;
}

namespace {

nlohmann::json histogram_json(const ExponentHistogram& h) {
    nlohmann::json j;
    j["samples"] = h.samples;
    j["bins"] = nlohmann::json::array();
    for (const auto& b : h.bins) {
        j["bins"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    }
    const BimodalityReport& bi = h.bimodality;
    j["bimodality"] = {{"bimodal", bi.bimodal},
                       {"mean_low", bi.mean_low},
                       {"mean_high", bi.mean_high},
                       {"frac_low", bi.frac_low},
                       {"frac_high", bi.frac_high},
                       {"pooled_sd", bi.pooled_sd},
                       {"separation", bi.separation},
                       {"note", "separation/mass detector, not a statistical test"}};
    if (bi.dev_low) j["bimodality"]["dev_low"] = *bi.dev_low;
    if (bi.dev_high) j["bimodality"]["dev_high"] = *bi.dev_high;
    return j;
}

double median_sorted(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

nlohmann::json exponent_stats_json(const std::vector<double>& samples) {
    nlohmann::json j;
    j["count"] = samples.size();
    if (!samples.empty()) {
        j["median"] = median_sorted(samples);
        j["min"] = *std::min_element(samples.begin(), samples.end());
        j["max"] = *std::max_element(samples.begin(), samples.end());
    }
    return j;
}

}  // namespace

std::string ExperimentSummary::to_json(const ExperimentConfig& config) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config"] = {{"pa", config.params.pa},
                   {"pb", config.params.pb},
                   {"pi", config.params.pi},
                   {"schedule", config.schedule.describe()},
                   {"x0", config.x0},
                   {"horizon", config.horizon},
                   {"replicates", config.replicates},
                   {"master_seed", config.master_seed},
                   {"delta0", config.thresholds.delta0},
                   {"delta1", config.thresholds.delta1},
                   {"verify_tails", config.verify_tails}};
    j["counts"] = {{"to_zero", to_zero}, {"to_one", to_one}, {"undecided", undecided}};
    j["failures"] = failures;
    j["p_zero"] = {{"estimate", p_zero.p_hat}, {"lower", p_zero.lower}, {"upper", p_zero.upper}};
    j["p_one"] = {{"estimate", p_one.p_hat}, {"lower", p_one.lower}, {"upper", p_one.upper}};
    j["exponents_to_one"] = exponent_stats_json(exponents_to_one);
    j["exponents_to_zero"] = exponent_stats_json(exponents_to_zero);
    if (histogram_to_one) {
        j["histogram_to_one"] = histogram_json(*histogram_to_one);
    } else {
        j["histogram_to_one"] = nullptr;
    }
    if (regime) {
        j["regime"] = nlohmann::json::parse(regime->to_json());
    } else {
        j["regime"] = nullptr;
    }
    j["checkpoint_stats"] = nlohmann::json::array();
    for (const auto& st : checkpoint_stats) {
        j["checkpoint_stats"].push_back({{"n", st.n},
                                         {"mean_x", st.mean_x},
                                         {"se_x", st.se_x},
                                         {"mean_recursion_x", st.mean_recursion_x}});
    }
    return j.dump(2);
}

std::string ExperimentSummary::replicates_csv() const {
    std::string out = "replicate,outcome,final_x,beta_hat,stderr,mode\n";
    for (const auto& r : replicates) {
        out += std::to_string(r.replicate);
        out += ',';
        out += to_string(r.outcome);
        out += ',';
        out += format_double(r.final_x);
        out += ',';
        if (r.beta_hat) out += format_double(*r.beta_hat);
        out += ',';
        if (r.beta_stderr) out += format_double(*r.beta_stderr);
        out += ',';
        out += to_string(r.mode);
        out += '\n';
    }
    return out;
}

}  // namespace banditlab
