#include "banditlab/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "banditlab/rng.hpp"

namespace banditlab {

const char* to_string(Branch b) {
    switch (b) {
        case Branch::RewardA: return "reward_a";
        case Branch::PenaltyB: return "penalty_b";
        default: return "none";
    }
}

StepOutcome lri_step(StatePair s, double gamma, double u, double v, const BanditParams& p) {
    StepOutcome out;
    if (s.x == 0.0 || s.d == 0.0) {
        out.branch = Branch::NoChange;
        out.delta_m = 0.0;
        out.next = s;
        return out;
    }
    const double drift = p.pi * s.x * s.d;
    if (u <= s.x && v <= p.pa) {
        out.branch = Branch::RewardA;
        out.next.x = s.x + gamma * s.d;
        out.next.d = s.d * (1.0 - gamma);
        out.delta_m = s.d - drift;
    } else if (u > s.x && v <= p.pb) {
        out.branch = Branch::PenaltyB;
        out.next.x = s.x * (1.0 - gamma);
        out.next.d = s.d + gamma * s.x;
        out.delta_m = -s.x - drift;
    } else {
        out.branch = Branch::NoChange;
        out.next = s;
        out.delta_m = -drift;
    }
    return out;
}

std::vector<std::uint64_t> checkpoint_grid(std::uint64_t horizon, std::size_t min_points) {
    std::vector<std::uint64_t> pts;
    if (min_points < 2) min_points = 2;
    if (horizon <= min_points) {
        pts.reserve(static_cast<std::size_t>(horizon) + 1);
        for (std::uint64_t n = 0; n <= horizon; ++n) pts.push_back(n);
        return pts;
    }
    // Geometric grid 1..horizon; rounding collapses the dense low end, so
    // inflate the slot count until at least min_points survive.
    std::size_t slots = min_points;
    for (;;) {
        pts.assign(1, 0);
        const double step = std::log(static_cast<double>(horizon)) /
                            static_cast<double>(slots - 1);
        for (std::size_t i = 0; i < slots; ++i) {
            const auto n = static_cast<std::uint64_t>(
                std::llround(std::exp(step * static_cast<double>(i))));
            if (n > pts.back() && n <= horizon) pts.push_back(n);
        }
        if (pts.back() != horizon) pts.push_back(horizon);
        const std::size_t have = pts.size() - 1;  // recorded steps beyond n=0
        if (have >= min_points || slots > 16 * min_points) return pts;
        slots += min_points - have;
    }
}

Trajectory simulate(const BanditParams& p, const StepSchedule& s, double x0,
                    std::uint64_t horizon, std::uint64_t master_seed,
                    std::uint64_t replicate, const RecordingPlan& plan) {
    if (!(x0 > 0.0 && x0 < 1.0)) {
        throw std::invalid_argument("simulate: x0 must lie in the open interval (0,1)");
    }
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");

    Trajectory traj;
    traj.params = p;
    traj.schedule = s;
    traj.x0 = x0;
    traj.horizon = horizon;
    traj.master_seed = master_seed;
    traj.replicate = replicate;

    const auto grid = checkpoint_grid(horizon, plan.checkpoints);
    traj.checkpoints.reserve(grid.size());
    if (plan.record_branches) traj.branches.reserve(horizon);

    const UniformStream stream(master_seed, replicate);

    StatePair state{x0, 1.0 - x0};
    double big_gamma = 0.0;
    double sum_d = 0.0;
    double sum_dm2 = 0.0;
    double sum_cond_var = 0.0;
    // theta is accumulated as a linear chunk folded into a log base whenever
    // it gets small; exp(pi*Gamma_n) underflows the product itself long
    // before the horizon on constant schedules.
    double log_theta = 0.0;
    double theta_chunk = 1.0;

    std::size_t gi = 0;
    if (!grid.empty() && grid[0] == 0) {
        Checkpoint c;
        c.x = state.x;
        c.d = state.d;
        traj.checkpoints.push_back(c);
        gi = 1;
    }

    for (std::uint64_t n = 1; n <= horizon; ++n) {
        const double gamma = gamma_at(s, n);
        const double u = stream.uniform(2 * (n - 1));
        const double v = stream.uniform(2 * (n - 1) + 1);

        theta_chunk *= 1.0 - gamma * p.pi * state.x;
        if (theta_chunk < 1e-280) {
            log_theta += std::log(theta_chunk);
            theta_chunk = 1.0;
        }

        const double xd = state.x * state.d;
        sum_cond_var += xd * (p.pa * state.d + p.pb * state.x - p.pi * p.pi * xd);

        const StepOutcome out = lri_step(state, gamma, u, v, p);
        state = out.next;

        big_gamma += gamma;
        sum_d += state.d;
        sum_dm2 += out.delta_m * out.delta_m;
        if (plan.record_branches) traj.branches.push_back(out.branch);

        if (gi < grid.size() && grid[gi] == n) {
            Checkpoint c;
            c.n = n;
            c.gamma = gamma;
            c.x = state.x;
            c.d = state.d;
            c.branch = out.branch;
            c.delta_m = out.delta_m;
            c.big_gamma = big_gamma;
            c.log_theta = log_theta + std::log(theta_chunk);
            c.sum_d = sum_d;
            c.sum_dm2 = sum_dm2;
            c.sum_cond_var = sum_cond_var;
            traj.checkpoints.push_back(c);
            ++gi;
        }
    }
    traj.final_state = state;
    return traj;
}

std::vector<double> mean_recursion(const BanditParams& p, const StepSchedule& s, double x0,
                                   std::uint64_t horizon) {
    if (!(x0 >= 0.0 && x0 <= 1.0)) {
        throw std::invalid_argument("mean_recursion: x0 must lie in [0,1]");
    }
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(horizon) + 1);
    double x = x0;
    double d = 1.0 - x0;
    xs.push_back(x);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        const double g = gamma_at(s, n);
        const double incr = g * p.pi * x * d;
        const double factor = 1.0 - g * p.pi * x;  // pre-step x
        x += incr;
        d *= factor;
        xs.push_back(x);
    }
    return xs;
}

double ode_solution(double pi, double x0, double t) {
    if (!(x0 >= 0.0 && x0 <= 1.0)) {
        throw std::invalid_argument("ode_solution: x0 must lie in [0,1]");
    }
    if (!(t >= 0.0)) throw std::invalid_argument("ode_solution: t must be >= 0");
    if (x0 == 0.0 || x0 == 1.0) return x0;
    return x0 / (x0 + (1.0 - x0) * std::exp(-pi * t));
}

}  // namespace banditlab
