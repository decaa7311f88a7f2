#include "banditlab/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "banditlab/format.hpp"

namespace banditlab::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T parse_value(const std::string& raw, std::size_t lineno, const char* key) {
    std::istringstream is(raw);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) {
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": cannot parse '" +
                                    raw + "' as a value for key '" + key + "'");
    }
    return v;
}

bool parse_bool(const std::string& raw, std::size_t lineno, const char* key) {
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw std::invalid_argument("config line " + std::to_string(lineno) + ": key '" + key +
                                "' expects true/false");
}

}  // namespace

void apply_config_file(CliConfig& cfg, const std::string& content) {
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": key '" + key +
                                        "' has no value");
        }

        if (key == "pa") cfg.pa = parse_value<double>(value, lineno, "pa");
        else if (key == "pb") cfg.pb = parse_value<double>(value, lineno, "pb");
        else if (key == "schedule") cfg.schedule_spec = value;
        else if (key == "x0") cfg.x0 = parse_value<double>(value, lineno, "x0");
        else if (key == "horizon") cfg.horizon = parse_value<std::uint64_t>(value, lineno, "horizon");
        else if (key == "replicates")
            cfg.replicates = parse_value<std::uint64_t>(value, lineno, "replicates");
        else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(value, lineno, "seed");
        else if (key == "workers") cfg.workers = parse_value<unsigned>(value, lineno, "workers");
        else if (key == "out") cfg.out = value;
        else if (key == "json") cfg.json = parse_bool(value, lineno, "json");
        else if (key == "delta0") cfg.delta0 = parse_value<double>(value, lineno, "delta0");
        else if (key == "delta1") cfg.delta1 = parse_value<double>(value, lineno, "delta1");
        else if (key == "budget") cfg.budget = parse_value<std::uint64_t>(value, lineno, "budget");
        else if (key == "checkpoints")
            cfg.checkpoints = parse_value<std::size_t>(value, lineno, "checkpoints");
        else if (key == "tail_check") cfg.tail_check = parse_bool(value, lineno, "tail_check");
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
}

void validate_config(const CliConfig& cfg) {
    (void)cfg.params();    // throws "requires 0 < pb < pa < 1"
    (void)cfg.schedule();  // throws the schedule grammar/precondition message
    if (!(cfg.x0 > 0.0 && cfg.x0 < 1.0)) {
        throw std::invalid_argument("x0 must lie in the open interval (0,1)");
    }
}

CliConfig parse_config(const std::string& file_content) {
    CliConfig cfg;
    apply_config_file(cfg, file_content);
    validate_config(cfg);
    return cfg;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << content;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "n,gamma,x,d,branch,deltaM\n";
    for (const Checkpoint& c : traj.checkpoints) {
        out += std::to_string(c.n);
        out += ',';
        out += format_double(c.gamma);
        out += ',';
        out += format_double(c.x);
        out += ',';
        out += format_double(c.d);
        out += ',';
        out += to_string(c.branch);
        out += ',';
        out += format_double(c.delta_m);
        out += '\n';
    }
    return out;
}

std::string replicates_path(const std::string& summary_path) {
    const auto dot = summary_path.rfind('.');
    const std::string base =
        dot == std::string::npos ? summary_path : summary_path.substr(0, dot);
    return base + "_replicates.csv";
}

int cmd_classify(const CliConfig& cfg, std::ostream& out) {
    const BanditParams params = cfg.params();
    const StepSchedule sched = cfg.schedule();
    const RegimeReport report =
        sched.family == ScheduleFamily::Power
            ? classify_power_family(sched.alpha, sched.power_c, params)
            : classify_schedule(sched, params, cfg.budget);
    out << report.summary_line() << "\n";
    if (cfg.json) {
        if (cfg.out.empty()) {
            out << report.to_json() << "\n";
        } else {
            write_file(cfg.out, report.to_json() + "\n");
            out << "wrote " << cfg.out << "\n";
        }
    }
    return 0;
}

int cmd_simulate(const CliConfig& cfg, std::ostream& out) {
    RecordingPlan plan;
    plan.checkpoints = cfg.checkpoints;
    plan.record_branches = cfg.tail_check;
    const Trajectory traj =
        simulate(cfg.params(), cfg.schedule(), cfg.x0, cfg.horizon, cfg.seed, 0, plan);
    const std::string path = cfg.out.empty() ? "trajectory.csv" : cfg.out;
    write_file(path, trajectory_csv(traj));
    out << "wrote " << path << " (" << traj.checkpoints.size() << " checkpoints, final x = "
        << format_double(traj.final_state.x) << ")\n";
    return 0;
}

int cmd_experiment(const CliConfig& cfg, std::ostream& out) {
    ExperimentConfig ec;
    ec.params = cfg.params();
    ec.schedule = cfg.schedule();
    ec.x0 = cfg.x0;
    ec.horizon = cfg.horizon;
    ec.replicates = cfg.replicates;
    ec.master_seed = cfg.seed;
    ec.thresholds = OutcomeThresholds{cfg.delta0, cfg.delta1};
    ec.workers = cfg.workers;
    ec.checkpoints = cfg.checkpoints;
    ec.verify_tails = cfg.tail_check;
    ec.series_budget = cfg.budget;

    const ExperimentSummary summary = run_experiment(ec);
    const std::string path = cfg.out.empty() ? "experiment_summary.json" : cfg.out;
    write_file(path, summary.to_json(ec) + "\n");
    const std::string rep_path = replicates_path(path);
    write_file(rep_path, summary.replicates_csv());

    out << "replicates " << ec.replicates << ": to_zero " << summary.to_zero << ", to_one "
        << summary.to_one << ", undecided " << summary.undecided << ", failures "
        << summary.failures << "\n";
    out << "p_zero " << format_double(summary.p_zero.p_hat) << " [95%: "
        << format_double(summary.p_zero.lower) << ", " << format_double(summary.p_zero.upper)
        << "]\n";
    out << "wrote " << path << " and " << rep_path << " in "
        << format_double(summary.wall_seconds) << " s on " << summary.workers_used
        << " worker(s)\n";
    return 0;
}

int cmd_diagnose(const CliConfig& cfg, std::ostream& out) {
    const BanditParams params = cfg.params();
    const StepSchedule sched = cfg.schedule();

    std::vector<double> grid;
    for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
    DiagnosticsReport report = martingale_diagnostics(params, grid, gamma_at(sched, 1));

    RecordingPlan plan;
    plan.checkpoints = cfg.checkpoints;
    plan.record_branches = true;
    const Trajectory traj = simulate(params, sched, cfg.x0, cfg.horizon, cfg.seed, 0, plan);
    DiagnosticsReport traj_report = martingale_diagnostics(traj, params);
    for (auto& c : traj_report.checks) report.checks.push_back(std::move(c));
    report.qv_ratio = traj_report.qv_ratio;

    const OutcomeLabel label = classify_outcome(traj, OutcomeThresholds{cfg.delta0, cfg.delta1});
    if (label.label != Outcome::Undecided) {
        CheckResult tail;
        tail.name = "tail_product_identity";
        try {
            const TailMatch match = verify_tail_product(
                traj, params,
                label.label == Outcome::ToZero ? TailSide::ZeroSide : TailSide::OneSide);
            tail.pass = match.max_rel_dev <= 1e-9;
            tail.worst = match.max_rel_dev;
            tail.location = "n0 = " + std::to_string(match.n0);
        } catch (const NoTailFound& e) {
            tail.pass = true;  // not in the terminal phase; nothing to verify
            tail.location = e.what();
        }
        report.checks.push_back(std::move(tail));
    }

    for (const auto& c : report.checks) {
        out << (c.pass ? "[ok]  " : "[FAIL] ") << c.name << "  worst = " << format_double(c.worst)
            << (c.location.empty() ? "" : "  at " + c.location) << "\n";
    }
    out << "quadratic variation ratio (realized/conditional): " << format_double(report.qv_ratio)
        << "\n";
    if (cfg.json) {
        if (cfg.out.empty()) {
            out << report.to_json() << "\n";
        } else {
            write_file(cfg.out, report.to_json() + "\n");
            out << "wrote " << cfg.out << "\n";
        }
    }
    return report.all_pass() ? 0 : 2;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"two-armed bandit step-size laboratory"};
    app.require_subcommand(1);

    CliConfig cfg;
    std::string config_path;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--pa", cfg.pa, "success probability of arm A");
        sub->add_option("--pb", cfg.pb, "success probability of arm B");
        sub->add_option("--schedule", cfg.schedule_spec,
                        "constant:<g> | power:<C>,<C'>,<alpha> | custom:<path>");
        sub->add_option("--x0", cfg.x0, "initial share (default 0.5)");
        sub->add_option("--horizon", cfg.horizon, "number of steps N");
        sub->add_option("--replicates", cfg.replicates, "Monte Carlo replicates R");
        sub->add_option("--seed", cfg.seed, "master seed")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--workers", cfg.workers, "worker threads");
        sub->add_option("--out", cfg.out, "output path");
        sub->add_flag("--json", cfg.json, "emit JSON");
        sub->add_option("--delta0", cfg.delta0, "trap-side outcome threshold");
        sub->add_option("--delta1", cfg.delta1, "target-side outcome threshold");
        sub->add_option("--budget", cfg.budget, "series budget for numeric verdicts");
        sub->add_option("--checkpoints", cfg.checkpoints, "recorded states per trajectory");
        sub->add_flag("--tail-check", cfg.tail_check, "record branch logs, verify tail products");
    };

    CLI::App* classify = app.add_subcommand("classify", "regime report for a schedule");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "one trajectory to CSV");
    CLI::App* experiment = app.add_subcommand("experiment", "replicated experiment to JSON/CSV");
    CLI::App* diagnose = app.add_subcommand("diagnose", "martingale/tail/identity checks");
    for (CLI::App* sub : {classify, simulate_cmd, experiment, diagnose}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 1;
    }

    try {
        // Layering: file values fill in everything the flags did not set.
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::invalid_argument("cannot open config file '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            CliConfig file_cfg;
            apply_config_file(file_cfg, ss.str());
            CLI::App* sub = app.get_subcommands().front();
            auto keep_flag = [&](const std::string& name) {
                return sub->count(name) > 0;
            };
            if (!keep_flag("--pa") && file_cfg.pa != 0.0) cfg.pa = file_cfg.pa;
            if (!keep_flag("--pb") && file_cfg.pb != 0.0) cfg.pb = file_cfg.pb;
            if (!keep_flag("--schedule") && !file_cfg.schedule_spec.empty()) {
                cfg.schedule_spec = file_cfg.schedule_spec;
            }
            if (!keep_flag("--x0")) cfg.x0 = file_cfg.x0;
            if (!keep_flag("--horizon")) cfg.horizon = file_cfg.horizon;
            if (!keep_flag("--replicates")) cfg.replicates = file_cfg.replicates;
            if (!keep_flag("--seed") && file_cfg.seed != CliConfig{}.seed) {
                cfg.seed = file_cfg.seed;
                seed_given = true;
            }
            if (!keep_flag("--workers")) cfg.workers = file_cfg.workers;
            if (!keep_flag("--out") && !file_cfg.out.empty()) cfg.out = file_cfg.out;
            if (!keep_flag("--json")) cfg.json = file_cfg.json;
            if (!keep_flag("--delta0")) cfg.delta0 = file_cfg.delta0;
            if (!keep_flag("--delta1")) cfg.delta1 = file_cfg.delta1;
            if (!keep_flag("--budget")) cfg.budget = file_cfg.budget;
            if (!keep_flag("--checkpoints")) cfg.checkpoints = file_cfg.checkpoints;
            if (!keep_flag("--tail-check")) cfg.tail_check = file_cfg.tail_check;
        }
        if (!seed_given) {
            if (const char* env = std::getenv("BANDITLAB_SEED")) {
                try {
                    cfg.seed = std::stoull(env);
                } catch (const std::exception&) {
                    throw std::invalid_argument("BANDITLAB_SEED is not an unsigned integer");
                }
            }
        }
        validate_config(cfg);
    } catch (const std::invalid_argument& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (classify->parsed()) return cmd_classify(cfg, out);
        if (simulate_cmd->parsed()) return cmd_simulate(cfg, out);
        if (experiment->parsed()) return cmd_experiment(cfg, out);
        if (diagnose->parsed()) return cmd_diagnose(cfg, out);
        err << "no command given\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace banditlab::cli
