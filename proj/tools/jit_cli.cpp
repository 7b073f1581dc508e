#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

#include "jit/io.hpp"
#include "selftest.hpp"

namespace {

using namespace jit;
namespace fs = std::filesystem;

io::RunConfig load_config(const std::string& path) {
    io::ParsedConfig parsed = io::read_config(path);
    for (const std::string& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    return parsed.config;
}

int cmd_sample(const std::string& config_path, std::string out_grid, std::string out_report, std::string dump_importance,
               std::string metrics) {
    const io::RunConfig cfg = load_config(config_path);
    if (out_grid.empty()) out_grid = cfg.dump.grid;
    if (out_report.empty()) out_report = cfg.dump.report;
    if (dump_importance.empty()) dump_importance = cfg.dump.importance;
    if (metrics.empty()) metrics = cfg.dump.metrics;

    const StageSchedule schedule = io::resolve_schedule(cfg);
    const auto field = io::make_field(cfg);
    const RunReport report = run(schedule, *field, cfg.shape, cfg.seed, io::sampler_options(cfg));

    if (!out_grid.empty()) io::write_grid(out_grid, report.endpoint);
    if (!out_report.empty()) io::write_report(out_report, report);
    if (!metrics.empty()) io::write_file_atomic(metrics, io::metrics_csv(report));
    if (!dump_importance.empty()) {
        for (const TransitionRecord& tr : report.transitions) {
            char name[48];
            std::snprintf(name, sizeof name, "importance_step%03d.pgm", tr.step_index);
            io::write_pgm(fs::path(dump_importance) / name, tr.importance);
        }
    }
    if (!cfg.dump.trajectory.empty()) {
        for (const TrajectorySnapshot& snap : report.trajectory) {
            char name[48];
            std::snprintf(name, sizeof name, "state_step%03d.jitg", snap.step);
            io::write_grid(fs::path(cfg.dump.trajectory) / name, snap.state);
        }
    }
    std::printf("schedule=%s nfe=%d transitions=%zu total_cost=%.9g speedup=%.9g\n", report.schedule_name.c_str(),
                report.nfe, report.transitions.size(), report.total_cost, report.speedup);
    return 0;
}

int cmd_schedule(const std::string& preset, const std::string& config_path, long long tokens, bool invert) {
    StageSchedule schedule;
    std::optional<TokenIndex> n;
    if (!config_path.empty()) {
        const io::RunConfig cfg = load_config(config_path);
        schedule = io::resolve_schedule(cfg);
        n = cfg.shape.tokens();
    } else {
        schedule = preset_schedule(preset, invert);
    }
    if (tokens > 0) n = static_cast<TokenIndex>(tokens);
    std::cout << io::schedule_csv(schedule, n);
    return 0;
}

int cmd_bench_cost(const std::string& config_path, const std::string& preset, bool calibrate, long long tokens) {
    CostModel model;
    StageSchedule schedule;
    TokenIndex n = tokens > 0 ? static_cast<TokenIndex>(tokens) : 4096;
    int baseline_steps = 50;
    if (!config_path.empty()) {
        const io::RunConfig cfg = load_config(config_path);
        schedule = io::resolve_schedule(cfg);
        model = cfg.cost;
        baseline_steps = cfg.baseline_steps;
        if (tokens <= 0) n = cfg.shape.tokens();
    } else {
        schedule = preset_schedule(preset);
    }

    if (calibrate) {
        const std::vector<SpeedupTarget> targets{{preset_schedule("jit4x"), 4.24}, {preset_schedule("jit7x"), 7.07}};
        const CalibrationResult fit = calibrate_attention_share(targets, n, baseline_steps);
        std::cout << "alpha,schedule,target_speedup,predicted_speedup,relative_error\n";
        for (std::size_t j = 0; j < targets.size(); ++j)
            std::printf("%.9g,%s,%.9g,%.9g,%.9g\n", fit.alpha, targets[j].schedule.name.c_str(), targets[j].speedup,
                        fit.predicted[j], fit.relative_error[j]);
        return 0;
    }
    std::cout << io::cost_csv_header()
              << io::cost_csv_row(schedule.name, model, schedule_cost(schedule, n, model, baseline_steps));
    return 0;
}

int cmd_oracle_compare(const std::string& config_path, int fine_steps) {
    const io::RunConfig cfg = load_config(config_path);
    const StageSchedule schedule = io::resolve_schedule(cfg);
    const auto field = io::make_field(cfg);
    const RunReport report = run(schedule, *field, cfg.shape, cfg.seed, io::sampler_options(cfg));
    const Grid fine = reference_solve(*field, cfg.shape, cfg.seed, fine_steps);
    const Grid same_grid = reference_solve(*field, cfg.shape, cfg.seed, schedule.timesteps);

    std::printf("metric,value\n");
    std::printf("rel_l2_vs_fine_%d,%.9g\n", fine_steps, relative_l2_error(report.endpoint, fine));
    std::printf("rel_l2_vs_full_same_timesteps,%.9g\n", relative_l2_error(report.endpoint, same_grid));
    std::printf("rel_l2_full_same_timesteps_vs_fine,%.9g\n", relative_l2_error(same_grid, fine));
    std::printf("speedup,%.9g\n", report.speedup);

    std::map<int, std::pair<int, TokenIndex>> per_stage; // level -> steps, m_k
    std::map<int, double> stage_cost;
    for (const StepRecord& s : report.steps) {
        per_stage[s.stage].first += 1;
        per_stage[s.stage].second = s.active;
        stage_cost[s.stage] += s.cost;
    }
    std::printf("stage,steps,m_k,cost_share\n");
    for (auto it = per_stage.rbegin(); it != per_stage.rend(); ++it)
        std::printf("%d,%d,%lld,%.9g\n", it->first, it->second.first, static_cast<long long>(it->second.second),
                    stage_cost[it->first] / report.total_cost);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse anchor-token flow-matching sampler"};
    app.require_subcommand(1);

    std::string config, out_grid, out_report, dump_importance, metrics, preset = "jit4x";
    long long tokens = 0;
    bool calibrate = false, invert = false;
    int fine_steps = 2000;

    auto* sample = app.add_subcommand("sample", "Run the sampler and write endpoint, report and snapshots");
    sample->add_option("--config", config, "Run configuration (JSON)")->required();
    sample->add_option("--out-grid", out_grid, "Endpoint grid (JITG)");
    sample->add_option("--out-report", out_report, "Run report (JSON)");
    sample->add_option("--dump-importance", dump_importance, "Directory for importance heatmaps (PGM)");
    sample->add_option("--metrics", metrics, "Per-step metrics (CSV)");

    auto* schedule = app.add_subcommand("schedule", "Print a schedule's stage table and timesteps as CSV");
    auto* sched_preset = schedule->add_option("--preset", preset, "Preset name");
    auto* sched_config = schedule->add_option("--config", config, "Run configuration (JSON)");
    sched_preset->excludes(sched_config);
    schedule->add_option("--tokens", tokens, "Token count for the m_k column");
    schedule->add_flag("--invert-time", invert, "Mirror the timestep grid");

    auto* bench = app.add_subcommand("bench-cost", "Print schedule cost and speedup as CSV");
    auto* bench_config = bench->add_option("--config", config, "Run configuration (JSON)");
    bench->add_option("--preset", preset, "Preset name when no config is given")->excludes(bench_config);
    bench->add_flag("--calibrate", calibrate, "Fit the attention share to the 4.24x / 7.07x targets");
    bench->add_option("--tokens", tokens, "Token count N (default: config shape, else 4096)");

    auto* oracle = app.add_subcommand("oracle-compare", "Compare the sampler endpoint against full-token references");
    oracle->add_option("--config", config, "Run configuration (JSON)")->required();
    oracle->add_option("--fine-steps", fine_steps, "Uniform steps of the fine reference")->check(CLI::PositiveNumber);

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) return cmd_sample(config, out_grid, out_report, dump_importance, metrics);
        if (*schedule) return cmd_schedule(preset, config, tokens, invert);
        if (*bench) return cmd_bench_cost(config, preset, calibrate, tokens);
        if (*oracle) return cmd_oracle_compare(config, fine_steps);
        if (*selftest) return jit::tools::run_selftest(std::cout) ? 0 : 1;
    } catch (const jit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
