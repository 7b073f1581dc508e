#include "jit/sampler.hpp"

#include <optional>

#include "jit/interp.hpp"
#include "jit/random.hpp"

namespace jit {

Grid sag_velocity(const VelocityField& field, const Grid& y, const IndexSet& set, double t) {
    detail::check_set_for(y.shape(), set);
    require(!set.empty(), ErrorKind::EmptyAnchor, "velocity needs at least one active token");
    const Block u = field.evaluate(gather(y, set), set, t);
    require(u.rows() == set.size() && u.cols() == y.channels(), ErrorKind::FieldContract,
            field.descriptor() + " returned " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                " for " + std::to_string(set.size()) + "x" + std::to_string(y.channels()));
    return lift(u, set, y.shape());
}

Grid euler_step(const Grid& y, const Grid& v, double dt) {
    require(y.shape() == v.shape(), ErrorKind::Dimension, "state and velocity differ in shape");
    require(dt > 0.0, ErrorKind::Parameter, "step size must be positive");
    return Grid(y.shape(), y.tokens() + v.tokens() * static_cast<float>(dt));
}

namespace {

std::string at_step(int i) { return " (step " + std::to_string(i) + ")"; }

} // namespace

RunReport run(const StageSchedule& schedule, const VelocityField& field, const GridShape& shape, std::uint64_t seed,
              const SamplerOptions& options) {
    require(shape.valid(), ErrorKind::Dimension, "invalid grid shape " + to_string(shape));
    require(schedule.n_steps() >= 1 && schedule.num_stages() >= 1, ErrorKind::Schedule, "empty schedule");
    options.cost.validate();
    require(options.trajectory_stride >= 0, ErrorKind::Parameter, "trajectory stride must be >= 0");

    const TokenIndex n = shape.tokens();
    const std::vector<TokenIndex> budgets = stage_budgets(schedule, n);
    const std::vector<double>& t = schedule.timesteps;

    RunReport report;
    report.schedule_name = schedule.name;
    report.field = field.descriptor();
    report.seed = seed;
    report.shape = shape;
    report.timesteps = t;
    report.baseline_steps = options.baseline_steps;

    Rng init_rng(seed, streams::initial_noise);
    Grid y = gaussian_grid(shape, init_rng);
    IndexSet active = initial_selector(shape.h_tok, shape.w_tok, budgets.front(), seed);
    report.chain.push_back(active);

    std::optional<Grid> shared_eps;
    if (options.shared_noise) {
        Rng eps_rng(seed, streams::shared_transition_noise);
        shared_eps = gaussian_grid(shape, eps_rng);
    }

    Grid prev_state(shape), prev_velocity(shape);
    int position = 0;
    for (int i = 0; i < schedule.n_steps(); ++i) {
        const bool boundary = position + 1 < schedule.num_stages() &&
                              schedule.transition_steps[static_cast<std::size_t>(position)] == i;
        if (boundary) {
            const int level = schedule.coarsest_level() - position;
            Grid fresh_eps(shape);
            if (!shared_eps) {
                Rng eps_rng(seed, streams::transition_base + static_cast<std::uint64_t>(level));
                fresh_eps = gaussian_grid(shape, eps_rng);
            }
            try {
                TransitionResult tr = apply_transition(
                    y, TransitionInputs{prev_state, prev_velocity, active, shared_eps ? *shared_eps : fresh_eps, i,
                                        options.importance_window},
                    schedule);
                y = std::move(tr.state);
                active = std::move(tr.next_set);
                report.transitions.push_back(std::move(tr.record));
            } catch (const Error& e) {
                fail(e.kind(), e.detail() + at_step(i));
            }
            report.chain.push_back(active);
            ++position;
        }

        if (options.trajectory_stride > 0 && i % options.trajectory_stride == 0) report.trajectory.push_back({i, y});

        const double dt = t[static_cast<std::size_t>(i) + 1] - t[static_cast<std::size_t>(i)];
        Grid v;
        try {
            v = sag_velocity(field, y, active, t[static_cast<std::size_t>(i)]);
        } catch (const Error& e) {
            fail(e.kind(), e.detail() + at_step(i));
        }
        require(v.all_finite(), ErrorKind::FieldContract, "non-finite velocity" + at_step(i));
        ++report.nfe;

        StepRecord rec;
        rec.step = i;
        rec.t = t[static_cast<std::size_t>(i)];
        rec.stage = schedule.coarsest_level() - position;
        rec.active = active.size();
        rec.cost = step_cost(static_cast<double>(active.size()), options.cost);
        report.total_cost += rec.cost;
        report.steps.push_back(rec);

        prev_state = y;
        y = euler_step(y, v, dt);
        prev_velocity = std::move(v);
        require(y.all_finite(), ErrorKind::Numerical, "non-finite state" + at_step(i));
    }
    if (options.trajectory_stride > 0 && schedule.n_steps() % options.trajectory_stride == 0)
        report.trajectory.push_back({schedule.n_steps(), y});

    report.endpoint = std::move(y);
    report.baseline_cost = options.baseline_steps * step_cost(static_cast<double>(n), options.cost);
    report.speedup = report.baseline_cost / report.total_cost;
    return report;
}

} // namespace jit
