#include "jit/transition.hpp"

#include <algorithm>

#include "jit/interp.hpp"

namespace jit {

Grid predict_clean(const Grid& y, double t, const Grid& v) {
    require(t >= 0.0 && t < 1.0, ErrorKind::Parameter, "clean prediction needs t in [0, 1)");
    require(y.shape() == v.shape(), ErrorKind::Dimension, "state and velocity differ in shape");
    return Grid(y.shape(), y.tokens() + v.tokens() * static_cast<float>(1.0 - t));
}

Block dmf_target(const Grid& y_hat, const IndexSet& anchors, const IndexSet& ring, double T_k, const Grid& noise) {
    require(T_k >= 0.0 && T_k <= 1.0, ErrorKind::Parameter, "transition time outside [0, 1]");
    require(noise.shape() == y_hat.shape(), ErrorKind::Dimension, "noise and prediction differ in shape");
    require(ring.n_total() == anchors.n_total(), ErrorKind::Dimension, "ring and anchors over different grids");
    for (TokenIndex r : ring) {
        if (anchors.contains(r)) fail(ErrorKind::Nesting, "token " + std::to_string(r) + " is both anchor and ring");
    }

    const Grid prior = lift(gather(y_hat, anchors), anchors, y_hat.shape());
    const Block prior_ring = gather(prior, ring);
    const Block noise_ring = gather(noise, ring);
    const auto keep = static_cast<float>(T_k);
    const auto fresh = static_cast<float>(1.0 - T_k);
    return prior_ring * keep + noise_ring * fresh;
}

TransitionResult apply_transition(const Grid& state, const TransitionInputs& in, const StageSchedule& schedule) {
    const int i = in.step_index;
    const int position = schedule.stage_at_step(i) - 1; // stage being left
    require(position >= 0 && position + 1 < schedule.num_stages() &&
                schedule.transition_steps[static_cast<std::size_t>(position)] == i,
            ErrorKind::NoStage, "no stage transition at step " + std::to_string(i));
    require(i >= 1 && i <= schedule.n_steps(), ErrorKind::Schedule, "transition step out of range");
    require(state.shape() == in.prev_state.shape() && state.shape() == in.prev_velocity.shape() &&
                state.shape() == in.noise.shape(),
            ErrorKind::Dimension, "transition grids differ in shape");

    const TokenIndex n = state.size();
    const std::vector<TokenIndex> budgets = stage_budgets(schedule, n);
    const TokenIndex current = budgets[static_cast<std::size_t>(position)];
    const TokenIndex next = budgets[static_cast<std::size_t>(position) + 1];
    require(in.anchors.n_total() == n && in.anchors.size() == current, ErrorKind::Schedule,
            "anchor set has " + std::to_string(in.anchors.size()) + " tokens, stage budget is " +
                std::to_string(current));

    const double t_prev = schedule.timesteps[static_cast<std::size_t>(i) - 1];
    const double T_k = schedule.timesteps[static_cast<std::size_t>(i)];

    TransitionRecord record;
    record.step_index = i;
    record.stage_from = schedule.coarsest_level() - position;
    record.stage_to = record.stage_from - 1;
    record.T_k = T_k;
    record.importance = importance_map(in.prev_velocity, in.importance_window);
    record.activated = top_tokens(record.importance, complement(in.anchors), next - current);

    const Grid y_hat = predict_clean(in.prev_state, t_prev, in.prev_velocity);
    record.target_values = dmf_target(y_hat, in.anchors, record.activated, T_k, in.noise);

    TransitionResult result{state, set_union(in.anchors, record.activated), {}};
    for (TokenIndex j = 0; j < record.activated.size(); ++j)
        result.state.token(record.activated[j]) = record.target_values.row(j);
    result.record = std::move(record);
    return result;
}

} // namespace jit
