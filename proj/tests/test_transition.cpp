#include <doctest.h>

#include "jit/interp.hpp"
#include "jit/transition.hpp"
#include "oracles.hpp"

using namespace jit;

TEST_CASE("predict_clean") {
    const GridShape s{1, 1, 1};
    CHECK(predict_clean(Grid::Constant(s, 0.2f), 0.6, Grid::Constant(s, 1.0f)).at(0, 0, 0) ==
          doctest::Approx(0.6).epsilon(1e-6));
    CHECK(predict_clean(Grid::Constant(s, 0.7f), 0.3, Grid::Constant(s, 0.0f)).at(0, 0, 0) == 0.7f);
    CHECK(predict_clean(Grid::Constant(s, 0.5f), 0.0, Grid::Constant(s, 2.0f)).at(0, 0, 0) == 2.5f);
    try {
        predict_clean(Grid(s), 1.0, Grid(s));
        FAIL("expected parameter error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parameter);
    }
}

TEST_CASE("dmf_target endpoints and blend") {
    const GridShape s{1, 2, 1};
    Grid y_hat(s), noise(s);
    y_hat.at(0, 0, 0) = 0.8f;
    noise.at(0, 1, 0) = -0.4f;
    const IndexSet anchors(2, {0}), r(2, {1});
    // A single anchor lifts to a constant, so Phi(r) = 0.8.
    CHECK(dmf_target(y_hat, anchors, r, 1.0, noise)(0, 0) == doctest::Approx(0.8f));
    CHECK(dmf_target(y_hat, anchors, r, 0.0, noise)(0, 0) == doctest::Approx(-0.4f));
    CHECK(dmf_target(y_hat, anchors, r, 0.5, noise)(0, 0) == doctest::Approx(0.2).epsilon(1e-6));

    try {
        dmf_target(y_hat, anchors, IndexSet(2, {0, 1}), 0.5, noise);
        FAIL("expected nesting violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Nesting);
    }
}

TEST_CASE("hitting_flow closed form") {
    Eigen::VectorXd z0(3), target(3);
    z0 << 0.0, -1.0, 2.0;
    target << 1.0, 3.0, 2.0;
    const double T = 0.6, delta = 1e-2;
    CHECK(hitting_flow(z0, target, T, delta, T - delta) == z0);
    CHECK(hitting_flow(z0, target, T, delta, T) == target);
    CHECK(hitting_flow(z0, target, T, delta, T - delta / 2)(0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(hitting_flow(z0, target, T, delta, T + 1e-3), Error);
    CHECK_THROWS_AS(hitting_flow(z0, target, T, delta, T - 2 * delta), Error);

    // Finite-difference derivative matches (target - z) / (T - t).
    for (double frac : {0.1, 0.35, 0.5, 0.8}) {
        const double t = T - delta + frac * delta, h = 1e-7;
        const Eigen::VectorXd z = hitting_flow(z0, target, T, delta, t);
        const Eigen::VectorXd fd = (hitting_flow(z0, target, T, delta, t + h) - hitting_flow(z0, target, T, delta, t - h)) / (2 * h);
        const Eigen::VectorXd rhs = (target - z) / (T - t);
        CHECK((fd - rhs).cwiseAbs().maxCoeff() < 1e-4);
    }

    for (double frac : {0.25, 0.5, 0.9, 1.0}) {
        const double t = T - delta + frac * delta;
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double ref = oracle::hitting_ode_explicit(z0(j), target(j), T, delta, t, 10000);
            CHECK(std::abs(hitting_flow(z0, target, T, delta, t)(j) - ref) < 1e-4);
        }
    }
}

namespace {

struct Fixture {
    StageSchedule schedule = preset_schedule("jit4x");
    GridShape shape{8, 8, 2};
    Grid state, prev_state, prev_velocity, noise;
    IndexSet anchors;

    Fixture() {
        Rng rng(42);
        state = gaussian_grid(shape, rng);
        prev_state = gaussian_grid(shape, rng);
        prev_velocity = gaussian_grid(shape, rng);
        noise = gaussian_grid(shape, rng);
        anchors = initial_selector(8, 8, stage_budgets(schedule, 64).front(), 42);
    }
};

} // namespace

TEST_CASE("apply_transition at the first boundary") {
    Fixture f;
    const auto budgets = stage_budgets(f.schedule, 64);
    const TransitionResult r =
        apply_transition(f.state, TransitionInputs{f.prev_state, f.prev_velocity, f.anchors, f.noise, 7}, f.schedule);

    CHECK(gather(r.state, f.anchors) == gather(f.state, f.anchors));
    CHECK(r.next_set.size() == budgets[1]);
    CHECK(r.record.activated.size() == budgets[1] - budgets[0]);
    CHECK(r.next_set.includes(f.anchors));
    CHECK(validate_chain(std::vector<IndexSet>{f.anchors, r.next_set, IndexSet::full(64)}).ok);
    CHECK(r.record.stage_from == 2);
    CHECK(r.record.stage_to == 1);
    CHECK(r.record.T_k == f.schedule.timesteps[7]);

    // Untouched outside anchors and ring.
    const IndexSet rest = complement(r.next_set);
    CHECK(gather(r.state, rest) == gather(f.state, rest));

    // Ring is the top-variance inactive tokens.
    const ImportanceMap imp = importance_map(f.prev_velocity);
    CHECK(r.record.activated == top_tokens(imp, complement(f.anchors), budgets[1] - budgets[0]));

    // Written values equal the target built from y_hat at t_6.
    const Grid y_hat = predict_clean(f.prev_state, f.schedule.timesteps[6], f.prev_velocity);
    const Block expect = dmf_target(y_hat, f.anchors, r.record.activated, f.schedule.timesteps[7], f.noise);
    CHECK(gather(r.state, r.record.activated) == expect);
}

TEST_CASE("apply_transition with zero noise weight reproduces the lifted prediction") {
    const StageSchedule s = build_schedule({{2, 0.25}, {2, 1.0}}, 4, 1.0, 1.0);
    const GridShape shape{4, 4, 1};
    Rng rng(1);
    const Grid state = gaussian_grid(shape, rng), prev_state = gaussian_grid(shape, rng);
    const Grid prev_velocity = gaussian_grid(shape, rng);
    const Grid noise(shape); // zero noise
    const IndexSet anchors = initial_selector(4, 4, 4, 9);
    const TransitionResult r =
        apply_transition(state, TransitionInputs{prev_state, prev_velocity, anchors, noise, 2}, s);
    const double T = s.timesteps[2];
    const Grid y_hat = predict_clean(prev_state, s.timesteps[1], prev_velocity);
    const Block phi = gather(lift(gather(y_hat, anchors), anchors, shape), r.record.activated);
    CHECK((gather(r.state, r.record.activated) - phi * static_cast<float>(T)).cwiseAbs().maxCoeff() < 1e-6f);
    CHECK(r.next_set.is_full());
}

TEST_CASE("apply_transition errors") {
    Fixture f;
    try {
        apply_transition(f.state, TransitionInputs{f.prev_state, f.prev_velocity, f.anchors, f.noise, 5}, f.schedule);
        FAIL("expected no-stage error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoStage);
    }
    CHECK_THROWS_AS(
        apply_transition(f.state, TransitionInputs{f.prev_state, f.prev_velocity, f.anchors, f.noise, 0}, f.schedule),
        Error);
    const IndexSet wrong = initial_selector(8, 8, 30, 1);
    try {
        apply_transition(f.state, TransitionInputs{f.prev_state, f.prev_velocity, wrong, f.noise, 7}, f.schedule);
        FAIL("expected schedule error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Schedule);
    }
    const StageSchedule single = preset_schedule("vanilla7");
    CHECK_THROWS_AS(apply_transition(f.state,
                                     TransitionInputs{f.prev_state, f.prev_velocity, IndexSet::full(64), f.noise, 3},
                                     single),
                    Error);
}
