#pragma once

#include <Eigen/Core>

#include "jit/grid.hpp"
#include "jit/importance.hpp"
#include "jit/schedule.hpp"

namespace jit {

/// One-step clean estimate y + (1 - t) v.
Grid predict_clean(const Grid& y, double t, const Grid& v);

/// Target for newly activated tokens: T_k * Phi(anchors of y_hat) + (1 - T_k) * noise,
/// restricted to `ring`. Phi is the same interpolation operator as the lifter.
Block dmf_target(const Grid& y_hat, const IndexSet& anchors, const IndexSet& ring, double T_k, const Grid& noise);

/// Closed-form solution of the hitting ODE dz/dt = (target - z) / (T_k - t)
/// on [T_k - delta, T_k] with z(T_k - delta) = z0: a linear contraction that
/// lands on `target` at T_k.
template <typename DerivedA, typename DerivedB>
auto hitting_flow(const Eigen::MatrixBase<DerivedA>& z0, const Eigen::MatrixBase<DerivedB>& target, double T_k,
                  double delta, double t) {
    require(delta > 0.0, ErrorKind::Parameter, "micro-flow duration must be positive");
    require(t >= T_k - delta && t <= T_k, ErrorKind::Parameter, "time outside the micro-flow interval");
    require(z0.rows() == target.rows() && z0.cols() == target.cols(), ErrorKind::Dimension,
            "start and target differ in shape");
    using Scalar = typename DerivedA::Scalar;
    using Result = decltype((target - z0).eval());
    // Both interval ends are returned as given; (T_k - t) / delta is not exactly 1 at the start.
    if (t >= T_k) return Result(target);
    if (t <= T_k - delta) return Result(z0);
    const auto remaining = static_cast<Scalar>((T_k - t) / delta);
    return (target - (target - z0) * remaining).eval();
}

struct TransitionRecord {
    int step_index = 0;
    int stage_from = 0; // chain level k
    int stage_to = 0;   // k - 1
    double T_k = 0.0;
    IndexSet activated;
    Block target_values;
    ImportanceMap importance;
};

/// Everything a stage transition at solver step i reads.
struct TransitionInputs {
    const Grid& prev_state;    // y at t_{i-1}
    const Grid& prev_velocity; // lifted velocity at t_{i-1}
    const IndexSet& anchors;   // Omega_k
    const Grid& noise;         // full-dimensional epsilon
    int step_index = 0;        // i
    int importance_window = 3;
};

struct TransitionResult {
    Grid state;
    IndexSet next_set; // Omega_{k-1}
    TransitionRecord record;
};

/// Activates the next ring of tokens at a stage boundary: ranks inactive
/// tokens by velocity variance, builds their targets from the clean
/// prediction at t_{i-1} and writes them into the state. Anchor tokens are
/// left untouched.
TransitionResult apply_transition(const Grid& state, const TransitionInputs& in, const StageSchedule& schedule);

} // namespace jit
