#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jit/cost.hpp"
#include "jit/field.hpp"
#include "jit/schedule.hpp"
#include "jit/transition.hpp"

namespace jit {

/// Full-dimensional velocity from a sparse evaluation: the field runs on the
/// tokens in `set` and the lifter fills in everything else.
Grid sag_velocity(const VelocityField& field, const Grid& y, const IndexSet& set, double t);

/// y + v * dt, elementwise.
Grid euler_step(const Grid& y, const Grid& v, double dt);

struct SamplerOptions {
    bool shared_noise = false;  // one epsilon for every transition instead of a fresh draw per transition
    int trajectory_stride = 0;  // keep y_{t_i} every `stride` steps; 0 keeps none
    int importance_window = 3;
    CostModel cost;
    int baseline_steps = 50;
};

struct StepRecord {
    int step = 0;
    double t = 0.0;
    int stage = 0; // chain level k
    TokenIndex active = 0;
    double cost = 0.0;
};

struct TrajectorySnapshot {
    int step = 0; // state at t_step, after any transition at that step
    Grid state;
};

struct RunReport {
    std::string schedule_name;
    std::string field;
    std::uint64_t seed = 0;
    GridShape shape;
    std::vector<double> timesteps;
    std::vector<StepRecord> steps;
    std::vector<TransitionRecord> transitions;
    std::vector<IndexSet> chain; // realized Omega_K ... Omega_0
    std::vector<TrajectorySnapshot> trajectory;
    Grid endpoint;
    int nfe = 0;
    double total_cost = 0.0;
    double baseline_cost = 0.0;
    double speedup = 0.0;
    int baseline_steps = 50;
};

/// The complete sampling loop: seeded full-grid noise, strided initial anchor
/// set, Euler steps on the lifted velocity, and a stage transition at every
/// schedule boundary using the velocity kept from the previous step.
RunReport run(const StageSchedule& schedule, const VelocityField& field, const GridShape& shape, std::uint64_t seed,
              const SamplerOptions& options = {});

} // namespace jit
