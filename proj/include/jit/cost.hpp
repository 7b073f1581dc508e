#pragma once

#include <vector>

#include "jit/schedule.hpp"

namespace jit {

/// Per-step transformer cost in abstract units:
/// c_attn (m + n_ctx)^2 + c_lin (m + n_ctx) + c_fix.
struct CostModel {
    double c_attn = 1.0;
    double c_lin = 0.0;
    double c_fix = 0.0;
    double n_ctx = 0.0;

    void validate() const;

    friend bool operator==(const CostModel&, const CostModel&) = default;
};

double step_cost(double m, const CostModel& model);

/// Model with attention share `alpha` in units of one full-token step:
/// alpha (m/N)^2 + (1 - alpha) (m/N).
CostModel normalized_cost_model(double alpha, TokenIndex n_tokens);

struct ScheduleCost {
    double total = 0.0;
    double baseline = 0.0; // baseline_steps full-token steps
    double speedup = 0.0;
    std::vector<double> per_step;
};

ScheduleCost schedule_cost(const StageSchedule& schedule, TokenIndex n_tokens, const CostModel& model,
                           int baseline_steps = 50);

struct SpeedupTarget {
    StageSchedule schedule;
    double speedup = 1.0;
};

struct CalibrationResult {
    double alpha = 0.0;
    std::vector<double> predicted;
    std::vector<double> relative_error; // (predicted - target) / target
};

/// Least-squares attention share in [0, 1] matching the target speedups in
/// relative error under the normalized two-term model.
CalibrationResult calibrate_attention_share(const std::vector<SpeedupTarget>& targets, TokenIndex n_tokens,
                                            int baseline_steps = 50);

} // namespace jit
