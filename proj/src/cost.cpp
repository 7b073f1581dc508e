#include "jit/cost.hpp"

#include <algorithm>
#include <cmath>

namespace jit {

void CostModel::validate() const {
    require(c_attn >= 0.0 && c_lin >= 0.0 && c_fix >= 0.0 && n_ctx >= 0.0, ErrorKind::Parameter,
            "cost coefficients must be non-negative");
    require(c_attn > 0.0 || c_lin > 0.0 || c_fix > 0.0, ErrorKind::Parameter, "cost model is identically zero");
}

double step_cost(double m, const CostModel& model) {
    require(m >= 0.0, ErrorKind::Parameter, "negative token count");
    const double tokens = m + model.n_ctx;
    return model.c_attn * tokens * tokens + model.c_lin * tokens + model.c_fix;
}

CostModel normalized_cost_model(double alpha, TokenIndex n_tokens) {
    require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::Parameter, "attention share outside [0, 1]");
    require(n_tokens >= 1, ErrorKind::Parameter, "token count must be positive");
    const auto n = static_cast<double>(n_tokens);
    return CostModel{alpha / (n * n), (1.0 - alpha) / n, 0.0, 0.0};
}

ScheduleCost schedule_cost(const StageSchedule& schedule, TokenIndex n_tokens, const CostModel& model,
                           int baseline_steps) {
    model.validate();
    require(baseline_steps >= 1, ErrorKind::Parameter, "baseline needs at least one step");
    const std::vector<TokenIndex> budgets = stage_budgets(schedule, n_tokens);
    ScheduleCost out;
    out.per_step.reserve(static_cast<std::size_t>(schedule.n_steps()));
    for (int i = 0; i < schedule.n_steps(); ++i) {
        const double c = step_cost(static_cast<double>(budgets[static_cast<std::size_t>(schedule.stage_at_step(i))]), model);
        out.per_step.push_back(c);
        out.total += c;
    }
    out.baseline = baseline_steps * step_cost(static_cast<double>(n_tokens), model);
    out.speedup = out.baseline / out.total;
    return out;
}

namespace {

double calibration_loss(const std::vector<SpeedupTarget>& targets, TokenIndex n, int baseline_steps, double alpha) {
    const CostModel model = normalized_cost_model(alpha, n);
    double loss = 0.0;
    for (const SpeedupTarget& tgt : targets) {
        const double rel = schedule_cost(tgt.schedule, n, model, baseline_steps).speedup / tgt.speedup - 1.0;
        loss += rel * rel;
    }
    return loss;
}

} // namespace

CalibrationResult calibrate_attention_share(const std::vector<SpeedupTarget>& targets, TokenIndex n_tokens,
                                            int baseline_steps) {
    require(!targets.empty(), ErrorKind::Parameter, "calibration needs at least one target");
    for (const SpeedupTarget& tgt : targets)
        require(tgt.speedup > 0.0 && std::isfinite(tgt.speedup), ErrorKind::Parameter,
                "target speedups must be positive");
    const bool informative = std::any_of(targets.begin(), targets.end(), [](const SpeedupTarget& tgt) {
        return tgt.schedule.stages.size() > 1;
    });
    require(informative, ErrorKind::Numerical, "all targets run every token every step; attention share is unidentifiable");

    // Coarse scan, then golden-section refinement around the best cell.
    constexpr int cells = 200;
    int best = 0;
    double best_loss = calibration_loss(targets, n_tokens, baseline_steps, 0.0);
    for (int j = 1; j <= cells; ++j) {
        const double l = calibration_loss(targets, n_tokens, baseline_steps, static_cast<double>(j) / cells);
        if (l < best_loss) {
            best_loss = l;
            best = j;
        }
    }
    double lo = std::max(0, best - 1) / static_cast<double>(cells);
    double hi = std::min(cells, best + 1) / static_cast<double>(cells);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = calibration_loss(targets, n_tokens, baseline_steps, x1);
    double f2 = calibration_loss(targets, n_tokens, baseline_steps, x2);
    for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = calibration_loss(targets, n_tokens, baseline_steps, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = calibration_loss(targets, n_tokens, baseline_steps, x2);
        }
    }

    CalibrationResult result;
    result.alpha = 0.5 * (lo + hi);
    if (calibration_loss(targets, n_tokens, baseline_steps, result.alpha) > best_loss)
        result.alpha = best / static_cast<double>(cells);
    require(std::isfinite(result.alpha), ErrorKind::Numerical, "attention-share fit failed");
    const CostModel model = normalized_cost_model(result.alpha, n_tokens);
    for (const SpeedupTarget& tgt : targets) {
        const double s = schedule_cost(tgt.schedule, n_tokens, model, baseline_steps).speedup;
        result.predicted.push_back(s);
        result.relative_error.push_back(s / tgt.speedup - 1.0);
    }
    return result;
}

} // namespace jit
