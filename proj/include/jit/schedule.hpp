#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jit/grid.hpp"

namespace jit {

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double reg_inc_beta(double x, double a, double b);

/// Inverse of reg_inc_beta in x; safeguarded Newton inside a shrinking bracket.
double inv_reg_inc_beta(double s, double a, double b);

/// t_i = F^{-1}(i / n_steps; a, b) for i = 0..n_steps with exact endpoints.
/// `invert_time` mirrors the grid, t_i -> 1 - t_{n-i}.
std::vector<double> beta_timesteps(int n_steps, double a, double b, bool invert_time = false);

struct StageSpec {
    int steps = 1;
    double sparsity = 1.0; // fraction of tokens active

    friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

/// Stages ordered coarse to fine. Stage position p corresponds to chain
/// level k = K - p, so the last stage is k = 0 with every token active.
struct StageSchedule {
    std::string name;
    std::vector<StageSpec> stages;
    std::vector<double> timesteps;     // n_steps + 1 values, strictly increasing
    std::vector<int> transition_steps; // solver steps at which stage p -> p + 1 begins
    double alpha = 1.0;
    double beta = 1.0;
    bool invert_time = false;

    int n_steps() const noexcept { return static_cast<int>(timesteps.size()) - 1; }
    int nfe() const noexcept { return n_steps(); }
    int num_stages() const noexcept { return static_cast<int>(stages.size()); }
    int coarsest_level() const noexcept { return num_stages() - 1; }

    /// Stage position active during solver step i.
    int stage_at_step(int i) const;
};

/// Builds and validates a schedule; the timesteps come from beta_timesteps.
StageSchedule build_schedule(const std::vector<StageSpec>& stages, int n_steps, double alpha, double beta,
                             std::string name = "custom", bool invert_time = false);

/// Active-token budgets per stage position: round-half-even(sparsity * N), the
/// final stage forced to N. Throws a schedule error unless 1 <= m strictly
/// increasing.
std::vector<TokenIndex> stage_budgets(const StageSchedule& schedule, TokenIndex n_tokens);

/// "jit4x", "jit7x", "vanilla50", "vanilla12", "vanilla7".
StageSchedule preset_schedule(const std::string& name, bool invert_time = false);
const std::vector<std::string>& preset_names();

inline constexpr double kWarpAlpha = 1.4;
inline constexpr double kWarpBeta = 0.42;

/// Stride-2 lattice points plus every border token.
IndexSet strided_base_set(TokenIndex h_tok, TokenIndex w_tok);

/// Base set trimmed or topped up to exactly `budget` tokens with a seeded
/// uniform draw.
IndexSet initial_selector(TokenIndex h_tok, TokenIndex w_tok, TokenIndex budget, std::uint64_t seed);

} // namespace jit
