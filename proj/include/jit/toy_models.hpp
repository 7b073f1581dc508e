#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "jit/field.hpp"

namespace jit {

/// Marginal velocity of the linear path x_t = t x_1 + (1 - t) x_0 with
/// x_0 ~ N(0, 1) and x_1 ~ N(mu, sigma1^2).
double gaussian_flow_velocity(double x, double t, double mu, double sigma1);

/// Pointwise analytic field: every token-channel flows to its own Gaussian
/// target N(mu, sigma1^2). Exact on any subset of tokens.
class GaussianFlowField final : public VelocityField {
public:
    GaussianFlowField(Grid mu, double sigma1);

    Block evaluate(const Block& active, const IndexSet& indices, double t) const override;
    std::string descriptor() const override;

    const Grid& mu() const noexcept { return mu_; }
    double sigma1() const noexcept { return sigma1_; }

private:
    Grid mu_;
    double sigma1_;
};

struct TargetParams {
    double low = 0.0;  // smooth-gradient range
    double high = 1.0;
    double bump_width = 0.0; // gaussian-bump std-dev in tokens; 0 picks min(h, w) / 6

    friend bool operator==(const TargetParams&, const TargetParams&) = default;
};

/// "smooth-gradient", "checkerboard" or "gaussian-bump"; every channel equal.
Grid make_target_image(const std::string& kind, const GridShape& shape, const TargetParams& params = {});

/// Full-token Euler integration over the given timesteps from the same seeded
/// initial noise the sampler uses.
Grid reference_solve(const VelocityField& field, const GridShape& shape, std::uint64_t seed,
                     const std::vector<double>& timesteps);

/// Same, over n_fine_steps uniform steps on [0, 1].
Grid reference_solve(const VelocityField& field, const GridShape& shape, std::uint64_t seed, int n_fine_steps);

/// ||x - ref||_2 / ||ref||_2 accumulated in double; absolute norm when ref is zero.
double relative_l2_error(const Grid& x, const Grid& ref);

/// Key of a recorded evaluation: the active indices and the exact time.
struct ReplayKey {
    std::vector<TokenIndex> indices;
    double t = 0.0;

    friend auto operator<=>(const ReplayKey&, const ReplayKey&) = default;
};

/// Plays back previously recorded evaluations. Strict playback fails on an
/// unrecorded key; otherwise the fallback field answers.
class ReplayField final : public VelocityField {
public:
    explicit ReplayField(std::map<ReplayKey, Block> entries, bool strict = true,
                         std::shared_ptr<const VelocityField> fallback = nullptr);

    Block evaluate(const Block& active, const IndexSet& indices, double t) const override;
    std::string descriptor() const override;

    const std::map<ReplayKey, Block>& entries() const noexcept { return entries_; }
    bool strict() const noexcept { return strict_; }

private:
    std::map<ReplayKey, Block> entries_;
    bool strict_;
    std::shared_ptr<const VelocityField> fallback_;
};

/// Forwards to an inner field and keeps every answer for later playback.
class RecordingField final : public VelocityField {
public:
    explicit RecordingField(std::shared_ptr<const VelocityField> inner);

    Block evaluate(const Block& active, const IndexSet& indices, double t) const override;
    std::string descriptor() const override;

    std::map<ReplayKey, Block> recorded() const;

private:
    std::shared_ptr<const VelocityField> inner_;
    mutable std::mutex mutex_;
    mutable std::map<ReplayKey, Block> recorded_;
};

} // namespace jit
