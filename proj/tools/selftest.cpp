#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "jit/interp.hpp"
#include "jit/random.hpp"
#include "jit/sampler.hpp"
#include "jit/toy_models.hpp"

namespace jit::tools {

namespace {

IndexSet random_subset(const IndexSet& from, TokenIndex size, Rng& rng) {
    std::vector<TokenIndex> pool = from.indices();
    for (TokenIndex j = 0; j < size; ++j) {
        const auto pick = j + static_cast<TokenIndex>(rng.below(pool.size() - static_cast<std::size_t>(j)));
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
    }
    pool.resize(static_cast<std::size_t>(size));
    return IndexSet::from_unsorted(from.n_total(), std::move(pool));
}

bool projector_algebra() {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const GridShape shape{4 + static_cast<TokenIndex>(rng.below(5)), 4 + static_cast<TokenIndex>(rng.below(5)), 2};
        const IndexSet full = IndexSet::full(shape.tokens());
        const IndexSet prev = random_subset(full, 2 + static_cast<TokenIndex>(rng.below(shape.tokens() - 2)), rng);
        const IndexSet cur = random_subset(prev, 1 + static_cast<TokenIndex>(rng.below(prev.size() - 1)), rng);
        const Grid g = gaussian_grid(shape, rng);
        const IndexSet r = ring(prev, cur);
        if (!(apply_mask(apply_mask(g, cur), cur) == apply_mask(g, cur))) return false;
        if (!(embed(gather(g, cur), cur, shape) == apply_mask(g, cur))) return false;
        if (!apply_mask(apply_mask(g, r), cur).tokens().isZero(0.0)) return false;
        const Block diff = apply_mask(g, prev).tokens() - apply_mask(g, cur).tokens();
        if (diff != apply_mask(g, r).tokens()) return false;
    }
    return true;
}

bool lift_consistency() {
    Rng rng(12);
    const GridShape shape{16, 16, 4};
    const IndexSet full = IndexSet::full(shape.tokens());
    for (int trial = 0; trial < 50; ++trial) {
        const IndexSet set = random_subset(full, 1 + static_cast<TokenIndex>(rng.below(shape.tokens())), rng);
        Block b(set.size(), shape.d);
        for (TokenIndex j = 0; j < b.size(); ++j) b.data()[j] = static_cast<float>(rng.normal());
        if (gather(lift(b, set, shape), set) != b) return false;
    }
    return true;
}

bool beta_round_trip() {
    for (double s = 0.0; s <= 1.0; s += 0.01) {
        const double x = inv_reg_inc_beta(s, kWarpAlpha, kWarpBeta);
        if (std::abs(reg_inc_beta(x, kWarpAlpha, kWarpBeta) - s) > 1e-8) return false;
    }
    return true;
}

bool selector_base() { return strided_base_set(8, 8).size() == 37 && strided_base_set(4, 4).size() == 13; }

bool vanilla_degeneration() {
    const GridShape shape{16, 16, 2};
    const GaussianFlowField field(make_target_image("gaussian-bump", shape), 0.0);
    const StageSchedule s = preset_schedule("vanilla12");
    return run(s, field, shape, 5).endpoint == reference_solve(field, shape, 5, s.timesteps);
}

bool determinism_and_nesting() {
    const GridShape shape{16, 16, 2};
    const GaussianFlowField field(make_target_image("checkerboard", shape), 0.5);
    const StageSchedule s = preset_schedule("jit4x");
    const RunReport a = run(s, field, shape, 9), b = run(s, field, shape, 9);
    return a.endpoint == b.endpoint && static_cast<bool>(validate_chain(a.chain)) && a.nfe == s.nfe();
}

} // namespace

bool run_selftest(std::ostream& out) {
    const std::vector<std::pair<std::string, std::function<bool()>>> checks{
        {"projector algebra", projector_algebra},
        {"lift consistency", lift_consistency},
        {"beta inverse round trip", beta_round_trip},
        {"strided base set", selector_base},
        {"vanilla degeneration", vanilla_degeneration},
        {"determinism and nesting", determinism_and_nesting},
    };
    bool all = true;
    for (const auto& [name, check] : checks) {
        bool ok = false;
        try {
            ok = check();
        } catch (const std::exception& e) {
            out << "  (" << e.what() << ")\n";
        }
        out << (ok ? "PASS " : "FAIL ") << name << "\n";
        all = all && ok;
    }
    return all;
}

} // namespace jit::tools
