#include "jit/schedule.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "jit/random.hpp"

namespace jit {

namespace {

constexpr int kMaxFractionTerms = 10000;
constexpr int kMaxInverseIterations = 2000;

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxFractionTerms; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    fail(ErrorKind::Numerical, "incomplete beta continued fraction did not converge");
}

void check_shape_params(double a, double b) {
    require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), ErrorKind::Parameter,
            "beta parameters must be positive and finite");
}

} // namespace

double reg_inc_beta(double x, double a, double b) {
    check_shape_params(a, b);
    require(x >= 0.0 && x <= 1.0, ErrorKind::Parameter, "incomplete beta argument outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_fraction(x, a, b) / a;
    return 1.0 - std::exp(log_front) * beta_fraction(1.0 - x, b, a) / b;
}

double inv_reg_inc_beta(double s, double a, double b) {
    check_shape_params(a, b);
    require(s >= 0.0 && s <= 1.0, ErrorKind::Parameter, "probability outside [0, 1]");
    if (s == 0.0) return 0.0;
    if (s == 1.0) return 1.0;

    const double lb = log_beta(a, b);
    double lo = 0.0, hi = 1.0;
    // Mean of the distribution is a reasonable start for the bracketed search.
    double x = a / (a + b);
    for (int it = 0; it < kMaxInverseIterations; ++it) {
        const double f = reg_inc_beta(x, a, b) - s;
        if (f == 0.0) return x;
        (f < 0.0 ? lo : hi) = x;
        if (std::nextafter(lo, 1.0) >= hi) {
            // Bracket collapsed to adjacent doubles; keep the closer endpoint.
            const double flo = std::abs(reg_inc_beta(lo, a, b) - s);
            const double fhi = std::abs(reg_inc_beta(hi, a, b) - s);
            return flo <= fhi ? lo : hi;
        }
        const double log_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
        double next = x - f / std::exp(log_pdf);
        if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (next == x) return x;
        x = next;
    }
    fail(ErrorKind::Numerical, "inverse incomplete beta did not converge for s = " + std::to_string(s));
}

std::vector<double> beta_timesteps(int n_steps, double a, double b, bool invert_time) {
    require(n_steps >= 1, ErrorKind::Parameter, "need at least one solver step");
    std::vector<double> t(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i)
        t[static_cast<std::size_t>(i)] = inv_reg_inc_beta(static_cast<double>(i) / n_steps, a, b);
    t.front() = 0.0;
    t.back() = 1.0;
    if (invert_time) {
        std::vector<double> mirrored(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) mirrored[i] = 1.0 - t[t.size() - 1 - i];
        t = std::move(mirrored);
    }
    for (std::size_t i = 1; i < t.size(); ++i)
        require(t[i - 1] < t[i], ErrorKind::Schedule,
                "timesteps not strictly increasing at index " + std::to_string(i));
    return t;
}

int StageSchedule::stage_at_step(int i) const {
    int p = 0;
    for (int boundary : transition_steps) {
        if (i >= boundary) ++p;
    }
    return p;
}

StageSchedule build_schedule(const std::vector<StageSpec>& stages, int n_steps, double alpha, double beta,
                             std::string name, bool invert_time) {
    require(!stages.empty(), ErrorKind::Schedule, "schedule has no stages");
    int total = 0;
    for (std::size_t p = 0; p < stages.size(); ++p) {
        const StageSpec& st = stages[p];
        require(st.steps >= 1, ErrorKind::Schedule, "stage " + std::to_string(p) + " has fewer than one step");
        require(st.sparsity > 0.0 && st.sparsity <= 1.0, ErrorKind::Schedule,
                "stage " + std::to_string(p) + " sparsity outside (0, 1]");
        if (p > 0)
            require(stages[p - 1].sparsity < st.sparsity, ErrorKind::Schedule,
                    "sparsity not strictly increasing at stage " + std::to_string(p));
        total += st.steps;
    }
    require(stages.back().sparsity == 1.0, ErrorKind::Schedule, "final stage sparsity must be 1.0");
    require(total == n_steps, ErrorKind::Schedule,
            "stage steps sum to " + std::to_string(total) + " but n_steps is " + std::to_string(n_steps));

    StageSchedule s;
    s.name = std::move(name);
    s.stages = stages;
    s.alpha = alpha;
    s.beta = beta;
    s.invert_time = invert_time;
    s.timesteps = beta_timesteps(n_steps, alpha, beta, invert_time);
    int boundary = 0;
    for (std::size_t p = 0; p + 1 < stages.size(); ++p) {
        boundary += stages[p].steps;
        s.transition_steps.push_back(boundary);
    }
    return s;
}

std::vector<TokenIndex> stage_budgets(const StageSchedule& schedule, TokenIndex n_tokens) {
    require(n_tokens >= 1, ErrorKind::Schedule, "token count must be positive");
    std::vector<TokenIndex> m;
    m.reserve(schedule.stages.size());
    for (const StageSpec& st : schedule.stages)
        m.push_back(static_cast<TokenIndex>(std::nearbyint(st.sparsity * static_cast<double>(n_tokens))));
    m.back() = n_tokens;
    for (std::size_t p = 0; p < m.size(); ++p) {
        require(m[p] >= 1, ErrorKind::Schedule, "stage " + std::to_string(p) + " rounds to zero active tokens");
        if (p > 0)
            require(m[p - 1] < m[p], ErrorKind::Schedule,
                    "budgets not strictly increasing at stage " + std::to_string(p) + " for N = " +
                        std::to_string(n_tokens));
    }
    return m;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"jit4x", "jit7x", "vanilla50", "vanilla12", "vanilla7"};
    return names;
}

StageSchedule preset_schedule(const std::string& name, bool invert_time) {
    if (name == "jit4x") return build_schedule({{7, 0.35}, {4, 0.62}, {7, 1.0}}, 18, kWarpAlpha, kWarpBeta, name, invert_time);
    if (name == "jit7x") return build_schedule({{4, 0.32}, {3, 0.60}, {4, 1.0}}, 11, kWarpAlpha, kWarpBeta, name, invert_time);
    // Vanilla presets: plain uniform grid, every token active.
    static const std::map<std::string, int> vanilla{{"vanilla50", 50}, {"vanilla12", 12}, {"vanilla7", 7}};
    if (auto it = vanilla.find(name); it != vanilla.end())
        return build_schedule({{it->second, 1.0}}, it->second, 1.0, 1.0, name, invert_time);
    fail(ErrorKind::Config, "unknown schedule preset '" + name + "'");
}

IndexSet strided_base_set(TokenIndex h_tok, TokenIndex w_tok) {
    require(h_tok >= 1 && w_tok >= 1, ErrorKind::Dimension, "grid must be at least 1x1");
    std::vector<TokenIndex> base;
    for (TokenIndex r = 0; r < h_tok; ++r) {
        for (TokenIndex c = 0; c < w_tok; ++c) {
            const bool border = r == 0 || c == 0 || r == h_tok - 1 || c == w_tok - 1;
            const bool lattice = r % 2 == 0 && c % 2 == 0;
            if (border || lattice) base.push_back(r * w_tok + c);
        }
    }
    return IndexSet(h_tok * w_tok, std::move(base));
}

IndexSet initial_selector(TokenIndex h_tok, TokenIndex w_tok, TokenIndex budget, std::uint64_t seed) {
    const TokenIndex n = h_tok * w_tok;
    require(budget >= 1 && budget <= n, ErrorKind::Budget,
            "initial budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    IndexSet base = strided_base_set(h_tok, w_tok);
    if (base.size() == budget) return base;

    Rng rng(seed, streams::selector);
    // Partial Fisher-Yates: the first `take` entries of `pool` become a uniform sample.
    auto sample = [&rng](std::vector<TokenIndex> pool, TokenIndex take) {
        for (TokenIndex j = 0; j < take; ++j) {
            const auto pick = j + static_cast<TokenIndex>(rng.below(static_cast<std::uint64_t>(pool.size()) -
                                                                    static_cast<std::uint64_t>(j)));
            std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        }
        pool.resize(static_cast<std::size_t>(take));
        return pool;
    };

    if (base.size() < budget) {
        std::vector<TokenIndex> extra = sample(complement(base).indices(), budget - base.size());
        extra.insert(extra.end(), base.begin(), base.end());
        return IndexSet::from_unsorted(n, std::move(extra));
    }
    return IndexSet::from_unsorted(n, sample(base.indices(), budget));
}

} // namespace jit
