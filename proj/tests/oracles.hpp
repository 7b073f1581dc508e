#pragma once

// Independent reference computations for the tests. Nothing here calls the
// code path it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "jit/grid.hpp"
#include "jit/random.hpp"

namespace jit::oracle {

/// Dense 2-D convolution with the outer-product kernel and clamped indices.
inline Eigen::MatrixXd dense_blur(const Grid& g, double sigma, int kernel_size) {
    const int r = kernel_size / 2;
    std::vector<double> k1(static_cast<std::size_t>(kernel_size));
    double sum = 0.0;
    for (int o = -r; o <= r; ++o) sum += k1[static_cast<std::size_t>(o + r)] = std::exp(-(o * o) / (2.0 * sigma * sigma));
    const GridShape& s = g.shape();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s.tokens(), s.d);
    for (TokenIndex row = 0; row < s.h_tok; ++row)
        for (TokenIndex col = 0; col < s.w_tok; ++col)
            for (int a = -r; a <= r; ++a)
                for (int b = -r; b <= r; ++b) {
                    const TokenIndex rr = std::clamp<TokenIndex>(row + a, 0, s.h_tok - 1);
                    const TokenIndex cc = std::clamp<TokenIndex>(col + b, 0, s.w_tok - 1);
                    const double w = k1[static_cast<std::size_t>(a + r)] * k1[static_cast<std::size_t>(b + r)] / (sum * sum);
                    out.row(row * s.w_tok + col) += w * g.token(rr * s.w_tok + cc).cast<double>();
                }
    return out;
}

/// Per-window two-pass variance, channel mean, by explicit enumeration.
inline std::vector<double> window_variance(const Grid& g, int window) {
    const int r = window / 2;
    const GridShape& s = g.shape();
    std::vector<double> out(static_cast<std::size_t>(s.tokens()));
    for (TokenIndex row = 0; row < s.h_tok; ++row)
        for (TokenIndex col = 0; col < s.w_tok; ++col) {
            double total = 0.0;
            for (TokenIndex c = 0; c < s.d; ++c) {
                std::vector<double> vals;
                for (int a = -r; a <= r; ++a)
                    for (int b = -r; b <= r; ++b) {
                        const TokenIndex rr = std::clamp<TokenIndex>(row + a, 0, s.h_tok - 1);
                        const TokenIndex cc = std::clamp<TokenIndex>(col + b, 0, s.w_tok - 1);
                        vals.push_back(g.at(rr, cc, c));
                    }
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= static_cast<double>(vals.size());
                double var = 0.0;
                for (double v : vals) var += (v - mean) * (v - mean);
                total += var / static_cast<double>(vals.size());
            }
            out[static_cast<std::size_t>(row * s.w_tok + col)] = total / static_cast<double>(s.d);
        }
    return out;
}

/// Adaptive Simpson on [lo, hi].
inline double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int depth = 60) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double a, double b, double fa, double fm, double fb, double whole, double eps, int d) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
            return rec(a, m, fa, flm, fm, left, eps / 2.0, d - 1) + rec(m, b, fm, frm, fb, right, eps / 2.0, d - 1);
        };
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    return rec(lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Beta CDF by quadrature. Endpoint singularities are removed with the
/// substitutions u = t^a (lower tail) and v = (1 - t)^b (upper tail), which
/// turn the integrands into (1 - u^{1/a})^{b-1} / a and (1 - v^{1/b})^{a-1} / b.
inline double beta_cdf_quadrature(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double norm = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    if (x <= 0.5) {
        auto g = [a, b](double u) { return std::pow(1.0 - std::pow(u, 1.0 / a), b - 1.0) / a; };
        return adaptive_simpson(g, 0.0, std::pow(x, a), 1e-14) / norm;
    }
    auto g = [a, b](double v) {
        const double t = 1.0 - std::pow(v, 1.0 / b);
        return std::pow(std::max(t, 0.0), a - 1.0) / b;
    };
    return 1.0 - adaptive_simpson(g, 0.0, std::pow(1.0 - x, b), 1e-14) / norm;
}

/// Plain bisection of the quadrature CDF.
inline double beta_quantile_bisection(double s, double a, double b) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (beta_cdf_quadrature(mid, a, b) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Border tokens and stride-2 lattice tokens, enumerated as two separate sets.
struct BaseCount {
    std::set<TokenIndex> border, interior_lattice;
    std::size_t total() const { return border.size() + interior_lattice.size(); }
};

inline BaseCount enumerate_base(TokenIndex h, TokenIndex w) {
    BaseCount out;
    for (TokenIndex c = 0; c < w; ++c) {
        out.border.insert(c);
        out.border.insert((h - 1) * w + c);
    }
    for (TokenIndex r = 0; r < h; ++r) {
        out.border.insert(r * w);
        out.border.insert(r * w + w - 1);
    }
    for (TokenIndex r = 0; r < h; r += 2)
        for (TokenIndex c = 0; c < w; c += 2)
            if (!out.border.count(r * w + c)) out.interior_lattice.insert(r * w + c);
    return out;
}

/// Explicit Euler on dz/dt = (target - z) / (T - t) from T - delta, stopping
/// one substep short of the singular endpoint and taking the exact remainder.
inline double hitting_ode_explicit(double z0, double target, double T, double delta, double t_end, int substeps) {
    const double h = (t_end - (T - delta)) / substeps;
    double z = z0, t = T - delta;
    for (int j = 0; j < substeps; ++j) {
        if (T - t <= 0.0) return target;
        z += h * (target - z) / (T - t);
        t += h;
    }
    return z;
}

/// Random nested pair cur ⊂ prev ⊆ [0, n).
inline std::pair<IndexSet, IndexSet> random_nested_pair(TokenIndex n, Rng& rng) {
    std::vector<TokenIndex> perm(static_cast<std::size_t>(n));
    for (TokenIndex i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (TokenIndex i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    const TokenIndex outer = 2 + static_cast<TokenIndex>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const TokenIndex inner = 1 + static_cast<TokenIndex>(rng.below(static_cast<std::uint64_t>(outer - 1)));
    std::vector<TokenIndex> a(perm.begin(), perm.begin() + outer), b(perm.begin(), perm.begin() + inner);
    return {IndexSet::from_unsorted(n, a), IndexSet::from_unsorted(n, b)};
}

inline IndexSet random_set(TokenIndex n, TokenIndex size, Rng& rng) {
    std::vector<TokenIndex> perm(static_cast<std::size_t>(n));
    for (TokenIndex i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (TokenIndex j = 0; j < size; ++j)
        std::swap(perm[static_cast<std::size_t>(j)],
                  perm[static_cast<std::size_t>(j) + rng.below(static_cast<std::uint64_t>(n - j))]);
    perm.resize(static_cast<std::size_t>(size));
    return IndexSet::from_unsorted(n, perm);
}

inline Block random_block(TokenIndex m, TokenIndex d, Rng& rng) {
    Block b(m, d);
    for (TokenIndex j = 0; j < b.size(); ++j) b.data()[j] = static_cast<float>(rng.normal());
    return b;
}

} // namespace jit::oracle
