#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "jit/grid.hpp"

namespace jit {

struct BlurSpec {
    double sigma = 0.4;
    int kernel_size = 3;
};

/// Blur scale from token density: sigma = 0.4 / sqrt(m / n), the kernel
/// covering roughly 3 sigma rounded to the next odd size, never below 3.
inline BlurSpec blur_params(TokenIndex m, TokenIndex n) {
    require(m >= 1, ErrorKind::EmptyAnchor, "blur_params needs at least one anchor");
    require(m <= n, ErrorKind::Parameter, "active count exceeds total count");
    const double rho = static_cast<double>(m) / static_cast<double>(n);
    const double gap = 1.0 / std::sqrt(rho);
    BlurSpec spec;
    spec.sigma = 0.4 * gap;
    spec.kernel_size = std::max(3, 2 * static_cast<int>(std::floor(1.5 * spec.sigma)) + 1);
    return spec;
}

/// Normalized 1-D Gaussian taps at integer offsets -r..r, r = kernel_size / 2.
inline std::vector<double> gaussian_kernel(const BlurSpec& spec) {
    require(spec.sigma > 0.0, ErrorKind::Parameter, "blur sigma must be positive");
    require(spec.kernel_size >= 3 && spec.kernel_size % 2 == 1, ErrorKind::Parameter,
            "kernel size must be odd and >= 3");
    const int radius = spec.kernel_size / 2;
    std::vector<double> taps(static_cast<std::size_t>(spec.kernel_size));
    double sum = 0.0;
    for (int o = -radius; o <= radius; ++o) {
        const double w = std::exp(-0.5 * (o * o) / (spec.sigma * spec.sigma));
        taps[static_cast<std::size_t>(o + radius)] = w;
        sum += w;
    }
    for (double& w : taps) w /= sum;
    return taps;
}

/// Every token takes the value of the anchor nearest in (row, col); equal
/// distances resolve to the lower row-major anchor index.
template <typename Scalar>
TokenGrid<Scalar> nearest_fill(const ActiveBlock<Scalar>& block, const IndexSet& set, const GridShape& shape) {
    require(!set.empty(), ErrorKind::EmptyAnchor, "nearest_fill needs at least one anchor");
    detail::check_block_for(block, set, shape);

    // Anchor columns bucketed per row; block row of each anchor kept alongside.
    std::vector<std::vector<TokenIndex>> cols(static_cast<std::size_t>(shape.h_tok));
    std::vector<std::vector<TokenIndex>> slots(static_cast<std::size_t>(shape.h_tok));
    for (TokenIndex j = 0; j < set.size(); ++j) {
        const auto r = static_cast<std::size_t>(shape.row_of(set[j]));
        cols[r].push_back(shape.col_of(set[j]));
        slots[r].push_back(j);
    }

    TokenGrid<Scalar> out(shape);
    for (TokenIndex row = 0; row < shape.h_tok; ++row) {
        for (TokenIndex col = 0; col < shape.w_tok; ++col) {
            TokenIndex best_d2 = std::numeric_limits<TokenIndex>::max();
            TokenIndex best_token = std::numeric_limits<TokenIndex>::max();
            TokenIndex best_slot = -1;
            auto consider = [&](TokenIndex r, std::size_t pos) {
                const auto& rc = cols[static_cast<std::size_t>(r)];
                const TokenIndex dc = rc[pos] - col;
                const TokenIndex dr = r - row;
                const TokenIndex d2 = dr * dr + dc * dc;
                const TokenIndex tok = shape.token_at(r, rc[pos]);
                if (d2 < best_d2 || (d2 == best_d2 && tok < best_token)) {
                    best_d2 = d2;
                    best_token = tok;
                    best_slot = slots[static_cast<std::size_t>(r)][pos];
                }
            };
            auto scan_row = [&](TokenIndex r) {
                const auto& rc = cols[static_cast<std::size_t>(r)];
                if (rc.empty()) return;
                const auto it = std::lower_bound(rc.begin(), rc.end(), col);
                const auto pos = static_cast<std::size_t>(it - rc.begin());
                if (pos < rc.size()) consider(r, pos);
                if (pos > 0) consider(r, pos - 1);
            };
            for (TokenIndex dr = 0; dr < shape.h_tok; ++dr) {
                if (dr * dr > best_d2) break;
                if (row - dr >= 0) scan_row(row - dr);
                if (dr > 0 && row + dr < shape.h_tok) scan_row(row + dr);
            }
            out.token(shape.token_at(row, col)) = block.row(best_slot);
        }
    }
    return out;
}

/// Separable Gaussian convolution per channel with edge-clamped borders.
/// Accumulates in double, stores in Scalar.
template <typename Scalar>
TokenGrid<Scalar> gaussian_blur(const TokenGrid<Scalar>& grid, const BlurSpec& spec) {
    const std::vector<double> taps = gaussian_kernel(spec);
    const int radius = spec.kernel_size / 2;
    const GridShape& s = grid.shape();
    auto clamp = [](TokenIndex v, TokenIndex hi) { return std::min<TokenIndex>(std::max<TokenIndex>(v, 0), hi - 1); };

    Eigen::MatrixXd horizontal(s.tokens(), s.d);
    for (TokenIndex row = 0; row < s.h_tok; ++row) {
        for (TokenIndex col = 0; col < s.w_tok; ++col) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(s.d);
            for (int o = -radius; o <= radius; ++o) {
                const TokenIndex src = s.token_at(row, clamp(col + o, s.w_tok));
                acc += taps[static_cast<std::size_t>(o + radius)] * grid.token(src).template cast<double>();
            }
            horizontal.row(s.token_at(row, col)) = acc;
        }
    }

    TokenGrid<Scalar> out(s);
    for (TokenIndex row = 0; row < s.h_tok; ++row) {
        for (TokenIndex col = 0; col < s.w_tok; ++col) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(s.d);
            for (int o = -radius; o <= radius; ++o) {
                const TokenIndex src = s.token_at(clamp(row + o, s.h_tok), col);
                acc += taps[static_cast<std::size_t>(o + radius)] * horizontal.row(src);
            }
            out.token(s.token_at(row, col)) = acc.template cast<Scalar>();
        }
    }
    return out;
}

/// Unified interpolation operator: nearest-anchor fill, Gaussian smoothing of
/// the fill, then the anchors restored exactly. Serves both as the velocity
/// extrapolator of the lifter and as the structural prior for new tokens.
template <typename Scalar>
TokenGrid<Scalar> lift(const ActiveBlock<Scalar>& block, const IndexSet& set, const GridShape& shape) {
    TokenGrid<Scalar> filled = nearest_fill(block, set, shape);
    if (set.is_full()) return filled;
    TokenGrid<Scalar> out = gaussian_blur(filled, blur_params(set.size(), shape.tokens()));
    for (TokenIndex j = 0; j < set.size(); ++j) out.token(set[j]) = block.row(j);
    return out;
}

} // namespace jit
