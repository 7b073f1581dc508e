#pragma once

#include <algorithm>
#include <numeric>

#include "jit/grid.hpp"

namespace jit {

/// Per-token local-variance score of a velocity field.
struct ImportanceMap {
    TokenIndex h_tok = 1;
    TokenIndex w_tok = 1;
    Eigen::VectorXd scores;

    double at(TokenIndex row, TokenIndex col) const { return scores(row * w_tok + col); }
};

/// Windowed variance E_W[u^2] - E_W[u]^2 per channel (box average with
/// edge-clamped borders), averaged over channels and clamped at zero.
template <typename Scalar>
ImportanceMap importance_map(const TokenGrid<Scalar>& velocity, int window = 3) {
    require(window >= 3 && window % 2 == 1, ErrorKind::Parameter,
            "importance window must be odd and >= 3, got " + std::to_string(window));
    const GridShape& s = velocity.shape();
    const int r = window / 2;
    auto clamp = [](TokenIndex v, TokenIndex hi) { return std::min<TokenIndex>(std::max<TokenIndex>(v, 0), hi - 1); };

    const Eigen::MatrixXd u = velocity.tokens().template cast<double>();
    const Eigen::MatrixXd u2 = u.cwiseProduct(u);

    // Separable box sums: rows first, then columns.
    Eigen::MatrixXd row_sum(s.tokens(), s.d), row_sum2(s.tokens(), s.d);
    for (TokenIndex row = 0; row < s.h_tok; ++row) {
        for (TokenIndex col = 0; col < s.w_tok; ++col) {
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(s.d), b = Eigen::RowVectorXd::Zero(s.d);
            for (int o = -r; o <= r; ++o) {
                const TokenIndex src = s.token_at(row, clamp(col + o, s.w_tok));
                a += u.row(src);
                b += u2.row(src);
            }
            row_sum.row(s.token_at(row, col)) = a;
            row_sum2.row(s.token_at(row, col)) = b;
        }
    }

    const double area = static_cast<double>(window) * window;
    ImportanceMap map{s.h_tok, s.w_tok, Eigen::VectorXd::Zero(s.tokens())};
    for (TokenIndex row = 0; row < s.h_tok; ++row) {
        for (TokenIndex col = 0; col < s.w_tok; ++col) {
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(s.d), b = Eigen::RowVectorXd::Zero(s.d);
            for (int o = -r; o <= r; ++o) {
                const TokenIndex src = s.token_at(clamp(row + o, s.h_tok), col);
                a += row_sum.row(src);
                b += row_sum2.row(src);
            }
            const Eigen::RowVectorXd mean = a / area;
            const Eigen::RowVectorXd var = b / area - mean.cwiseProduct(mean);
            map.scores(s.token_at(row, col)) = std::max(0.0, var.mean());
        }
    }
    return map;
}

/// The `count` candidates with the highest scores (ties to the lower index),
/// returned sorted.
inline IndexSet top_tokens(const ImportanceMap& map, const IndexSet& candidates, TokenIndex count) {
    require(candidates.n_total() == map.scores.size(), ErrorKind::Dimension,
            "candidate set does not match importance map size");
    require(count >= 0 && count <= candidates.size(), ErrorKind::Budget,
            "requested " + std::to_string(count) + " tokens from " + std::to_string(candidates.size()) +
                " candidates");
    std::vector<TokenIndex> order(candidates.begin(), candidates.end());
    auto better = [&](TokenIndex a, TokenIndex b) {
        const double sa = map.scores(a), sb = map.scores(b);
        return sa != sb ? sa > sb : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + count, order.end(), better);
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());
    return IndexSet(candidates.n_total(), std::move(order));
}

} // namespace jit
