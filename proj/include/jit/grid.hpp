#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jit/error.hpp"

namespace jit {

using TokenIndex = Eigen::Index;

/// Rows and columns of the token lattice plus channels per token.
struct GridShape {
    TokenIndex h_tok = 1;
    TokenIndex w_tok = 1;
    TokenIndex d = 1;

    TokenIndex tokens() const noexcept { return h_tok * w_tok; }
    TokenIndex values() const noexcept { return tokens() * d; }
    bool valid() const noexcept { return h_tok >= 1 && w_tok >= 1 && d >= 1; }

    TokenIndex row_of(TokenIndex token) const noexcept { return token / w_tok; }
    TokenIndex col_of(TokenIndex token) const noexcept { return token % w_tok; }
    TokenIndex token_at(TokenIndex row, TokenIndex col) const noexcept { return row * w_tok + col; }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

inline std::string to_string(const GridShape& s) {
    return std::to_string(s.h_tok) + "x" + std::to_string(s.w_tok) + "x" + std::to_string(s.d);
}

/// m x d block of token values; row j belongs to the j-th index of an IndexSet.
template <typename Scalar>
using ActiveBlock = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Full latent state: h_tok * w_tok tokens of d channels, token-row-major then
/// channel. Token (row, col) lives at matrix row `row * w_tok + col`.
template <typename Scalar>
class TokenGrid {
public:
    using Matrix = ActiveBlock<Scalar>;

    TokenGrid() : TokenGrid(GridShape{}) {}

    explicit TokenGrid(const GridShape& shape) : shape_(shape) {
        require(shape.valid(), ErrorKind::Dimension, "grid shape must be >= 1 in every axis, got " + to_string(shape));
        tokens_ = Matrix::Zero(shape.tokens(), shape.d);
    }

    TokenGrid(const GridShape& shape, Matrix tokens) : shape_(shape), tokens_(std::move(tokens)) {
        require(shape.valid(), ErrorKind::Dimension, "grid shape must be >= 1 in every axis, got " + to_string(shape));
        require(tokens_.rows() == shape.tokens() && tokens_.cols() == shape.d, ErrorKind::Dimension,
                "token matrix " + std::to_string(tokens_.rows()) + "x" + std::to_string(tokens_.cols()) +
                    " does not match shape " + to_string(shape));
    }

    static TokenGrid Constant(const GridShape& shape, Scalar value) {
        TokenGrid g(shape);
        g.tokens_.setConstant(value);
        return g;
    }

    const GridShape& shape() const noexcept { return shape_; }
    TokenIndex h_tok() const noexcept { return shape_.h_tok; }
    TokenIndex w_tok() const noexcept { return shape_.w_tok; }
    TokenIndex channels() const noexcept { return shape_.d; }
    TokenIndex size() const noexcept { return shape_.tokens(); }

    Matrix& tokens() noexcept { return tokens_; }
    const Matrix& tokens() const noexcept { return tokens_; }

    auto token(TokenIndex i) { return tokens_.row(i); }
    auto token(TokenIndex i) const { return tokens_.row(i); }

    Scalar& at(TokenIndex row, TokenIndex col, TokenIndex c) { return tokens_(shape_.token_at(row, col), c); }
    Scalar at(TokenIndex row, TokenIndex col, TokenIndex c) const { return tokens_(shape_.token_at(row, col), c); }

    std::span<Scalar> data() noexcept { return {tokens_.data(), static_cast<std::size_t>(tokens_.size())}; }
    std::span<const Scalar> data() const noexcept {
        return {tokens_.data(), static_cast<std::size_t>(tokens_.size())};
    }

    bool all_finite() const { return tokens_.allFinite(); }

    friend bool operator==(const TokenGrid& a, const TokenGrid& b) {
        return a.shape_ == b.shape_ && a.tokens_ == b.tokens_;
    }

private:
    GridShape shape_;
    Matrix tokens_;
};

using Grid = TokenGrid<float>;
using Block = ActiveBlock<float>;

/// Sorted, duplicate-free subset of the token indices [0, n_total).
class IndexSet {
public:
    IndexSet() = default;

    IndexSet(TokenIndex n_total, std::vector<TokenIndex> indices) : n_total_(n_total), indices_(std::move(indices)) {
        require(n_total_ >= 1, ErrorKind::Dimension, "index set needs n_total >= 1");
        for (std::size_t j = 0; j < indices_.size(); ++j) {
            if (indices_[j] < 0 || indices_[j] >= n_total_)
                fail(ErrorKind::Dimension,
                     "index " + std::to_string(indices_[j]) + " outside [0, " + std::to_string(n_total_) + ")");
            if (j > 0 && indices_[j - 1] >= indices_[j])
                fail(ErrorKind::Dimension, "indices must be strictly increasing");
        }
    }

    static IndexSet from_unsorted(TokenIndex n_total, std::vector<TokenIndex> indices) {
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
        return IndexSet(n_total, std::move(indices));
    }

    static IndexSet full(TokenIndex n_total) {
        std::vector<TokenIndex> all(static_cast<std::size_t>(n_total));
        for (TokenIndex i = 0; i < n_total; ++i) all[static_cast<std::size_t>(i)] = i;
        return IndexSet(n_total, std::move(all));
    }

    TokenIndex n_total() const noexcept { return n_total_; }
    TokenIndex size() const noexcept { return static_cast<TokenIndex>(indices_.size()); }
    bool empty() const noexcept { return indices_.empty(); }
    bool is_full() const noexcept { return size() == n_total_; }
    const std::vector<TokenIndex>& indices() const noexcept { return indices_; }
    TokenIndex operator[](TokenIndex j) const { return indices_[static_cast<std::size_t>(j)]; }

    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    bool contains(TokenIndex i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

    bool includes(const IndexSet& other) const {
        return n_total_ == other.n_total_ &&
               std::includes(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end());
    }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
    TokenIndex n_total_ = 1;
    std::vector<TokenIndex> indices_;
};

namespace detail {

inline void check_set_for(const GridShape& shape, const IndexSet& set) {
    require(set.n_total() == shape.tokens(), ErrorKind::Dimension,
            "index set over " + std::to_string(set.n_total()) + " tokens used with grid " + to_string(shape));
}

template <typename Scalar>
void check_block_for(const ActiveBlock<Scalar>& block, const IndexSet& set, const GridShape& shape) {
    check_set_for(shape, set);
    require(block.rows() == set.size() && block.cols() == shape.d, ErrorKind::Dimension,
            "block " + std::to_string(block.rows()) + "x" + std::to_string(block.cols()) + " does not match " +
                std::to_string(set.size()) + " indices of " + std::to_string(shape.d) + " channels");
}

} // namespace detail

/// Selector transpose: rows of `grid` at `set`, in ascending index order.
template <typename Scalar>
ActiveBlock<Scalar> gather(const TokenGrid<Scalar>& grid, const IndexSet& set) {
    detail::check_set_for(grid.shape(), set);
    ActiveBlock<Scalar> block(set.size(), grid.channels());
    for (TokenIndex j = 0; j < set.size(); ++j) block.row(j) = grid.token(set[j]);
    return block;
}

/// Selector: scatter block rows to their indices, zero elsewhere.
template <typename Scalar>
TokenGrid<Scalar> embed(const ActiveBlock<Scalar>& block, const IndexSet& set, const GridShape& shape) {
    detail::check_block_for(block, set, shape);
    TokenGrid<Scalar> out(shape);
    for (TokenIndex j = 0; j < set.size(); ++j) out.token(set[j]) = block.row(j);
    return out;
}

/// Anchor projector: keep tokens in `set`, zero the rest.
template <typename Scalar>
TokenGrid<Scalar> apply_mask(const TokenGrid<Scalar>& grid, const IndexSet& set) {
    detail::check_set_for(grid.shape(), set);
    TokenGrid<Scalar> out(grid.shape());
    for (TokenIndex i : set) out.token(i) = grid.token(i);
    return out;
}

/// Newly activated tokens between consecutive stages: prev \ cur.
inline IndexSet ring(const IndexSet& prev, const IndexSet& cur) {
    require(prev.n_total() == cur.n_total(), ErrorKind::Dimension, "ring of sets over different token counts");
    require(prev.includes(cur) && cur.size() < prev.size(), ErrorKind::Nesting,
            "current set is not a strict subset of the previous set");
    std::vector<TokenIndex> diff;
    diff.reserve(static_cast<std::size_t>(prev.size() - cur.size()));
    std::set_difference(prev.begin(), prev.end(), cur.begin(), cur.end(), std::back_inserter(diff));
    return IndexSet(prev.n_total(), std::move(diff));
}

/// Tokens not in `set`; empty when `set` is full.
inline IndexSet complement(const IndexSet& set) {
    std::vector<TokenIndex> out;
    out.reserve(static_cast<std::size_t>(set.n_total() - set.size()));
    auto it = set.begin();
    for (TokenIndex i = 0; i < set.n_total(); ++i) {
        if (it != set.end() && *it == i) {
            ++it;
            continue;
        }
        out.push_back(i);
    }
    return IndexSet(set.n_total(), std::move(out));
}

/// Union of two sets over the same token count.
inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
    require(a.n_total() == b.n_total(), ErrorKind::Dimension, "union of sets over different token counts");
    std::vector<TokenIndex> out;
    out.reserve(static_cast<std::size_t>(a.size() + b.size()));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return IndexSet(a.n_total(), std::move(out));
}

struct ChainStatus {
    bool ok = true;
    std::size_t failed_at = 0; // position in the chain of the offending set
    std::string message;

    explicit operator bool() const noexcept { return ok; }
};

/// Checks Omega_K ⊂ ... ⊂ Omega_0 = {0..N-1}; `chain` is ordered sparsest first.
inline ChainStatus validate_chain(std::span<const IndexSet> chain) {
    if (chain.empty()) return {false, 0, "empty chain"};
    const TokenIndex n = chain.back().n_total();
    for (std::size_t k = 0; k < chain.size(); ++k) {
        if (chain[k].n_total() != n) return {false, k, "set " + std::to_string(k) + " has a different token count"};
        if (chain[k].empty()) return {false, k, "set " + std::to_string(k) + " is empty"};
    }
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
        const IndexSet& inner = chain[k];
        const IndexSet& outer = chain[k + 1];
        if (!outer.includes(inner)) {
            for (TokenIndex i : inner) {
                if (!outer.contains(i))
                    return {false, k,
                            "index " + std::to_string(i) + " of set " + std::to_string(k) + " missing from set " +
                                std::to_string(k + 1)};
            }
        }
        if (inner.size() == outer.size())
            return {false, k, "set " + std::to_string(k) + " is not a strict subset of set " + std::to_string(k + 1)};
    }
    if (!chain.back().is_full()) return {false, chain.size() - 1, "last set does not cover all tokens"};
    return {};
}

} // namespace jit
