#include "jit/toy_models.hpp"

#include <cmath>
#include <sstream>

#include "jit/random.hpp"

namespace jit {

double gaussian_flow_velocity(double x, double t, double mu, double sigma1) {
    require(t >= 0.0 && t <= 1.0, ErrorKind::Parameter, "time outside [0, 1]");
    require(sigma1 >= 0.0, ErrorKind::Parameter, "target std-dev must be non-negative");
    const double a = t, b = 1.0 - t;
    const double s2 = sigma1 * sigma1;
    const double denom = a * a * s2 + b * b;
    require(denom > 0.0, ErrorKind::Numerical, "point-mass target is singular at t = 1");
    return mu + ((a * s2 - b) / denom) * (x - a * mu);
}

GaussianFlowField::GaussianFlowField(Grid mu, double sigma1) : mu_(std::move(mu)), sigma1_(sigma1) {
    require(mu_.all_finite(), ErrorKind::Parameter, "target mean must be finite");
    require(sigma1_ >= 0.0 && std::isfinite(sigma1_), ErrorKind::Parameter, "target std-dev must be >= 0");
}

Block GaussianFlowField::evaluate(const Block& active, const IndexSet& indices, double t) const {
    require(indices.n_total() == mu_.size(), ErrorKind::FieldContract, "index set does not match field grid");
    require(active.rows() == indices.size() && active.cols() == mu_.channels(), ErrorKind::FieldContract,
            "active block shape does not match indices");
    Block out(active.rows(), active.cols());
    for (TokenIndex j = 0; j < active.rows(); ++j) {
        const auto target = mu_.token(indices[j]);
        for (TokenIndex c = 0; c < active.cols(); ++c)
            out(j, c) = static_cast<float>(gaussian_flow_velocity(active(j, c), t, target(c), sigma1_));
    }
    return out;
}

std::string GaussianFlowField::descriptor() const {
    std::ostringstream os;
    os << "gaussian-flow(" << to_string(mu_.shape()) << ", sigma1=" << sigma1_ << ")";
    return os.str();
}

Grid make_target_image(const std::string& kind, const GridShape& shape, const TargetParams& params) {
    Grid g(shape);
    const TokenIndex n = shape.tokens();
    if (kind == "smooth-gradient") {
        for (TokenIndex i = 0; i < n; ++i) {
            const double u = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
            g.token(i).setConstant(static_cast<float>(params.low + (params.high - params.low) * u));
        }
    } else if (kind == "checkerboard") {
        for (TokenIndex i = 0; i < n; ++i)
            g.token(i).setConstant((shape.row_of(i) + shape.col_of(i)) % 2 == 0 ? 1.0f : -1.0f);
    } else if (kind == "gaussian-bump") {
        const double width =
            params.bump_width > 0.0 ? params.bump_width : static_cast<double>(std::min(shape.h_tok, shape.w_tok)) / 6.0;
        require(width > 0.0, ErrorKind::Parameter, "bump width must be positive");
        const double r0 = static_cast<double>(shape.h_tok / 2), c0 = static_cast<double>(shape.w_tok / 2);
        for (TokenIndex i = 0; i < n; ++i) {
            const double dr = static_cast<double>(shape.row_of(i)) - r0;
            const double dc = static_cast<double>(shape.col_of(i)) - c0;
            g.token(i).setConstant(static_cast<float>(std::exp(-(dr * dr + dc * dc) / (2.0 * width * width))));
        }
    } else {
        fail(ErrorKind::Parameter, "unknown target kind '" + kind + "'");
    }
    return g;
}

Grid reference_solve(const VelocityField& field, const GridShape& shape, std::uint64_t seed,
                     const std::vector<double>& timesteps) {
    require(timesteps.size() >= 2, ErrorKind::Parameter, "reference solve needs at least one step");
    Rng rng(seed, streams::initial_noise);
    Grid y = gaussian_grid(shape, rng);
    const IndexSet all = IndexSet::full(shape.tokens());
    for (std::size_t i = 0; i + 1 < timesteps.size(); ++i) {
        const float dt = static_cast<float>(timesteps[i + 1] - timesteps[i]);
        const Block v = field.evaluate(y.tokens(), all, timesteps[i]);
        require(v.rows() == y.tokens().rows() && v.cols() == y.tokens().cols(), ErrorKind::FieldContract,
                "field returned a block of the wrong shape");
        y.tokens() = y.tokens() + v * dt;
    }
    return y;
}

Grid reference_solve(const VelocityField& field, const GridShape& shape, std::uint64_t seed, int n_fine_steps) {
    require(n_fine_steps >= 1, ErrorKind::Parameter, "need at least one fine step");
    std::vector<double> t(static_cast<std::size_t>(n_fine_steps) + 1);
    for (int i = 0; i <= n_fine_steps; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / n_fine_steps;
    return reference_solve(field, shape, seed, t);
}

double relative_l2_error(const Grid& x, const Grid& ref) {
    require(x.shape() == ref.shape(), ErrorKind::Dimension, "grids differ in shape");
    const Eigen::MatrixXd diff = x.tokens().cast<double>() - ref.tokens().cast<double>();
    const double ref_norm = ref.tokens().cast<double>().norm();
    return ref_norm > 0.0 ? diff.norm() / ref_norm : diff.norm();
}

ReplayField::ReplayField(std::map<ReplayKey, Block> entries, bool strict, std::shared_ptr<const VelocityField> fallback)
    : entries_(std::move(entries)), strict_(strict), fallback_(std::move(fallback)) {
    require(strict_ || fallback_ != nullptr, ErrorKind::Parameter, "non-strict replay needs a fallback field");
}

Block ReplayField::evaluate(const Block& active, const IndexSet& indices, double t) const {
    const auto it = entries_.find(ReplayKey{indices.indices(), t});
    if (it == entries_.end()) {
        require(!strict_, ErrorKind::FieldContract,
                "no recorded evaluation for " + std::to_string(indices.size()) + " tokens at t = " + std::to_string(t));
        return fallback_->evaluate(active, indices, t);
    }
    require(it->second.rows() == active.rows() && it->second.cols() == active.cols(), ErrorKind::FieldContract,
            "recorded block shape does not match request");
    return it->second;
}

std::string ReplayField::descriptor() const {
    return "replay(" + std::to_string(entries_.size()) + " entries" + (strict_ ? ", strict)" : ")");
}

RecordingField::RecordingField(std::shared_ptr<const VelocityField> inner) : inner_(std::move(inner)) {
    require(inner_ != nullptr, ErrorKind::Parameter, "recording needs an inner field");
}

Block RecordingField::evaluate(const Block& active, const IndexSet& indices, double t) const {
    Block out = inner_->evaluate(active, indices, t);
    std::lock_guard lock(mutex_);
    recorded_.insert_or_assign(ReplayKey{indices.indices(), t}, out);
    return out;
}

std::string RecordingField::descriptor() const { return "recording(" + inner_->descriptor() + ")"; }

std::map<ReplayKey, Block> RecordingField::recorded() const {
    std::lock_guard lock(mutex_);
    return recorded_;
}

} // namespace jit
