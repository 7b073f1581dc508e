#pragma once

#include <string>

#include "jit/grid.hpp"

namespace jit {

/// Velocity model evaluated on the active tokens only. Implementations must
/// return a block of the same shape as `active`, be deterministic in
/// (active, indices, t) and be safe to call concurrently.
class VelocityField {
public:
    virtual ~VelocityField() = default;

    virtual Block evaluate(const Block& active, const IndexSet& indices, double t) const = 0;
    virtual std::string descriptor() const = 0;
};

} // namespace jit
