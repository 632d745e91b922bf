#include "varnet/autodiff.hpp"

#include <algorithm>

namespace varnet {

std::vector<double> Tape::grad(const Var& loss, std::span<const Var> targets) const {
    for (const Var& t : targets) {
        if (t.is_literal() || t.tape != this) throw TapeMismatch();
    }
    std::vector<double> out(targets.size(), 0.0);
    if (loss.is_literal()) return out;  // constant loss: all-zero gradient
    if (loss.tape != this) throw TapeMismatch();

    adjoint_.assign(nodes_.size(), 0.0);
    adjoint_[static_cast<std::size_t>(loss.node)] = 1.0;
    for (std::int32_t i = loss.node; i >= 0; --i) {
        const double a = adjoint_[static_cast<std::size_t>(i)];
        if (a == 0.0) continue;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        adjoint_[static_cast<std::size_t>(n.p0)] += a * n.d0;
        adjoint_[static_cast<std::size_t>(n.p1)] += a * n.d1;
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
        out[k] = adjoint_[static_cast<std::size_t>(targets[k].node)];
    }
    return out;
}

std::vector<double> grad(const Var& loss, std::span<const Var> targets) {
    if (loss.is_literal()) {
        for (const Var& t : targets) {
            if (t.is_literal()) throw TapeMismatch();
        }
        return std::vector<double>(targets.size(), 0.0);
    }
    return loss.tape->grad(loss, targets);
}

}  // namespace varnet
