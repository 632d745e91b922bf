#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "varnet/autodiff.hpp"
#include "varnet/errors.hpp"
#include "varnet/util.hpp"

namespace varnet {

struct Jet;

/// Shared context for jets over one input space: the tape, the canonical
/// multi-index table for all partials up to `max_order`, and the precomputed
/// Leibniz / Faa di Bruno expansion rules for products and function
/// composition. Mixed partials are stored once under the sorted multi-index,
/// so symmetry holds by construction.
class JetSpace {
  public:
    static constexpr int kMaxOrder = 4;

    JetSpace(Tape& tape, int input_dim, int max_order);

    Tape& tape() const { return *tape_; }
    int input_dim() const { return input_dim_; }
    int max_order() const { return max_order_; }

    /// Number of canonical components: all sorted multi-indices of order
    /// 0..max_order over input_dim axes (order 0 is the primal).
    int components() const { return static_cast<int>(axes_offset_.size()) - 1; }

    int component_order(int id) const { return order_of_[static_cast<std::size_t>(id)]; }

    /// Sorted axes of component `id` (length == its order).
    std::span<const std::int8_t> component_axes(int id) const {
        const auto b = axes_offset_[static_cast<std::size_t>(id)];
        const auto e = axes_offset_[static_cast<std::size_t>(id) + 1];
        return std::span<const std::int8_t>(axes_.data() + b, static_cast<std::size_t>(e - b));
    }

    /// Component id of a (not necessarily sorted) multi-index.
    int index_of(std::span<const int> axes) const;

    /// Jet seeded as the `axis`-th input coordinate: primal = value,
    /// d/dx_axis = 1, everything else 0.
    Jet input(double value, int axis) const;

    /// Jet with a constant primal and all derivatives zero.
    Jet constant(double value) const;

    /// Lifts a tape variable that does not depend on the inputs (e.g. a model
    /// parameter): primal = v, all input-derivatives zero.
    Jet lift(const Var& v) const;

    struct MulTerm {
        std::int32_t a, b;
        double coeff;
    };
    struct ChainTerm {
        std::int8_t deriv_order;  // which derivative of the outer function
        std::int8_t num_blocks;
        std::int32_t block[kMaxOrder];
        double coeff;
    };

    std::span<const MulTerm> mul_terms(int id) const {
        const auto b = mul_offset_[static_cast<std::size_t>(id)];
        const auto e = mul_offset_[static_cast<std::size_t>(id) + 1];
        return std::span<const MulTerm>(mul_terms_.data() + b, static_cast<std::size_t>(e - b));
    }
    std::span<const ChainTerm> chain_terms(int id) const {
        const auto b = chain_offset_[static_cast<std::size_t>(id)];
        const auto e = chain_offset_[static_cast<std::size_t>(id) + 1];
        return std::span<const ChainTerm>(chain_terms_.data() + b, static_cast<std::size_t>(e - b));
    }

  private:
    Tape* tape_;
    int input_dim_;
    int max_order_;

    std::vector<std::int8_t> axes_;
    std::vector<std::int32_t> axes_offset_;  // components()+1 entries
    std::vector<std::int8_t> order_of_;

    std::vector<MulTerm> mul_terms_;
    std::vector<std::int32_t> mul_offset_;
    std::vector<ChainTerm> chain_terms_;
    std::vector<std::int32_t> chain_offset_;
};

/// Truncated multivariate Taylor carrier: one Var per canonical multi-index.
/// Every component is itself differentiable with respect to tape leaves, so
/// input-derivatives remain parameter-differentiable.
struct Jet {
    const JetSpace* space = nullptr;
    detail::FixedVec<Var, 10> comp;

    Jet() = default;
    explicit Jet(const JetSpace& s) : space(&s), comp(s.components()) {}

    Var primal() const { return comp[0]; }

    /// Var holding the partial for the given (unsorted) multi-index.
    Var partial(std::span<const int> axes) const { return comp[space->index_of(axes)]; }
    Var partial(std::initializer_list<int> axes) const {
        return partial(std::span<const int>(axes.begin(), axes.size()));
    }
};

namespace detail {

inline const JetSpace& require_same_space(const Jet& a, const Jet& b) {
    if (a.space != b.space) throw OrderMismatch();
    return *a.space;
}

/// Value and derivatives of a scalar function at a jet's primal, used by the
/// Faa di Bruno expansion. d[0] is the value, d[k] the k-th derivative.
struct OuterDerivs {
    Var d[JetSpace::kMaxOrder + 1];
};

Jet apply_chain(const Jet& f, const OuterDerivs& outer);

}  // namespace detail

Jet operator+(const Jet& f, const Jet& g);
Jet operator-(const Jet& f, const Jet& g);
Jet operator-(const Jet& f);
Jet operator*(const Jet& f, const Jet& g);
Jet operator/(const Jet& f, const Jet& g);

/// Mixed jet/Var arithmetic treats the Var as constant in the inputs.
Jet operator+(const Jet& f, const Var& c);
Jet operator+(const Var& c, const Jet& f);
Jet operator-(const Jet& f, const Var& c);
Jet operator-(const Var& c, const Jet& f);
Jet operator*(const Jet& f, const Var& c);
Jet operator*(const Var& c, const Jet& f);
Jet operator/(const Jet& f, const Var& c);
Jet operator/(const Var& c, const Jet& f);

inline Jet operator+(const Jet& f, double c) { return f + literal(c); }
inline Jet operator+(double c, const Jet& f) { return f + literal(c); }
inline Jet operator-(const Jet& f, double c) { return f - literal(c); }
inline Jet operator-(double c, const Jet& f) { return literal(c) - f; }
inline Jet operator*(const Jet& f, double c) { return f * literal(c); }
inline Jet operator*(double c, const Jet& f) { return f * literal(c); }
inline Jet operator/(const Jet& f, double c) { return f / literal(c); }
inline Jet operator/(double c, const Jet& f) { return literal(c) / f; }

Jet exp(const Jet& f);
Jet log(const Jet& f);
Jet sin(const Jet& f);
Jet cos(const Jet& f);
Jet tanh(const Jet& f);
Jet sigmoid(const Jet& f);
Jet sqrt(const Jet& f);
Jet abs(const Jet& f);
Jet relu(const Jet& f);
Jet pow(const Jet& f, double p);

}  // namespace varnet
