#pragma once

#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "varnet/sampling.hpp"
#include "varnet/stack.hpp"
#include "varnet/tensor.hpp"

namespace varnet {

/// First-derivative view at one point: dy(i, j) = d_i y_j.
class Jac {
  public:
    Jac(const JetSpace& space, std::span<const Var> comps)
        : space_(&space), comps_(comps), stride_(space.components()) {}
    const Var& operator()(int i, int j) const {
        const int a[] = {i};
        return comps_[static_cast<std::size_t>(j * stride_ + space_->index_of(a))];
    }

  private:
    const JetSpace* space_;
    std::span<const Var> comps_;
    int stride_;
};

/// Second-derivative view at one point: d2y(i1, i2, j).
class Hess {
  public:
    Hess(const JetSpace& space, std::span<const Var> comps)
        : space_(&space), comps_(comps), stride_(space.components()) {}
    const Var& operator()(int i1, int i2, int j) const {
        const int a[] = {i1, i2};
        return comps_[static_cast<std::size_t>(j * stride_ + space_->index_of(a))];
    }

  private:
    const JetSpace* space_;
    std::span<const Var> comps_;
    int stride_;
};

/// One domain point's values and derivatives, as handed to residuals.
struct PointSample {
    std::span<const double> x;
    std::span<const Var> y;
    const JetSpace* space;
    std::span<const Var> comps;  // all jet components, [j][component]

    Jac dy() const { return Jac(*space, comps); }
    Hess d2y() const { return Hess(*space, comps); }
};

namespace detail {

template <class R>
std::vector<Var> to_residual_vector(R&& r) {
    if constexpr (std::is_convertible_v<R, Var>) {
        return {std::forward<R>(r)};
    } else {
        return std::forward<R>(r);
    }
}

}  // namespace detail

/// A local residual E(x, y, dy, d2y, ...). The derivative order is inferred
/// from the callable's arity, mirroring how the number of inputs determines
/// the order of the equation; an explicit-order constructor covers everything
/// else.
class Equation {
  public:
    using RawFn = std::function<std::vector<Var>(const PointSample&)>;

    Equation(int order, RawFn fn) : order_(order), fn_(std::move(fn)) {}

    template <class F,
              class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, Equation> &&
                                       !std::is_convertible_v<F, RawFn>>>
    Equation(F&& f) {  // NOLINT: implicit by design, mirrors equation syntax
        using X = std::span<const double>;
        using Y = std::span<const Var>;
        if constexpr (std::is_invocable_v<F, X, Y, const Jac&, const Hess&>) {
            order_ = 2;
            fn_ = [f = std::forward<F>(f)](const PointSample& p) {
                return detail::to_residual_vector(f(p.x, p.y, p.dy(), p.d2y()));
            };
        } else if constexpr (std::is_invocable_v<F, X, Y, const Jac&>) {
            order_ = 1;
            fn_ = [f = std::forward<F>(f)](const PointSample& p) {
                return detail::to_residual_vector(f(p.x, p.y, p.dy()));
            };
        } else if constexpr (std::is_invocable_v<F, X, Y>) {
            order_ = 0;
            fn_ = [f = std::forward<F>(f)](const PointSample& p) {
                return detail::to_residual_vector(f(p.x, p.y));
            };
        } else {
            static_assert(std::is_invocable_v<F, X, Y>,
                          "residual must be callable as f(x, y[, dy[, d2y]])");
        }
    }

    int order() const { return order_; }
    std::vector<Var> operator()(const PointSample& p) const { return fn_(p); }

    /// Per-residual weight: multiplies this equation's squared contribution
    /// inside every combinator. Defaults to 1.
    double weight() const { return weight_; }
    Equation& with_weight(double w) {
        weight_ = w;
        return *this;
    }

  private:
    int order_ = 0;
    double weight_ = 1.0;
    RawFn fn_;
};

/// A residual pinned to a single anchor point, evaluated there by a fresh
/// forward pass at the exact coordinate (never snapped to the grid). The
/// residual's weight scales the boundary square in every combinator.
struct BoundaryCondition {
    std::vector<double> anchor;
    Equation residual;
};

template <class F>
BoundaryCondition bc(double x, F&& f) {
    return BoundaryCondition{{x}, Equation(std::forward<F>(f))};
}
template <class F>
BoundaryCondition bc(std::vector<double> anchor, F&& f) {
    return BoundaryCondition{std::move(anchor), Equation(std::forward<F>(f))};
}

/// Whole-batch view handed to functionals and constraints.
struct BatchView {
    const Box* domain;
    const DerivativeStack* stack;

    int num_points() const { return stack->num_points(); }
    double x(int t, int i) const { return domain->points()(t, i); }
    Var y(int t, int j) const { return stack->value(t, j); }
    Var d1(int t, int i, int j) const { return stack->d1(t, i, j); }
    Var d2(int t, int i1, int i2, int j) const { return stack->d2(t, i1, i2, j); }

    std::vector<Var> y_column(int j) const {
        std::vector<Var> out;
        out.reserve(static_cast<std::size_t>(num_points()));
        for (int t = 0; t < num_points(); ++t) out.push_back(y(t, j));
        return out;
    }
    std::vector<Var> d1_column(int i, int j) const {
        std::vector<Var> out;
        out.reserve(static_cast<std::size_t>(num_points()));
        for (int t = 0; t < num_points(); ++t) out.push_back(d1(t, i, j));
        return out;
    }
};

/// Scalar functional F[f] of the whole batch. The derivative order must be
/// declared (batch callables have fixed arity). Scalar by type: the C++
/// signature makes a non-scalar functional unrepresentable.
struct Functional {
    int order;
    std::function<Var(const BatchView&)> fn;
};

/// Scalar constraint with its hyperweight: contributes weight * C^2.
struct Constraint {
    std::string name;
    int order;
    std::function<Var(const BatchView&)> fn;
    double weight;
};

enum class Combinator { weighted_sum, sum, one_to_one_mean, one_to_one_sum };

Combinator combinator_from_string(const std::string& s);
std::string to_string(Combinator c);

/// All combinators reduce the equation squares point-major (ascending point,
/// then equation, then component) and append boundary squares after the point
/// reduction. With that canonical order, one_to_one(sum) and sum_combinator
/// agree exactly, not just within rounding.
///
/// `eq_weights`/`bc_weights` scale each residual's squared contribution;
/// empty spans mean all ones (and add no extra arithmetic).
///
/// weighted_sum: sum_e w_e * mean-over-points-and-components(r_e^2)
///               + sum_l w_l * bc_l^2.
Var weighted_sum_combinator(std::span<const NdArray<Var>> equation_residuals,
                            std::span<const Var> bc_residuals,
                            std::span<const double> eq_weights = {},
                            std::span<const double> bc_weights = {});
/// sum: sum over points and components of weighted squares + boundary terms.
Var sum_combinator(std::span<const NdArray<Var>> equation_residuals,
                   std::span<const Var> bc_residuals, std::span<const double> eq_weights = {},
                   std::span<const double> bc_weights = {});
/// one_to_one: per-point density, reduced by mean or sum; optionally exposes
/// the density vector.
Var one_to_one_combinator(std::span<const NdArray<Var>> equation_residuals,
                          std::span<const Var> bc_residuals, bool mean,
                          std::vector<Var>* density_out = nullptr,
                          std::span<const double> eq_weights = {},
                          std::span<const double> bc_weights = {});

Var combine(Combinator c, std::span<const NdArray<Var>> equation_residuals,
            std::span<const Var> bc_residuals, std::span<const double> eq_weights = {},
            std::span<const double> bc_weights = {});

/// Assembled solver loss plus the per-term pieces needed for reporting.
struct SolverLoss {
    Var loss;
    std::vector<NdArray<Var>> equation_residuals;  // per equation: (N, r)
    std::vector<Var> bc_residuals;                 // flattened components
    std::vector<int> bc_component_counts;          // components per boundary condition
};

/// Equations + boundary conditions over a stack. BC residuals come from fresh
/// jet passes of `f` at the exact anchor coordinates.
SolverLoss solver_loss(std::span<const Equation> equations,
                       std::span<const BoundaryCondition> bcs, const Ansatz& f,
                       const DerivativeStack& stack, const Box& domain, Combinator combinator);

/// Assembled minimizer loss: functional value + sum of weight * C^2.
struct MinimizerLoss {
    Var loss;
    Var functional_value;               // literal 0 when no functional
    std::vector<Var> constraint_values;  // raw C_i
};

MinimizerLoss minimizer_loss(const Functional* functional, std::span<const Constraint> constraints,
                             const DerivativeStack& stack, const Box& domain);

/// Per-point loss density (equation squares; boundary squares added at the
/// grid point nearest each anchor). Diagnostic view of the trained solution.
std::vector<double> loss_density(const SolverLoss& parts, std::span<const BoundaryCondition> bcs,
                                 const Box& domain);

}  // namespace varnet
