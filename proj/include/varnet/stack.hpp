#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "varnet/jet.hpp"
#include "varnet/network.hpp"
#include "varnet/tensor.hpp"

namespace varnet {

/// Anything that can be evaluated through jets: a model bound to staged
/// parameters, or an ad-hoc differentiable expression in tests and math
/// helpers.
struct Ansatz {
    int input_dim = 0;
    int output_dim = 0;
    std::function<std::vector<Jet>(const JetSpace&, std::span<const double>)> eval;

    /// Model bound to parameters staged on a live tape.
    static Ansatz of(const Model& model, std::span<const Var> staged);

    /// Model with parameters as literals: value-only passes that record no
    /// tape nodes (used by math::derivative and exports).
    static Ansatz values_of(const Model& model);
};

/// Function values and all input-derivatives up to max_order at every
/// training point, built in a single jet pass per point. Each distinct
/// partial is computed exactly once and stored under its sorted multi-index;
/// dense views alias the canonical entry, so permuted index tuples return
/// the identical Var.
class DerivativeStack {
  public:
    DerivativeStack(const Ansatz& f, const NdArray<double>& points, int max_order, Tape& tape);

    int num_points() const { return num_points_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    int max_order() const { return max_order_; }
    const JetSpace& space() const { return *space_; }

    /// Value of output j at point t.
    const Var& value(int t, int j) const { return component(t, j, 0); }

    /// Partial for an arbitrary multi-index (sorted internally).
    const Var& partial(int t, std::span<const int> axes, int j) const {
        return component(t, j, space_->index_of(axes));
    }
    const Var& d1(int t, int i, int j) const {
        const int a[] = {i};
        return component(t, j, space_->index_of(a));
    }
    const Var& d2(int t, int i1, int i2, int j) const {
        const int a[] = {i1, i2};
        return component(t, j, space_->index_of(a));
    }

    /// Dense entry k: shape (N, n, ..., n, m) with k repetitions of n.
    /// Symmetric positions alias the same canonical Var.
    NdArray<Var> entry(int order) const;

    /// Hessian at point t: shape (n, n, m). Requires max_order >= 2.
    NdArray<Var> hessian_view(int t) const;

    const Var& component(int t, int j, int comp) const {
        return data_[(static_cast<std::size_t>(t) * output_dim_ + j) * components_ + comp];
    }

  private:
    int num_points_, input_dim_, output_dim_, max_order_, components_;
    std::unique_ptr<JetSpace> space_;
    std::vector<Var> data_;  // [t][j][component]
};

/// Builds the stack for a model over a batch of points (one order-max_order
/// jet pass per point).
DerivativeStack derivative_stack(const Ansatz& f, const NdArray<double>& points, int max_order,
                                 Tape& tape);

}  // namespace varnet
