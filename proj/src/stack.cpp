#include "varnet/stack.hpp"

#include "varnet/errors.hpp"

namespace varnet {

Ansatz Ansatz::of(const Model& model, std::span<const Var> staged) {
    Ansatz a;
    a.input_dim = model.input_dim();
    a.output_dim = model.output_dim();
    std::vector<Var> params(staged.begin(), staged.end());
    a.eval = [&model, params = std::move(params)](const JetSpace& space,
                                                  std::span<const double> x) {
        return model.forward_jets(space, x, params);
    };
    return a;
}

Ansatz Ansatz::values_of(const Model& model) {
    Ansatz a;
    a.input_dim = model.input_dim();
    a.output_dim = model.output_dim();
    std::vector<Var> params;
    params.reserve(static_cast<std::size_t>(model.parameter_count()));
    for (double p : model.parameters()) params.push_back(literal(p));
    a.eval = [&model, params = std::move(params)](const JetSpace& space,
                                                  std::span<const double> x) {
        return model.forward_jets(space, x, params);
    };
    return a;
}

DerivativeStack::DerivativeStack(const Ansatz& f, const NdArray<double>& points, int max_order,
                                 Tape& tape)
    : num_points_(points.dim(0)),
      input_dim_(points.dim(1)),
      output_dim_(f.output_dim),
      max_order_(max_order) {
    if (f.input_dim != input_dim_) {
        throw DimensionMismatch("points dimension does not match ansatz input_dim");
    }
    space_ = std::make_unique<JetSpace>(tape, input_dim_, max_order);
    components_ = space_->components();
    data_.resize(static_cast<std::size_t>(num_points_) * output_dim_ * components_);
    for (int t = 0; t < num_points_; ++t) {
        const std::vector<Jet> out = f.eval(*space_, points.row(t));
        if (static_cast<int>(out.size()) != output_dim_) {
            throw ShapeMismatch("ansatz returned wrong number of outputs");
        }
        for (int j = 0; j < output_dim_; ++j) {
            for (int c = 0; c < components_; ++c) {
                data_[(static_cast<std::size_t>(t) * output_dim_ + j) * components_ + c] =
                    out[static_cast<std::size_t>(j)].comp[c];
            }
        }
    }
}

NdArray<Var> DerivativeStack::entry(int order) const {
    if (order < 0 || order > max_order_) throw OrderUnsupported(order, max_order_);
    std::vector<int> shape{num_points_};
    for (int k = 0; k < order; ++k) shape.push_back(input_dim_);
    shape.push_back(output_dim_);
    NdArray<Var> out(shape);
    std::vector<int> axes(static_cast<std::size_t>(order), 0);
    const std::int64_t tuples = out.size() / (static_cast<std::int64_t>(num_points_) * output_dim_);
    for (int t = 0; t < num_points_; ++t) {
        std::fill(axes.begin(), axes.end(), 0);
        for (std::int64_t u = 0; u < tuples; ++u) {
            const int comp = space_->index_of(axes);
            std::int64_t base = (static_cast<std::int64_t>(t) * tuples + u) * output_dim_;
            for (int j = 0; j < output_dim_; ++j) {
                out.at_flat(base + j) = component(t, j, comp);
            }
            for (int k = order - 1; k >= 0; --k) {
                if (++axes[static_cast<std::size_t>(k)] < input_dim_) break;
                axes[static_cast<std::size_t>(k)] = 0;
            }
        }
    }
    return out;
}

NdArray<Var> DerivativeStack::hessian_view(int t) const {
    if (max_order_ < 2) throw OrderUnsupported(2, max_order_);
    NdArray<Var> out({input_dim_, input_dim_, output_dim_});
    for (int i1 = 0; i1 < input_dim_; ++i1) {
        for (int i2 = 0; i2 < input_dim_; ++i2) {
            for (int j = 0; j < output_dim_; ++j) {
                out(i1, i2, j) = d2(t, i1, i2, j);
            }
        }
    }
    return out;
}

DerivativeStack derivative_stack(const Ansatz& f, const NdArray<double>& points, int max_order,
                                 Tape& tape) {
    return DerivativeStack(f, points, max_order, tape);
}

}  // namespace varnet
