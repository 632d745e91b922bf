#include "varnet/loss.hpp"

#include "varnet/errors.hpp"

namespace varnet {

Combinator combinator_from_string(const std::string& s) {
    if (s == "weighted_sum" || s == "weighted-sum") return Combinator::weighted_sum;
    if (s == "sum") return Combinator::sum;
    if (s == "one_to_one_mean" || s == "one-to-one-mean") return Combinator::one_to_one_mean;
    if (s == "one_to_one_sum" || s == "one-to-one-sum") return Combinator::one_to_one_sum;
    throw ParseError("unknown combinator '" + s + "'");
}

std::string to_string(Combinator c) {
    switch (c) {
        case Combinator::weighted_sum: return "weighted_sum";
        case Combinator::sum: return "sum";
        case Combinator::one_to_one_mean: return "one_to_one_mean";
        case Combinator::one_to_one_sum: return "one_to_one_sum";
    }
    return "?";
}

namespace {

void require_nonempty(std::span<const NdArray<Var>> eqs, std::span<const Var> bcs) {
    if (eqs.empty() && bcs.empty()) throw EmptyLoss();
}

double weight_at(std::span<const double> weights, std::size_t i) {
    return weights.empty() ? 1.0 : weights[i];
}

Var bc_square_sum(Var acc, std::span<const Var> bcs, std::span<const double> weights) {
    for (std::size_t l = 0; l < bcs.size(); ++l) {
        acc = acc + affine(bcs[l] * bcs[l], weight_at(weights, l), 0.0);
    }
    return acc;
}

/// Per-point sum of (weighted) squared equation residuals, ascending equation
/// then component. Shared by sum/one_to_one so their reductions match exactly.
Var point_density(std::span<const NdArray<Var>> eqs, std::span<const double> weights, int t) {
    Var d = literal(0.0);
    for (std::size_t e = 0; e < eqs.size(); ++e) {
        const auto& r = eqs[e];
        const double w = weight_at(weights, e);
        const int comps = r.dim(1);
        for (int c = 0; c < comps; ++c) {
            const Var& v = r(t, c);
            d = d + affine(v * v, w, 0.0);
        }
    }
    return d;
}

}  // namespace

Var weighted_sum_combinator(std::span<const NdArray<Var>> eqs, std::span<const Var> bcs,
                            std::span<const double> eq_weights,
                            std::span<const double> bc_weights) {
    require_nonempty(eqs, bcs);
    Var total = literal(0.0);
    for (std::size_t e = 0; e < eqs.size(); ++e) {
        const auto& r = eqs[e];
        const int n = r.dim(0), comps = r.dim(1);
        Var acc = literal(0.0);
        for (int t = 0; t < n; ++t) {
            for (int c = 0; c < comps; ++c) {
                const Var& v = r(t, c);
                acc = acc + v * v;
            }
        }
        total = total + affine(acc, weight_at(eq_weights, e) / static_cast<double>(n * comps), 0.0);
    }
    return bc_square_sum(total, bcs, bc_weights);
}

Var sum_combinator(std::span<const NdArray<Var>> eqs, std::span<const Var> bcs,
                   std::span<const double> eq_weights, std::span<const double> bc_weights) {
    require_nonempty(eqs, bcs);
    Var total = literal(0.0);
    if (!eqs.empty()) {
        const int n = eqs[0].dim(0);
        for (int t = 0; t < n; ++t) total = total + point_density(eqs, eq_weights, t);
    }
    return bc_square_sum(total, bcs, bc_weights);
}

Var one_to_one_combinator(std::span<const NdArray<Var>> eqs, std::span<const Var> bcs, bool mean,
                          std::vector<Var>* density_out, std::span<const double> eq_weights,
                          std::span<const double> bc_weights) {
    require_nonempty(eqs, bcs);
    Var total = literal(0.0);
    int n = 0;
    if (!eqs.empty()) {
        n = eqs[0].dim(0);
        for (int t = 0; t < n; ++t) {
            Var d = point_density(eqs, eq_weights, t);
            if (density_out) density_out->push_back(d);
            total = total + d;
        }
        if (mean) total = total / static_cast<double>(n);
    }
    return bc_square_sum(total, bcs, bc_weights);
}

Var combine(Combinator c, std::span<const NdArray<Var>> eqs, std::span<const Var> bcs,
            std::span<const double> eq_weights, std::span<const double> bc_weights) {
    switch (c) {
        case Combinator::weighted_sum:
            return weighted_sum_combinator(eqs, bcs, eq_weights, bc_weights);
        case Combinator::sum: return sum_combinator(eqs, bcs, eq_weights, bc_weights);
        case Combinator::one_to_one_mean:
            return one_to_one_combinator(eqs, bcs, true, nullptr, eq_weights, bc_weights);
        case Combinator::one_to_one_sum:
            return one_to_one_combinator(eqs, bcs, false, nullptr, eq_weights, bc_weights);
    }
    throw Error("unreachable combinator");
}

namespace {

/// Flattened jet components for one evaluation: layout [j][component].
std::vector<Var> flatten_jets(const std::vector<Jet>& jets, int components) {
    std::vector<Var> comps(jets.size() * static_cast<std::size_t>(components));
    for (std::size_t j = 0; j < jets.size(); ++j) {
        for (int c = 0; c < components; ++c) {
            comps[j * static_cast<std::size_t>(components) + static_cast<std::size_t>(c)] =
                jets[j].comp[c];
        }
    }
    return comps;
}

std::vector<Var> primal_of(const DerivativeStack& stack, int t) {
    std::vector<Var> y;
    y.reserve(static_cast<std::size_t>(stack.output_dim()));
    for (int j = 0; j < stack.output_dim(); ++j) y.push_back(stack.value(t, j));
    return y;
}

}  // namespace

SolverLoss solver_loss(std::span<const Equation> equations,
                       std::span<const BoundaryCondition> bcs, const Ansatz& f,
                       const DerivativeStack& stack, const Box& domain, Combinator combinator) {
    if (equations.empty() && bcs.empty()) throw EmptyLoss();
    for (const Equation& e : equations) {
        if (e.order() > stack.max_order()) throw OrderUnsupported(e.order(), stack.max_order());
    }
    for (const BoundaryCondition& b : bcs) {
        if (b.residual.order() > stack.max_order()) {
            throw OrderUnsupported(b.residual.order(), stack.max_order());
        }
    }

    SolverLoss out;
    const int N = stack.num_points();
    const int C = stack.space().components();

    for (const Equation& eq : equations) {
        NdArray<Var> res;
        for (int t = 0; t < N; ++t) {
            const std::vector<Var> y = primal_of(stack, t);
            const std::span<const Var> comps(&stack.component(t, 0, 0),
                                             static_cast<std::size_t>(stack.output_dim()) * C);
            const PointSample p{domain.points().row(t), y, &stack.space(), comps};
            const std::vector<Var> r = eq(p);
            if (t == 0) res = NdArray<Var>({N, static_cast<int>(r.size())});
            if (static_cast<int>(r.size()) != res.dim(1)) {
                throw ShapeMismatch("residual component count changed between points");
            }
            for (std::size_t c = 0; c < r.size(); ++c) {
                res(t, static_cast<int>(c)) = r[c];
            }
        }
        out.equation_residuals.push_back(std::move(res));
    }

    for (const BoundaryCondition& b : bcs) {
        if (static_cast<int>(b.anchor.size()) != stack.input_dim()) {
            throw DimensionMismatch("boundary anchor dimension does not match domain");
        }
        const std::vector<Jet> jets = f.eval(stack.space(), b.anchor);
        const std::vector<Var> comps = flatten_jets(jets, C);
        std::vector<Var> y;
        y.reserve(jets.size());
        for (const Jet& j : jets) y.push_back(j.primal());
        const PointSample p{b.anchor, y, &stack.space(), comps};
        const std::vector<Var> rs = b.residual(p);
        out.bc_component_counts.push_back(static_cast<int>(rs.size()));
        for (const Var& r : rs) out.bc_residuals.push_back(r);
    }

    std::vector<double> eq_weights;
    bool any_weight = false;
    for (const Equation& eq : equations) {
        eq_weights.push_back(eq.weight());
        if (eq.weight() != 1.0) any_weight = true;
    }
    std::vector<double> bc_weights;
    for (std::size_t l = 0; l < bcs.size(); ++l) {
        const double w = bcs[l].residual.weight();
        if (w != 1.0) any_weight = true;
        for (int c = 0; c < out.bc_component_counts[l]; ++c) bc_weights.push_back(w);
    }
    // skip the weight spans entirely in the common all-ones case
    out.loss = any_weight ? combine(combinator, out.equation_residuals, out.bc_residuals,
                                    eq_weights, bc_weights)
                          : combine(combinator, out.equation_residuals, out.bc_residuals);
    return out;
}

MinimizerLoss minimizer_loss(const Functional* functional, std::span<const Constraint> constraints,
                             const DerivativeStack& stack, const Box& domain) {
    if (!functional && constraints.empty()) throw EmptyLoss();
    const BatchView view{&domain, &stack};
    MinimizerLoss out;
    out.functional_value = literal(0.0);
    if (functional) {
        if (functional->order > stack.max_order()) {
            throw OrderUnsupported(functional->order, stack.max_order());
        }
        out.functional_value = functional->fn(view);
    }
    Var loss = out.functional_value;
    for (const Constraint& c : constraints) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
            throw Error("constraint hyperweight must be finite and positive");
        }
        if (c.order > stack.max_order()) throw OrderUnsupported(c.order, stack.max_order());
        const Var value = c.fn(view);
        out.constraint_values.push_back(value);
        loss = loss + value * value * c.weight;
    }
    out.loss = loss;
    return out;
}

std::vector<double> loss_density(const SolverLoss& parts, std::span<const BoundaryCondition> bcs,
                                 const Box& domain) {
    std::vector<double> density(static_cast<std::size_t>(domain.num_points()), 0.0);
    for (const auto& r : parts.equation_residuals) {
        for (int t = 0; t < r.dim(0); ++t) {
            for (int c = 0; c < r.dim(1); ++c) {
                density[static_cast<std::size_t>(t)] += r(t, c).value * r(t, c).value;
            }
        }
    }
    // boundary squares are attributed to the grid point nearest their anchor
    std::size_t offset = 0;
    for (std::size_t l = 0; l < bcs.size(); ++l) {
        const int t = nearest_index(domain, bcs[l].anchor);
        for (int c = 0; c < parts.bc_component_counts[l]; ++c, ++offset) {
            const double v = parts.bc_residuals[offset].value;
            density[static_cast<std::size_t>(t)] += v * v;
        }
    }
    return density;
}

}  // namespace varnet
