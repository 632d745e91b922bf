#include <doctest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "varnet/loss.hpp"
#include "varnet/math.hpp"
#include "varnet/util.hpp"

using namespace varnet;

TEST_SUITE_BEGIN("loss");

namespace {

NdArray<Var> residual_of(const std::vector<std::vector<double>>& rows) {
    NdArray<Var> r({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < rows[t].size(); ++c) {
            r(static_cast<int>(t), static_cast<int>(c)) = literal(rows[t][c]);
        }
    }
    return r;
}

NdArray<Var> random_residual(Rng& rng, int n, int comps) {
    NdArray<Var> r({n, comps});
    for (int t = 0; t < n; ++t) {
        for (int c = 0; c < comps; ++c) r(t, c) = literal(rng.uniform(-2.0, 2.0));
    }
    return r;
}

}  // namespace

TEST_CASE("weighted sum of zeros is zero") {
    const NdArray<Var> eqs[] = {residual_of({{0.0}, {0.0}, {0.0}})};
    const Var bcs[] = {literal(0.0)};
    CHECK(weighted_sum_combinator(eqs, bcs).value == 0.0);
}

TEST_CASE("weighted sum with constant residuals") {
    // residual == 2 over N points -> mean square 4; BC residual 3 adds 9.
    const NdArray<Var> eqs[] = {residual_of({{2.0}, {2.0}, {2.0}, {2.0}, {2.0}})};
    CHECK(weighted_sum_combinator(eqs, {}).value == doctest::Approx(4.0).epsilon(1e-15));
    const Var bcs[] = {literal(3.0)};
    CHECK(weighted_sum_combinator(eqs, bcs).value == doctest::Approx(13.0).epsilon(1e-15));
}

TEST_CASE("sum combinator equals weighted sum times N for one equation") {
    Rng rng(11);
    const int n = 7;
    const NdArray<Var> eqs[] = {random_residual(rng, n, 1)};
    const double s = sum_combinator(eqs, {}).value;
    const double w = weighted_sum_combinator(eqs, {}).value;
    CHECK(s == doctest::Approx(w * n).epsilon(1e-14));
    CHECK(s >= w);  // N >= 1, single residual
    const NdArray<Var> zero[] = {residual_of({{0.0}, {0.0}})};
    CHECK(sum_combinator(zero, {}).value == 0.0);
}

TEST_CASE("one_to_one(sum) equals sum_combinator exactly") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 20);
        const int n_eqs = 1 + static_cast<int>(rng.next_u64() % 3);
        std::vector<NdArray<Var>> eqs;
        for (int e = 0; e < n_eqs; ++e) {
            eqs.push_back(random_residual(rng, n, 1 + static_cast<int>(rng.next_u64() % 2)));
        }
        std::vector<Var> bcs;
        for (std::uint64_t b = rng.next_u64() % 3; b > 0; --b) {
            bcs.push_back(literal(rng.uniform(-1.0, 1.0)));
        }
        const Var a = one_to_one_combinator(eqs, bcs, false);
        const Var b = sum_combinator(eqs, bcs);
        CHECK(a.value == b.value);  // bit-exact by canonical accumulation order
    }
}

TEST_CASE("one_to_one density and mean reduction") {
    const NdArray<Var> eqs[] = {residual_of({{1.0}, {2.0}, {3.0}})};
    std::vector<Var> density;
    const Var total = one_to_one_combinator(eqs, {}, false, &density);
    REQUIRE(density.size() == 3);
    CHECK(density[0].value == 1.0);
    CHECK(density[1].value == 4.0);
    CHECK(density[2].value == 9.0);
    CHECK(total.value == 14.0);
    CHECK(one_to_one_combinator(eqs, {}, true).value == doctest::Approx(14.0 / 3).epsilon(1e-15));
}

TEST_CASE("combinators are zero iff every residual is zero") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        std::vector<NdArray<Var>> eqs{random_residual(rng, n, 1)};
        std::vector<Var> bcs{literal(rng.uniform(-1.0, 1.0))};
        // force one nonzero entry so "zero" can only come from cancellation bugs
        const bool any_nonzero = [&] {
            for (const Var& v : eqs[0].flat()) {
                if (v.value != 0.0) return true;
            }
            return bcs[0].value != 0.0;
        }();
        for (Combinator c : {Combinator::weighted_sum, Combinator::sum,
                             Combinator::one_to_one_mean, Combinator::one_to_one_sum}) {
            const double v = combine(c, eqs, bcs).value;
            CHECK(v >= 0.0);
            if (any_nonzero) CHECK(v > 0.0);
        }
    }
    std::vector<NdArray<Var>> zero_eqs{residual_of({{0.0, 0.0}, {0.0, 0.0}})};
    std::vector<Var> zero_bcs{literal(0.0)};
    for (Combinator c : {Combinator::weighted_sum, Combinator::sum, Combinator::one_to_one_mean,
                         Combinator::one_to_one_sum}) {
        CHECK(combine(c, zero_eqs, zero_bcs).value == 0.0);
    }
    CHECK_THROWS_AS((void)combine(Combinator::sum, {}, {}), EmptyLoss);
}

TEST_CASE("per-residual weights scale their squared contributions") {
    const NdArray<Var> eqs[] = {residual_of({{1.0}, {1.0}}), residual_of({{2.0}, {2.0}})};
    const Var bcs[] = {literal(3.0)};
    const double eq_w[] = {1.0, 10.0};
    const double bc_w[] = {2.0};
    // weighted_sum: 1*1 + 10*4 + 2*9 = 59; sum: (1+1) + 10*(4+4) + 2*9 = 100
    CHECK(weighted_sum_combinator(eqs, bcs, eq_w, bc_w).value ==
          doctest::Approx(59.0).epsilon(1e-15));
    CHECK(sum_combinator(eqs, bcs, eq_w, bc_w).value == doctest::Approx(100.0).epsilon(1e-15));
    // one_to_one(sum) keeps tracking sum_combinator under weights
    CHECK(one_to_one_combinator(eqs, bcs, false, nullptr, eq_w, bc_w).value ==
          sum_combinator(eqs, bcs, eq_w, bc_w).value);
    // all-ones weights reproduce the unweighted value bit-for-bit
    const double ones[] = {1.0, 1.0};
    const double one_bc[] = {1.0};
    CHECK(sum_combinator(eqs, bcs, ones, one_bc).value == sum_combinator(eqs, bcs).value);

    // through solver_loss: an equation with weight w contributes w times more
    const int dims[] = {1, 2, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 4);
    Box b = box(0.0, 1.0, 4);
    Tape tape;
    const auto staged = m.stage(tape);
    const Ansatz f = Ansatz::of(m, staged);
    DerivativeStack stack = derivative_stack(f, b.points(), 0, tape);
    auto resid = [](std::span<const double>, std::span<const Var> y) -> Var {
        return y[0] - 0.5;
    };
    const Equation plain[] = {Equation(resid)};
    const Equation scaled[] = {Equation(resid).with_weight(10.0)};
    const double base =
        solver_loss(plain, {}, f, stack, b, Combinator::weighted_sum).loss.value;
    const double boosted =
        solver_loss(scaled, {}, f, stack, b, Combinator::weighted_sum).loss.value;
    CHECK(boosted == doctest::Approx(10.0 * base).epsilon(1e-14));
}

TEST_CASE("solver loss vanishes on an exact solution of y' = y") {
    // exp through the jet engine satisfies the equation bit-exactly: the first
    // derivative component is the same Var as the primal.
    Ansatz expf;
    expf.input_dim = 1;
    expf.output_dim = 1;
    expf.eval = [](const JetSpace& sp, std::span<const double> x) {
        return std::vector<Jet>{exp(sp.input(x[0], 0))};
    };
    Box b = box(0.0, 1.0, 11);
    Tape tape;
    DerivativeStack stack = derivative_stack(expf, b.points(), 1, tape);
    const Equation eqs[] = {Equation(
        [](std::span<const double>, std::span<const Var> y, const Jac& dy) -> Var {
            return dy(0, 0) - y[0];
        })};
    const SolverLoss sl =
        solver_loss(eqs, {}, expf, stack, b, Combinator::weighted_sum);
    CHECK(sl.loss.value == 0.0);
}

TEST_CASE("residual order is inferred from arity") {
    const Equation order0(
        [](std::span<const double>, std::span<const Var> y) -> Var { return y[0]; });
    const Equation order1(
        [](std::span<const double>, std::span<const Var>, const Jac& dy) -> Var {
            return dy(0, 0);
        });
    const Equation order2([](std::span<const double> x, std::span<const Var> y, const Jac&,
                             const Hess& d2y) -> Var { return d2y(0, 0, 0) * -0.5 + y[0] * x[0]; });
    CHECK(order0.order() == 0);
    CHECK(order1.order() == 1);
    CHECK(order2.order() == 2);  // four inputs -> second order
}

TEST_CASE("boundary-only loss with a zero model") {
    const int dims[] = {1, 3, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 1);
    std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
    Tape tape;
    const auto staged = m.stage(tape);
    Box b = box(-1.0, 1.0, 5);
    const Ansatz f = Ansatz::of(m, staged);
    DerivativeStack stack = derivative_stack(f, b.points(), 0, tape);
    const BoundaryCondition bcs[] = {
        bc(0.0, [](std::span<const double>, std::span<const Var> y) -> Var { return y[0] - 1.0; })};
    const SolverLoss sl = solver_loss({}, bcs, f, stack, b, Combinator::weighted_sum);
    CHECK(sl.loss.value == 1.0);  // (0 - 1)^2
    CHECK(sl.bc_component_counts == std::vector<int>{1});
}

TEST_CASE("boundary anchors use the exact coordinate") {
    // anchor 0 is off the 100-point grid on [-10, 10]; the residual must see
    // x == 0 exactly, not the nearest grid value.
    const int dims[] = {1, 2, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 2);
    Tape tape;
    const auto staged = m.stage(tape);
    Box b = box(-10.0, 10.0, 100);
    const Ansatz f = Ansatz::of(m, staged);
    DerivativeStack stack = derivative_stack(f, b.points(), 0, tape);
    double seen = -1.0;
    const BoundaryCondition bcs[] = {bc(0.0, [&seen](std::span<const double> x,
                                                     std::span<const Var> y) -> Var {
        seen = x[0];
        return y[0];
    })};
    (void)solver_loss({}, bcs, f, stack, b, Combinator::weighted_sum);
    CHECK(seen == 0.0);
}

TEST_CASE("minimizer loss: constraints and hyperweight linearity") {
    const int dims[] = {1, 2, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 3);
    Tape tape;
    const auto staged = m.stage(tape);
    Box b = box(0.0, 1.0, 4);
    DerivativeStack stack = derivative_stack(Ansatz::of(m, staged), b.points(), 0, tape);

    const Functional zero_f{0, [](const BatchView&) { return literal(0.0); }};
    const Constraint cs[] = {{"c", 0, [](const BatchView&) { return literal(2.0); }, 1e4}};
    const MinimizerLoss ml = minimizer_loss(&zero_f, cs, stack, b);
    CHECK(ml.loss.value == doctest::Approx(4e4).epsilon(1e-15));
    CHECK(ml.constraint_values[0].value == 2.0);

    // scaling every hyperweight by lambda scales the constraint part exactly
    const double lambda = 3.5;
    const Constraint scaled[] = {{"c", 0, cs[0].fn, cs[0].weight * lambda}};
    const MinimizerLoss ml2 = minimizer_loss(&zero_f, scaled, stack, b);
    CHECK(ml2.loss.value == doctest::Approx(ml.loss.value * lambda).epsilon(1e-15));

    const Constraint bad[] = {{"c", 0, cs[0].fn, -1.0}};
    CHECK_THROWS_AS((void)minimizer_loss(&zero_f, bad, stack, b), Error);
    CHECK_THROWS_AS((void)minimizer_loss(nullptr, {}, stack, b), EmptyLoss);
}

TEST_CASE("fit-to-data constraints reproduce the least-squares loss") {
    const int dims[] = {1, 3, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 5);
    Box b = box(0.0, 1.0, 6);
    Tape tape;
    const auto staged = m.stage(tape);
    DerivativeStack stack = derivative_stack(Ansatz::of(m, staged), b.points(), 0, tape);

    std::vector<Constraint> cs;
    std::vector<double> targets;
    for (int t = 0; t < b.num_points(); ++t) {
        const double target = 2.0 * b.points()(t, 0) + 1.0;
        targets.push_back(target);
        cs.push_back({"c" + std::to_string(t), 0,
                      [t, target](const BatchView& v) { return v.y(t, 0) - target; }, 1.0});
    }
    const MinimizerLoss ml = minimizer_loss(nullptr, cs, stack, b);
    double expect = 0.0;
    for (int t = 0; t < b.num_points(); ++t) {
        const double x = b.points()(t, 0);
        const double y = m.values(std::span<const double>(&x, 1))[0];
        expect += (y - targets[static_cast<std::size_t>(t)]) *
                  (y - targets[static_cast<std::size_t>(t)]);
    }
    CHECK(ml.loss.value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("solver loss is parameter-differentiable end to end") {
    const int dims[] = {1, 4, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 77);
    Box b = box(-1.0, 1.0, 8);

    const Equation eq([](std::span<const double> x, std::span<const Var> y, const Jac&,
                         const Hess& d2y) -> Var {
        return d2y(0, 0, 0) * -0.5 + y[0] * (0.125 * x[0] * x[0] - 2.75);
    });
    const std::vector<BoundaryCondition> bcs = {
        bc(0.0, [](std::span<const double>, std::span<const Var> y) -> Var { return y[0]; }),
        bc(0.0, [](std::span<const double>, std::span<const Var>, const Jac& dy) -> Var {
            return dy(0, 0) - 0.86;
        })};

    auto loss_at = [&](std::span<const double> params) {
        Model mm = m;
        std::copy(params.begin(), params.end(), mm.parameters().begin());
        Tape tape;
        const auto staged = mm.stage(tape);
        const Ansatz f = Ansatz::of(mm, staged);
        DerivativeStack stack = derivative_stack(f, b.points(), 2, tape);
        const Equation eqs[] = {eq};
        return solver_loss(eqs, bcs, f, stack, b, Combinator::weighted_sum).loss.value;
    };

    Tape tape;
    const auto staged = m.stage(tape);
    const Ansatz f = Ansatz::of(m, staged);
    DerivativeStack stack = derivative_stack(f, b.points(), 2, tape);
    const Equation eqs[] = {eq};
    const SolverLoss sl = solver_loss(eqs, bcs, f, stack, b, Combinator::weighted_sum);
    const auto g = grad(sl.loss, staged);
    const auto g_fd = testing::fd_grad(loss_at, {m.parameters().begin(), m.parameters().end()});
    CHECK(testing::max_rel_err(g, g_fd) < 1e-5);
}

TEST_CASE("loss density attributes boundary squares to the nearest grid point") {
    const int dims[] = {1, 2, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 9);
    std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
    Box b = box(-1.0, 1.0, 5);
    Tape tape;
    const auto staged = m.stage(tape);
    const Ansatz f = Ansatz::of(m, staged);
    DerivativeStack stack = derivative_stack(f, b.points(), 0, tape);
    const std::vector<BoundaryCondition> bcs = {
        bc(0.1, [](std::span<const double>, std::span<const Var> y) -> Var { return y[0] - 2.0; })};
    const SolverLoss sl = solver_loss({}, bcs, f, stack, b, Combinator::weighted_sum);
    const auto density = loss_density(sl, bcs, b);
    REQUIRE(density.size() == 5);
    CHECK(density[2] == 4.0);  // grid point 0.0 is nearest to anchor 0.1
    CHECK(density[0] == 0.0);
}

TEST_SUITE_END();
