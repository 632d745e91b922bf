#include <doctest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "varnet/sampling.hpp"
#include "varnet/stack.hpp"
#include "varnet/util.hpp"

using namespace varnet;

TEST_SUITE_BEGIN("stack");

namespace {

Ansatz identity_1d() {
    Ansatz a;
    a.input_dim = 1;
    a.output_dim = 1;
    a.eval = [](const JetSpace& space, std::span<const double> x) {
        return std::vector<Jet>{space.input(x[0], 0)};
    };
    return a;
}

Ansatz product_2d() {  // f(x, y) = x*y
    Ansatz a;
    a.input_dim = 2;
    a.output_dim = 1;
    a.eval = [](const JetSpace& space, std::span<const double> x) {
        return std::vector<Jet>{space.input(x[0], 0) * space.input(x[1], 1)};
    };
    return a;
}

}  // namespace

TEST_CASE("identity model stack entries") {
    Tape t;
    Box b = box(-1.0, 1.0, 7);
    DerivativeStack s = derivative_stack(identity_1d(), b.points(), 2, t);
    CHECK(s.num_points() == 7);
    for (int p = 0; p < 7; ++p) {
        CHECK(s.value(p, 0).value == b.points()(p, 0));
        CHECK(s.d1(p, 0, 0).value == 1.0);
        CHECK(s.d2(p, 0, 0, 0).value == 0.0);
    }
}

TEST_CASE("x*y has the antidiagonal Hessian") {
    Tape t;
    Box b = box({Box::Axis{-1, 1, 3}, Box::Axis{-1, 1, 3}});
    DerivativeStack s = derivative_stack(product_2d(), b.points(), 2, t);
    for (int p = 0; p < s.num_points(); ++p) {
        NdArray<Var> h = s.hessian_view(p);
        CHECK(h(0, 0, 0).value == 0.0);
        CHECK(h(0, 1, 0).value == 1.0);
        CHECK(h(1, 0, 0).value == 1.0);
        CHECK(h(1, 1, 0).value == 0.0);
        CHECK(h(0, 1, 0).node == h(1, 0, 0).node);  // aliased canonical Var
    }
}

TEST_CASE("net stack derivatives match finite differences") {
    const int dims[] = {1, 10, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 17);
    Tape t;
    const auto staged = m.stage(t);
    Box b = box(0.3, 0.9, 3);
    DerivativeStack s = derivative_stack(Ansatz::of(m, staged), b.points(), 2, t);
    auto fval = [&](double v) { return m.values(std::span<const double>(&v, 1))[0]; };
    for (int p = 0; p < 3; ++p) {
        const double x = b.points()(p, 0);
        CHECK(testing::rel_err(s.d1(p, 0, 0).value, testing::fd1(fval, x)) < 1e-4);
        CHECK(testing::rel_err(s.d2(p, 0, 0, 0).value, testing::fd2(fval, x)) < 1e-4);
    }
}

TEST_CASE("stack gradients w.r.t. parameters match finite differences") {
    const int dims[] = {2, 3, 2};
    Model m = Model::build(dims, Activation::tanh, Activation::identity, 29);
    Box b = box({Box::Axis{-1, 1, 2}, Box::Axis{-1, 1, 2}});

    Tape t;
    const auto staged = m.stage(t);
    DerivativeStack s = derivative_stack(Ansatz::of(m, staged), b.points(), 2, t);
    const Var target = s.d2(1, 0, 1, 1);
    const auto g = grad(target, staged);

    auto entry_at = [&](std::span<const double> params) {
        Model mm = m;
        std::copy(params.begin(), params.end(), mm.parameters().begin());
        Tape tt;
        const auto st = mm.stage(tt);
        DerivativeStack ss = derivative_stack(Ansatz::of(mm, st), b.points(), 2, tt);
        return ss.d2(1, 0, 1, 1).value;
    };
    const auto g_fd = testing::fd_grad(entry_at, {m.parameters().begin(), m.parameters().end()});
    CHECK(testing::max_rel_err(g, g_fd) < 1e-4);
}

TEST_CASE("single pass economy: one jet pass per point, all orders at once") {
    const int dims[] = {1, 5, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 3);
    Box b = box(-1.0, 1.0, 10);

    // cost of one manual order-2 jet pass
    Tape t1;
    const auto staged1 = m.stage(t1);
    const std::int64_t before1 = t1.size();
    {
        JetSpace space(t1, 1, 2);
        const double x = b.points()(0, 0);
        (void)m.forward_jets(space, std::span<const double>(&x, 1), staged1);
    }
    const std::int64_t per_point = t1.size() - before1;

    // full stack build
    Tape t2;
    const auto staged2 = m.stage(t2);
    const std::int64_t before2 = t2.size();
    DerivativeStack s = derivative_stack(Ansatz::of(m, staged2), b.points(), 2, t2);
    const std::int64_t stack_cost = t2.size() - before2;
    CHECK(stack_cost <= per_point * b.num_points());

    // and strictly cheaper than recomputing order 1 then order 2 separately
    Tape t3;
    const auto staged3 = m.stage(t3);
    const std::int64_t before3 = t3.size();
    (void)derivative_stack(Ansatz::of(m, staged3), b.points(), 1, t3);
    (void)derivative_stack(Ansatz::of(m, staged3), b.points(), 2, t3);
    CHECK(stack_cost < t3.size() - before3);
}

TEST_CASE("dense entry aliases symmetric components") {
    const int dims[] = {3, 4, 2};
    Model m = Model::build(dims, Activation::sin, Activation::identity, 5);
    Tape t;
    const auto staged = m.stage(t);
    Box b = box({Box::Axis{-1, 1, 2}, Box::Axis{-1, 1, 2}, Box::Axis{-1, 1, 2}});
    DerivativeStack s = derivative_stack(Ansatz::of(m, staged), b.points(), 2, t);
    NdArray<Var> e2 = s.entry(2);
    CHECK(e2.shape() == std::vector<int>{8, 3, 3, 2});
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(e2(0, i, j, 1).node == e2(0, j, i, 1).node);
        }
    }
    CHECK(s.entry(0).shape() == std::vector<int>{8, 2});
    CHECK_THROWS_AS((void)s.entry(3), OrderUnsupported);
    CHECK_THROWS_AS((void)derivative_stack(Ansatz::of(m, staged), b.points(), 7, t),
                    OrderUnsupported);
}

TEST_SUITE_END();
