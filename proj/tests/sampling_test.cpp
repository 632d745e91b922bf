#include <doctest.h>

#include <cmath>

#include "varnet/sampling.hpp"

using namespace varnet;

TEST_SUITE_BEGIN("sampling");

TEST_CASE("1-d box endpoints and spacing") {
    Box b = box(0.0, 3.0, 100);
    CHECK(b.num_points() == 100);
    CHECK(b.points()(0, 0) == 0.0);
    CHECK(b.points()(99, 0) == 3.0);
    CHECK(b.spacing(0) == doctest::Approx(3.0 / 99.0).epsilon(1e-15));
}

TEST_CASE("wide symmetric domain includes both endpoints") {
    Box b = box(-10.0, 10.0, 100);
    CHECK(b.points()(0, 0) == -10.0);
    CHECK(b.points()(99, 0) == 10.0);
}

TEST_CASE("2x2 grid in row-major axis order") {
    Box b = box({Box::Axis{0, 1, 2}, Box::Axis{0, 1, 2}});
    REQUIRE(b.num_points() == 4);
    const double expect[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (int t = 0; t < 4; ++t) {
        CHECK(b.points()(t, 0) == expect[t][0]);
        CHECK(b.points()(t, 1) == expect[t][1]);
    }
}

TEST_CASE("equal spacing along every axis") {
    Box b = box(-2.5, 7.25, 37);
    for (int t = 0; t + 1 < b.num_points(); ++t) {
        const double d = b.points()(t + 1, 0) - b.points()(t, 0);
        CHECK(d == doctest::Approx(b.spacing(0)).epsilon(1e-12));
    }
}

TEST_CASE("invalid axes are rejected") {
    CHECK_THROWS_AS(box(1.0, 1.0, 10), InvalidRange);
    CHECK_THROWS_AS(box(2.0, 1.0, 10), InvalidRange);
    CHECK_THROWS_AS(box(0.0, 1.0, 1), InvalidCount);
}

TEST_CASE("nearest index matches brute-force argmin") {
    Box b = box(-10.0, 10.0, 100);

    auto brute = [&](double x) {
        int best = 0;
        double best_d = std::abs(b.points()(0, 0) - x);
        for (int t = 1; t < b.num_points(); ++t) {
            const double d = std::abs(b.points()(t, 0) - x);
            if (d < best_d) {  // strict: ties keep the lower index
                best_d = d;
                best = t;
            }
        }
        return best;
    };

    // x = 0 sits exactly between grid points 49 and 50 (spacing 20/99 means 0
    // itself is not on the grid); the tie must resolve to 49.
    const double zero = 0.0;
    CHECK(nearest_index(b, std::span<const double>(&zero, 1)) == brute(0.0));
    CHECK(nearest_index(b, std::span<const double>(&zero, 1)) == 49);

    for (double x : {-10.0, -9.99, -3.7, 0.1, 5.55, 9.99, 10.0}) {
        CHECK(nearest_index(b, std::span<const double>(&x, 1)) == brute(x));
    }
    const double lo = -10.0, hi = 10.0;
    CHECK(nearest_index(b, std::span<const double>(&lo, 1)) == 0);
    CHECK(nearest_index(b, std::span<const double>(&hi, 1)) == 99);

    const double outside = 10.5;
    CHECK_THROWS_AS((void)nearest_index(b, std::span<const double>(&outside, 1)), OutOfBounds);
}

TEST_CASE("nearest index in two dimensions") {
    Box b = box({Box::Axis{0, 1, 3}, Box::Axis{0, 2, 5}});
    const double p[] = {0.6, 1.1};
    // axis 0: grid {0,.5,1}, nearest to .6 -> 1; axis 1: grid {0,.5,1,1.5,2},
    // nearest to 1.1 -> 2; flat = 1*5+2.
    CHECK(nearest_index(b, p) == 7);
}

TEST_SUITE_END();
