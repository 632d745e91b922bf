#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fd_oracle.hpp"
#include "varnet/network.hpp"
#include "varnet/util.hpp"

using namespace varnet;

TEST_SUITE_BEGIN("network");

TEST_CASE("parameter counts") {
    const int d1[] = {1, 10, 1};
    CHECK(Model::build(d1, Activation::sigmoid, Activation::identity, 1).parameter_count() == 31);
    const int d2[] = {2, 5, 5, 3};
    CHECK(Model::build(d2, Activation::sigmoid, Activation::identity, 1).parameter_count() == 63);
    const int bad[] = {1};
    CHECK_THROWS_AS(Model::build(bad, Activation::sigmoid, Activation::identity, 1), InvalidDims);
    const int bad2[] = {1, 0, 1};
    CHECK_THROWS_AS(Model::build(bad2, Activation::sigmoid, Activation::identity, 1), InvalidDims);
}

TEST_CASE("parameter count formula on randomized dims") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> dims;
        const int layers = 1 + static_cast<int>(rng.next_u64() % 3);
        for (int i = 0; i <= layers; ++i) dims.push_back(1 + static_cast<int>(rng.next_u64() % 7));
        int expect = 0;
        for (int l = 0; l < layers; ++l) expect += dims[l] * dims[l + 1] + dims[l + 1];
        CHECK(Model::build(dims, Activation::tanh, Activation::identity, trial).parameter_count() ==
              expect);
    }
}

TEST_CASE("zero net with identity activations returns zero") {
    const int dims[] = {2, 3, 2};
    Model m = Model::build(dims, Activation::identity, Activation::identity, 5);
    std::fill(m.parameters().begin(), m.parameters().end(), 0.0);
    const double x[] = {1.7, -4.2};
    for (double y : m.values(x)) CHECK(y == 0.0);
}

TEST_CASE("1-1 identity net is an affine map") {
    const int dims[] = {1, 1};
    Model m = Model::build(dims, Activation::identity, Activation::identity, 5);
    m.parameters()[0] = 2.0;  // weight
    m.parameters()[1] = 1.0;  // bias
    const double x = 3.0;
    CHECK(m.values(std::span<const double>(&x, 1))[0] == 7.0);
}

TEST_CASE("forward is deterministic and hidden sigmoid outputs stay in (0,1)") {
    const int dims[] = {1, 6, 6};
    Model m = Model::build(dims, Activation::sigmoid, Activation::sigmoid, 21);
    const double x = 123.0;
    const auto a = m.values(std::span<const double>(&x, 1));
    const auto b = m.values(std::span<const double>(&x, 1));
    for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a[j] == b[j]);
        CHECK(a[j] > 0.0);
        CHECK(a[j] < 1.0);
    }
}

TEST_CASE("build is deterministic in the seed") {
    const int dims[] = {2, 4, 1};
    Model a = Model::build(dims, Activation::tanh, Activation::identity, 77);
    Model b = Model::build(dims, Activation::tanh, Activation::identity, 77);
    Model c = Model::build(dims, Activation::tanh, Activation::identity, 78);
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    CHECK(!std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST_CASE("jet primal is bit-identical to values()") {
    const int dims[] = {2, 5, 3};
    Model m = Model::build(dims, Activation::sigmoid, Activation::tanh, 13);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const double x[] = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto vals = m.values(x);
        Tape t;
        const auto staged = m.stage(t);
        JetSpace space(t, 2, 2);
        const auto jets = m.forward_jets(space, x, staged);
        for (int j = 0; j < 3; ++j) {
            CHECK(jets[static_cast<std::size_t>(j)].primal().value == vals[static_cast<std::size_t>(j)]);
        }
    }
}

TEST_CASE("serialization round-trips bit-exactly") {
    const int dims[] = {2, 7, 2};
    Model m = Model::build(dims, Activation::tanh, Activation::identity, 31337);
    const std::string text = m.to_json();
    Model back = Model::from_json(text);
    REQUIRE(back.parameter_count() == m.parameter_count());
    for (int i = 0; i < m.parameter_count(); ++i) {
        CHECK(back.parameters()[static_cast<std::size_t>(i)] ==
              m.parameters()[static_cast<std::size_t>(i)]);
    }
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const double x[] = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const auto a = m.values(x);
        const auto b = back.values(x);
        CHECK(a[0] == b[0]);
        CHECK(a[1] == b[1]);
    }
}

TEST_CASE("save and load through a file") {
    const int dims[] = {1, 3, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 5);
    const std::string path =
        (std::filesystem::temp_directory_path() / "varnet_model_test.json").string();
    m.save(path);
    Model back = Model::load(path);
    const double x = 0.5;
    CHECK(back.values(std::span<const double>(&x, 1))[0] ==
          m.values(std::span<const double>(&x, 1))[0]);
    std::filesystem::remove(path);
}

TEST_CASE("malformed model documents are rejected") {
    CHECK_THROWS_AS(Model::from_json("{ not json"), ParseError);
    CHECK_THROWS_AS(Model::from_json("{\"format\":\"other\"}"), ParseError);
    CHECK_THROWS_AS(
        Model::from_json(
            R"({"format":"varnet-model-v1","dims":[1,2],"activations":["sigmoid"],"layers":[{"weights":[[0.1]],"biases":[0.0,0.0]}]})"),
        ParseError);
}

TEST_CASE("shape mismatch on forward") {
    const int dims[] = {2, 3, 1};
    Model m = Model::build(dims, Activation::sigmoid, Activation::identity, 5);
    const double x = 1.0;
    CHECK_THROWS_AS((void)m.values(std::span<const double>(&x, 1)), ShapeMismatch);
}

TEST_SUITE_END();
