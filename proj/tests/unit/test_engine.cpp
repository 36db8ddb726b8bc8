#include "helpers.hpp"

#include "../oracle/gradient_check.hpp"
#include "../oracle/reference_net.hpp"

#include "resilinet/engine.hpp"
#include "resilinet/errors.hpp"
#include "resilinet/hardening.hpp"

#include <cmath>
#include <cstring>
#include <doctest.h>
#include <limits>

using namespace resilinet;

TEST_SUITE("engine") {

TEST_CASE("forward agrees with the double-precision reference")
{
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto m = testutil::random_cnn(seed);
        const auto batch = testutil::random_batch(m, 3, seed + 100);
        const Tensor z = forward(m, batch);
        const auto ref = oracle::forward(m, oracle::params_of(m), {batch.data().begin(), batch.data().end()}, 3);
        REQUIRE(z.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(z[i] == doctest::Approx(ref[i]).epsilon(1e-4));
    }
}

TEST_CASE("training-phase forward uses batch statistics")
{
    const auto m = testutil::random_cnn(5);
    const auto batch = testutil::random_batch(m, 4, 9);
    ForwardCache cache;
    const Tensor z = forward(m, batch, cache, Phase::Training);
    const auto ref = oracle::forward(m, oracle::params_of(m), {batch.data().begin(), batch.data().end()}, 4, true);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(z[i] == doctest::Approx(ref[i]).epsilon(1e-4));
}

TEST_CASE("backward matches central finite differences")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (const bool training : {false, true}) {
            const auto m = testutil::random_cnn(seed);
            const auto batch = testutil::random_batch(m, 2, seed + 7);
            const auto r = oracle::check_gradients(m, batch, training, seed);
            CAPTURE(seed);
            CAPTURE(training);
            CHECK(r.max_rel_error < 1e-3);
            CHECK(r.checked > 10 * r.kinks_skipped);
        }
    }
}

TEST_CASE("forward is bitwise deterministic")
{
    const auto m = testutil::random_cnn(8);
    const auto batch = testutil::random_batch(m, 5, 1);
    const Tensor a = forward(m, batch);
    const Tensor b = forward(m, batch);
    CHECK(std::memcmp(a.raw(), b.raw(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("batched and single-sample forward agree bitwise")
{
    const auto m = testutil::random_cnn(4);
    const auto batch = testutil::random_batch(m, 3, 2);
    const Tensor all = forward(m, batch);
    const std::size_t stride = batch.size() / 3;
    for (std::size_t s = 0; s < 3; ++s) {
        Shape shape = batch.shape();
        shape[0] = 1;
        Tensor one(shape, std::vector<float>(batch.raw() + s * stride, batch.raw() + (s + 1) * stride));
        const Tensor z = forward(m, one);
        CHECK(std::memcmp(z.raw(), all.raw() + s * z.size(), z.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("non-finite parameters are executed, not rejected")
{
    auto m = testutil::random_mlp(3, 4, 2, 3);
    m.layers[0].params[slot::weight][0] = std::numeric_limits<float>::infinity();
    const Tensor x({1, 3}, std::vector<float>{0.0f, 0.5f, -0.5f});
    const Tensor z = forward(m, x);
    // inf * 0 is NaN and reaches the logits through the hidden ReLU.
    CHECK(std::isnan(z[0]));
}

TEST_CASE("max pool lets NaN win its window")
{
    ModelGraph m;
    m.input_shape = {1, 2, 2};
    m.num_classes = 1;
    testutil::add_layer(m, LayerSpec::max_pool(2, 2));
    testutil::add_layer(m, LayerSpec::flatten());
    const Tensor x({1, 1, 2, 2}, std::vector<float>{1.0f, std::nanf(""), 3.0f, 2.0f});
    CHECK(std::isnan(forward(m, x)[0]));
}

TEST_CASE("backward rejects stale caches and correction layers")
{
    auto m = testutil::random_mlp(3, 4, 2, 3);
    const auto x = testutil::random_batch(m, 2, 1);
    ForwardCache cache;
    forward(m, x, cache);
    m.layers[0].params[slot::weight][1] += 1.0f;
    CHECK_THROWS_AS(backward(m, cache, Tensor({2, 2})), Error);

    ModelGraph h;
    h.input_shape = {3};
    h.num_classes = 2;
    testutil::add_layer(h, LayerSpec::fully_connected(3, 2));
    EdacGeometry g;
    g.physical_channels = 2;
    g.groups = {{0}, {1}};
    testutil::add_layer(h, LayerSpec::edac(g));
    h.layers[1].params[slot::upper] = Tensor({2}, 10.0f);
    ForwardCache hc;
    forward(h, x, hc);
    CHECK_THROWS_AS(backward(h, hc, Tensor({2, 2})), Error);
}

TEST_CASE("sgd step and running-statistics update")
{
    auto m = testutil::random_cnn(2);
    const auto before = m;
    const auto x = testutil::random_batch(m, 4, 3);
    ForwardCache cache;
    forward(m, x, cache, Phase::Training);
    const auto grads = backward(m, cache, Tensor({4, m.num_classes}, 0.5f));
    sgd_step(m, grads, 0.1f);
    const float w0 = before.layers[0].params[slot::weight][0];
    CHECK(m.layers[0].params[slot::weight][0] == w0 - 0.1f * grads.layers[0][slot::weight][0]);
    REQUIRE(m.layers[1].spec.kind == LayerKind::BatchNorm);
    // Running statistics are state: sgd leaves them alone, the momentum update moves them.
    CHECK(m.layers[1].params[slot::running_mean][0] == before.layers[1].params[slot::running_mean][0]);
    update_running_stats(m, cache, 0.1f);
    const auto& st = cache.bn_stats[1];
    const float expect = 0.9f * before.layers[1].params[slot::running_mean][0] + 0.1f * st.mean[0];
    CHECK(m.layers[1].params[slot::running_mean][0] == expect);
}

}
