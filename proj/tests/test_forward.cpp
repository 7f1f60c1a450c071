#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "forward.hpp"
#include "testutil.hpp"

using namespace sdc;

TEST_CASE("mask drop rate within binomial bounds") {
    // 3 sigma on 1e6 draws
    const int n = 1000000;
    for (double p : {0.1, 0.3, 0.5}) {
        RngStream stream(777, 0, static_cast<std::uint64_t>(p * 10));
        Tensor mask = sample_mask<float>({1000, 1000}, p, stream);
        std::size_t dropped = 0;
        for (float v : mask.data) {
            CHECK((v == 0.0f || v == 1.0f));
            if (v == 0.0f) ++dropped;
        }
        const double rate = static_cast<double>(dropped) / n;
        const double sigma = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(rate - p) < 3.0 * sigma);
    }
}

TEST_CASE("mask edge probabilities and validation") {
    RngStream s(1, 2, 3);
    Tensor all_keep = sample_mask<float>({50}, 0.0, s);
    for (float v : all_keep.data) CHECK(v == 1.0f);
    Tensor all_drop = sample_mask<float>({50}, 1.0, s);
    for (float v : all_drop.data) CHECK(v == 0.0f);
    CHECK_THROWS_AS(sample_mask<float>({3}, -0.1, s), Error);
    CHECK_THROWS_AS(sample_mask<float>({3}, 1.1, s), Error);
}

TEST_CASE("masks replay exactly for equal stream keys") {
    RngStream a = rng_stream(9, 4, 2);
    RngStream b = rng_stream(9, 4, 2);
    Tensor ma = sample_mask<float>({17, 13}, 0.3, a);
    Tensor mb = sample_mask<float>({17, 13}, 0.3, b);
    CHECK(ma.data == mb.data);
    RngStream c = rng_stream(9, 5, 2);
    Tensor mc = sample_mask<float>({17, 13}, 0.3, c);
    CHECK(ma.data != mc.data);
}

TEST_CASE("inverted scale with the p=1 guard") {
    CHECK(inverted_scale(0.0) == 1.0);
    CHECK(inverted_scale(0.5) == 2.0);
    CHECK(inverted_scale(0.2) == doctest::Approx(1.25));
    CHECK(inverted_scale(1.0) == 1.0);
    MaskPlan plan;
    plan.drop_prob = 0.5;
    plan.scale_mode = ScaleMode::none;
    CHECK(plan_scale(plan) == 1.0);
    plan.scale_mode = ScaleMode::inverted;
    CHECK(plan_scale(plan) == 2.0);
}

TEST_CASE("dropconnect dense hand oracle") {
    Tensor x({1, 2}, {1, 2});
    Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b({3}, {0.5f, 0.5f, 0.5f});
    Tensor mask({2, 3}, {1, 0, 1, 0, 1, 1});
    Tensor y = dropconnect_forward(x, w, b, mask, 2.0f, Activation::identity);
    CHECK(y.at({0, 0}) == 2.5f);
    CHECK(y.at({0, 1}) == 20.5f);
    CHECK(y.at({0, 2}) == 30.5f);
    CHECK_THROWS_AS(dropconnect_forward(x, w, b, Tensor({3, 2}), 1.0f, Activation::identity), Error);
}

TEST_CASE("dropout dense hand oracle: bias masked with the neuron") {
    Tensor x({1, 2}, {1, 2});
    Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b({3}, {0.5f, 0.5f, 0.5f});
    Tensor mask({3}, {1, 0, 1});
    // x.w + b = [9.5, 12.5, 15.5]; masked and doubled
    Tensor y = dropout_forward(x, w, b, mask, 2.0f, Activation::identity);
    CHECK(y.at({0, 0}) == 19.0f);
    CHECK(y.at({0, 1}) == 0.0f);
    CHECK(y.at({0, 2}) == 31.0f);
    CHECK_THROWS_AS(dropout_forward(x, w, b, Tensor({2}), 1.0f, Activation::identity), Error);
}

TEST_CASE("conv dropout zeroes whole channels") {
    RngStream rng(31, 0, 0);
    Tensor x({2, 2, 4, 4});
    Tensor w({3, 2, 3, 3});
    Tensor b({3}, {0.1f, 0.2f, 0.3f});
    for (float& v : x.data) v = static_cast<float>(rng.next_normal());
    for (float& v : w.data) v = static_cast<float>(rng.next_normal());
    Tensor mask({3}, {1, 0, 1});
    Tensor y = dropout_forward(x, w, b, mask, 1.0f, Activation::identity, 1, 1);
    for (int n = 0; n < 2; ++n)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(y.at({n, 1, i, j}) == 0.0f);
    bool nonzero = false;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) nonzero = nonzero || y.at({0, 0, i, j}) != 0.0f;
    CHECK(nonzero);
}

TEST_CASE("p=0 dropconnect equals the deterministic forward bit for bit") {
    RngStream rng(55, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        Network net = sdctest::random_net(rng, 600 + static_cast<std::uint64_t>(trial));
        Tensor x = sdctest::random_batch(rng, net.input_shape, sdctest::pick(rng, 1, 4));
        MaskPlan det;
        det.mode = MaskMode::deterministic;
        MaskPlan dc;
        dc.mode = MaskMode::dropconnect;
        dc.drop_prob = 0.0;
        Tensor a = network_forward(net, x, det, 1, 0);
        Tensor b = network_forward(net, x, dc, 1, 0);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("fully frozen plan ignores mode and seed") {
    RngStream rng(56, 0, 0);
    Network net = sdctest::random_net(rng, 700);
    Tensor x = sdctest::random_batch(rng, net.input_shape, 3);
    MaskPlan det;
    det.mode = MaskMode::deterministic;
    MaskPlan frozen;
    frozen.mode = MaskMode::dropconnect;
    frozen.drop_prob = 0.7;
    frozen.lambda_frozen = net.n_weight_layers();
    Tensor a = network_forward(net, x, det, 1, 0);
    Tensor b = network_forward(net, x, frozen, 99, 5);
    CHECK(a.data == b.data);
}

TEST_CASE("stochastic passes differ across pass indices but replay per index") {
    RngStream rng(57, 0, 0);
    Network net = sdctest::random_net(rng, 800);
    Tensor x = sdctest::random_batch(rng, net.input_shape, 2);
    MaskPlan plan;
    plan.mode = MaskMode::dropconnect;
    plan.drop_prob = 0.5;
    Tensor p0 = network_forward(net, x, plan, 42, 0);
    Tensor p0_again = network_forward(net, x, plan, 42, 0);
    Tensor p1 = network_forward(net, x, plan, 42, 1);
    CHECK(p0.data == p0_again.data);
    CHECK(p0.data != p1.data);
}

TEST_CASE("frozen prefix activations are mode independent") {
    RngStream rng(58, 0, 0);
    Network net = network_from_arch_json(default_cnn_arch_json(4, 1, 12, 12), 3);
    Tensor x = sdctest::random_batch(rng, net.input_shape, 2);
    MaskPlan det;
    det.mode = MaskMode::deterministic;
    MaskPlan part;
    part.mode = MaskMode::dropconnect;
    part.drop_prob = 0.5;
    part.lambda_frozen = 2;
    // boundary before weight layer 2: conv relu pool conv relu pool flatten
    Tensor a = forward_range(net, x, 0, 7, det, 1, 0);
    Tensor b = forward_range(net, x, 0, 7, part, 2, 9);
    CHECK(a.data == b.data);
}

TEST_CASE("trace captures masks only for stochastic layers") {
    RngStream rng(59, 0, 0);
    Network net = network_from_arch_json(default_cnn_arch_json(4, 1, 12, 12), 3);
    Tensor x = sdctest::random_batch(rng, net.input_shape, 2);
    MaskPlan plan;
    plan.mode = MaskMode::dropconnect;
    plan.drop_prob = 0.3;
    plan.lambda_frozen = 2;
    ForwardTrace<float> trace;
    network_forward(net, x, plan, 5, 0, &trace);
    REQUIRE(trace.masks.size() == 4);
    CHECK(trace.masks[0].data.empty());
    CHECK(trace.masks[1].data.empty());
    CHECK(trace.masks[2].shape == net.weights[2].shape);
    CHECK(trace.masks[3].shape == net.weights[3].shape);
    CHECK(trace.inputs.size() == static_cast<std::size_t>(net.n_layers()));
    CHECK(trace.output.dim(1) == 4);
}

TEST_CASE("network_forward validates the batch shape") {
    Network net = network_from_arch_json(default_cnn_arch_json(4, 1, 12, 12), 3);
    MaskPlan det;
    CHECK_THROWS_AS(network_forward(net, Tensor({2, 1, 10, 10}), det, 0, 0), Error);
}
