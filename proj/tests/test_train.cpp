#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "forward.hpp"
#include "train.hpp"
#include "testutil.hpp"

using namespace sdc;
using sdctest::pick;

TEST_CASE("lr schedule hand values") {
    TrainConfig cfg;  // peak 0.5, floor 0.0005, phases 0.5 / 0.9
    CHECK(lr_at(0, 100, cfg) == 0.5);
    CHECK(lr_at(49, 100, cfg) == 0.5);
    CHECK(lr_at(70, 100, cfg) == doctest::Approx(0.25025).epsilon(1e-12));
    CHECK(lr_at(90, 100, cfg) == 0.0005);
    CHECK(lr_at(99, 100, cfg) == 0.0005);
    // ramp endpoints approach the floor linearly
    const double just_before = lr_at(89, 100, cfg);
    CHECK(just_before > 0.0005);
    CHECK(just_before < 0.02);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(validate_train_config(cfg));
    TrainConfig bad = cfg;
    bad.phase1_frac = 0.9;
    bad.phase2_frac = 0.5;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
    bad = cfg;
    bad.lr_floor = 1.0;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
    bad = cfg;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
    bad = cfg;
    bad.drop_prob = 1.5;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
    bad = cfg;
    bad.epochs = -1;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate_train_config(bad), Error);
}

TEST_CASE("loss oracles") {
    Network tiny;
    tiny.input_shape = {2};
    tiny.layers.push_back(LayerSpec::dense(2, 2));
    tiny.layers.push_back(LayerSpec::activation(LayerKind::softmax));
    tiny.weights.push_back(Tensor({2, 2}, {0.2f, 0.0f, 0.0f, 0.0f}));
    tiny.biases.push_back(Tensor({2}));

    Tensor uniform({1, 10}, std::vector<float>(10, 0.1f));
    Network no_weights;
    CHECK(loss_mc(uniform, {3}, no_weights, 0.0) == doctest::Approx(std::log(10.0)).epsilon(1e-6));

    Tensor onehot({1, 2}, {1.0f, 0.0f});
    CHECK(loss_mc(onehot, {0}, tiny, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
    // decay term: 1.0 * 0.2^2 = 0.04, biases exempt
    CHECK(loss_mc(onehot, {0}, tiny, 1.0) == doctest::Approx(0.04).epsilon(1e-6));

    CHECK_THROWS_AS(loss_mc(onehot, {5}, tiny, 0.0), Error);
    Tensor zeroed({1, 2}, {0.0f, 1.0f});
    CHECK(std::isfinite(loss_mc(zeroed, {0}, tiny, 0.0)));
}

TEST_CASE("nesterov step hand oracle") {
    Tensor w({1}, {1.0f});
    Tensor g({1}, {1.0f});
    Tensor v({1}, {0.0f});
    sgd_nesterov_step(w, g, v, 0.1, 0.9);
    // v = -0.1; w = 1 + 0.9*(-0.1) - 0.1 = 0.81
    CHECK(v.at(std::size_t{0}) == doctest::Approx(-0.1f));
    CHECK(w.at(std::size_t{0}) == doctest::Approx(0.81f));
    sgd_nesterov_step(w, g, v, 0.1, 0.9);
    // v = 0.9*(-0.1) - 0.1 = -0.19; w = 0.81 + 0.9*(-0.19) - 0.1 = 0.539
    CHECK(v.at(std::size_t{0}) == doctest::Approx(-0.19f));
    CHECK(w.at(std::size_t{0}) == doctest::Approx(0.539f));
}

TEST_CASE("augment draws shift then flip in a fixed order") {
    Tensor img({1, 4, 4});
    for (std::size_t i = 0; i < img.size(); ++i) img.at(i) = static_cast<float>(i);

    // shift_max 0 with flip_prob 0 is the identity
    RngStream s1(1, 0, 0);
    Tensor same = augment(img, 0, 0.0, s1);
    CHECK(same.data == img.data);

    // flip_prob 1 always mirrors horizontally
    RngStream s2(1, 0, 0);
    Tensor flipped = augment(img, 0, 1.0, s2);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(flipped.at({0, y, x}) == img.at({0, y, 3 - x}));

    // flipping twice with the same stream state restores the image
    RngStream s3(2, 0, 0);
    RngStream s4(2, 0, 0);
    Tensor once = augment(img, 0, 1.0, s3);
    Tensor twice = augment(once, 0, 1.0, s4);
    CHECK(twice.data == img.data);

    CHECK_THROWS_AS([&] {
        RngStream s(3, 0, 0);
        augment(img, 4, 0.0, s);  // shift bound as large as the image
    }(), Error);
}

TEST_CASE("augment shifts fill vacated pixels with zeros") {
    Tensor img({1, 5, 5}, std::vector<float>(25, 1.0f));
    bool saw_shift = false;
    for (std::uint64_t k = 0; k < 50 && !saw_shift; ++k) {
        RngStream s(k, 1, 2);
        Tensor out = augment(img, 2, 0.0, s);
        double total = 0.0;
        for (float v : out.data) {
            CHECK((v == 0.0f || v == 1.0f));
            total += v;
        }
        if (total < 25.0) saw_shift = true;
    }
    CHECK(saw_shift);
}

namespace {

struct GradCase {
    NetworkD net;
    TensorD x;
    std::vector<int> labels;
    MaskPlan plan;
    std::uint64_t seed = 0;
    int pass = 0;
    double wd = 0.0;
};

// Rules out inputs that sit on a relu kink, a pooling tie, or the nll clamp,
// where a finite difference steps across the non-smooth point.
bool smooth_at(const GradCase& c) {
    ForwardTrace<double> trace;
    forward_range(c.net, c.x, 0, c.net.n_layers(), c.plan, c.seed, c.pass, &trace);
    for (int i = 0; i < c.net.n_layers(); ++i) {
        const LayerSpec& layer = c.net.layers[static_cast<std::size_t>(i)];
        const TensorD& in = trace.inputs[static_cast<std::size_t>(i)];
        if (layer.kind == LayerKind::relu) {
            for (double v : in.data)
                if (std::abs(v) < 1e-3) return false;
        } else if (layer.kind == LayerKind::maxpool2) {
            const int b = in.dim(0), ch = in.dim(1), h = in.dim(2), w = in.dim(3);
            for (int bb = 0; bb < b; ++bb)
                for (int cc = 0; cc < ch; ++cc)
                    for (int y = 0; y + 1 < h; y += 2)
                        for (int x = 0; x + 1 < w; x += 2) {
                            double m1 = -1e300, m2 = -1e300;
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    const double v = in.at({bb, cc, y + dy, x + dx});
                                    if (v > m1) {
                                        m2 = m1;
                                        m1 = v;
                                    } else if (v > m2) {
                                        m2 = v;
                                    }
                                }
                            if (m1 - m2 < 1e-3) return false;
                        }
        }
    }
    for (std::size_t i = 0; i < c.labels.size(); ++i)
        if (trace.output.at({static_cast<int>(i), c.labels[i]}) < 1e-6) return false;
    return true;
}

double loss_with_weights(const GradCase& c) {
    TensorD probs = forward_range(c.net, c.x, 0, c.net.n_layers(), c.plan, c.seed, c.pass);
    return loss_mc(probs, c.labels, c.net, c.wd);
}

}  // namespace

TEST_CASE("analytic gradients match central differences on 50 random nets") {
    RngStream rng(61, 0, 0);
    const double h = 1e-5;
    int accepted = 0;
    int attempts = 0;
    double worst = 0.0;
    while (accepted < 50 && attempts < 300) {
        ++attempts;
        GradCase c;
        Network fnet = sdctest::random_net(rng, 5000 + static_cast<std::uint64_t>(attempts));
        std::size_t params = 0;
        for (const Tensor& w : fnet.weights) params += w.size();
        if (params > 4000) continue;
        c.net = sdctest::to_double(fnet);
        const int batch = pick(rng, 1, 3);
        Tensor fx = sdctest::random_batch(rng, fnet.input_shape, batch);
        c.x = tensor_cast<double>(fx);
        const int classes = fnet.n_classes();
        for (int i = 0; i < batch; ++i) c.labels.push_back(pick(rng, 0, classes - 1));
        const int mode = pick(rng, 0, 2);
        c.plan.mode = mode == 0 ? MaskMode::dropconnect : mode == 1 ? MaskMode::dropout : MaskMode::deterministic;
        c.plan.drop_prob = c.plan.mode == MaskMode::deterministic ? 0.0 : 0.4 * rng.next_uniform();
        c.plan.scale_mode = pick(rng, 0, 1) == 0 ? ScaleMode::inverted : ScaleMode::none;
        c.plan.lambda_frozen = pick(rng, 0, c.net.n_weight_layers());
        c.seed = rng.next_u64();
        c.pass = pick(rng, 0, 5);
        c.wd = pick(rng, 0, 1) == 0 ? 0.0 : 1e-3;
        if (!smooth_at(c)) continue;

        ForwardTrace<double> trace;
        forward_range(c.net, c.x, 0, c.net.n_layers(), c.plan, c.seed, c.pass, &trace);
        Gradients<double> g = compute_gradients(c.net, trace, c.labels, c.wd);

        double num2 = 0.0, diff2 = 0.0;
        auto probe = [&](TensorD& param, const TensorD& analytic) {
            for (std::size_t j = 0; j < param.size(); ++j) {
                const double keep = param.at(j);
                param.at(j) = keep + h;
                const double up = loss_with_weights(c);
                param.at(j) = keep - h;
                const double down = loss_with_weights(c);
                param.at(j) = keep;
                const double numeric = (up - down) / (2.0 * h);
                const double a = analytic.at(j);
                num2 += numeric * numeric;
                diff2 += (a - numeric) * (a - numeric);
            }
        };
        for (int li = 0; li < c.net.n_weight_layers(); ++li) {
            probe(c.net.weights[static_cast<std::size_t>(li)], g.weights[static_cast<std::size_t>(li)]);
            probe(c.net.biases[static_cast<std::size_t>(li)], g.biases[static_cast<std::size_t>(li)]);
        }
        const double rel = std::sqrt(diff2) / std::max(1.0, std::sqrt(num2));
        worst = std::max(worst, rel);
        CHECK(rel < 1e-4);
        ++accepted;
    }
    REQUIRE(accepted == 50);
    MESSAGE("worst relative gradient error: ", worst);
}

TEST_CASE("fit is deterministic and zero epochs is a no-op") {
    SynthSpec spec;
    spec.kind = SynthKind::blobs;
    spec.n = 60;
    spec.classes = 10;
    spec.image_size = 12;
    Dataset ds = synth_dataset(spec, 3);

    const std::string arch = R"({"input":[144],"layers":[
        {"kind":"dense","out":16},{"kind":"relu"},
        {"kind":"dense","out":10},{"kind":"softmax"}]})";

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 20;
    cfg.lr_peak = 0.1;
    cfg.lr_floor = 0.001;
    cfg.drop_prob = 0.2;
    cfg.mode = MaskMode::dropconnect;
    cfg.seed = 9;
    cfg.shift_max = 0;
    cfg.flip_prob = 0.0;

    Network a = network_from_arch_json(arch, cfg.seed);
    Network b = network_from_arch_json(arch, cfg.seed);
    FitResult ra = fit(a, ds, nullptr, cfg);
    FitResult rb = fit(b, ds, nullptr, cfg);
    CHECK(ra.steps == rb.steps);
    REQUIRE(ra.epochs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ra.epochs[i].train_loss == rb.epochs[i].train_loss);
    for (int i = 0; i < a.n_weight_layers(); ++i) {
        CHECK(a.weights[i].data == b.weights[i].data);
        CHECK(a.biases[i].data == b.biases[i].data);
    }

    Network c = network_from_arch_json(arch, cfg.seed);
    Network untouched = network_from_arch_json(arch, cfg.seed);
    TrainConfig zero = cfg;
    zero.epochs = 0;
    FitResult rc = fit(c, ds, nullptr, zero);
    CHECK(rc.steps == 0);
    CHECK(rc.epochs.empty());
    for (int i = 0; i < c.n_weight_layers(); ++i) CHECK(c.weights[i].data == untouched.weights[i].data);
}

TEST_CASE("different seeds give different trained weights") {
    SynthSpec spec;
    spec.kind = SynthKind::blobs;
    spec.n = 40;
    spec.classes = 10;
    spec.image_size = 12;
    Dataset ds = synth_dataset(spec, 3);
    const std::string arch = R"({"input":[144],"layers":[
        {"kind":"dense","out":10},{"kind":"softmax"}]})";
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 20;
    cfg.lr_peak = 0.1;
    cfg.lr_floor = 0.001;
    cfg.drop_prob = 0.2;
    cfg.seed = 1;
    Network a = network_from_arch_json(arch, 1);
    Network b = network_from_arch_json(arch, 1);
    fit(a, ds, nullptr, cfg);
    TrainConfig cfg2 = cfg;
    cfg2.seed = 2;
    fit(b, ds, nullptr, cfg2);
    CHECK(a.weights[0].data != b.weights[0].data);
}

TEST_CASE("training separates well-separated blobs") {
    SynthSpec spec;
    spec.kind = SynthKind::blobs;
    spec.n = 300;
    spec.classes = 10;
    spec.image_size = 12;
    Dataset ds = synth_dataset(spec, 21);

    const std::string arch = R"({"input":[144],"layers":[
        {"kind":"dense","out":32},{"kind":"relu"},
        {"kind":"dense","out":10},{"kind":"softmax"}]})";

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 50;
    cfg.lr_peak = 0.1;
    cfg.lr_floor = 0.001;
    cfg.weight_decay = 1e-4;
    cfg.drop_prob = 0.05;
    cfg.mode = MaskMode::dropconnect;
    cfg.seed = 4;
    cfg.shift_max = 0;
    cfg.flip_prob = 0.0;

    Network net = network_from_arch_json(arch, cfg.seed);
    FitResult r = fit(net, ds, &ds, cfg);
    REQUIRE(r.epochs.size() == 30);
    CHECK(r.epochs.front().train_loss > r.epochs.back().train_loss);
    CHECK(r.epochs.back().val_accuracy >= 0.99);
    CHECK(deterministic_accuracy(net, ds, 100) >= 0.99);
}

TEST_CASE("epoch stats echo the schedule tail") {
    SynthSpec spec;
    spec.kind = SynthKind::blobs;
    spec.n = 40;
    spec.classes = 10;
    spec.image_size = 12;
    Dataset ds = synth_dataset(spec, 5);
    const std::string arch = R"({"input":[144],"layers":[
        {"kind":"dense","out":10},{"kind":"softmax"}]})";
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 40;
    cfg.lr_peak = 0.4;
    cfg.lr_floor = 0.004;
    cfg.seed = 2;
    Network net = network_from_arch_json(arch, 2);
    FitResult r = fit(net, ds, nullptr, cfg);
    REQUIRE(r.epochs.size() == 10);
    CHECK(r.epochs[0].lr_end == 0.4);          // still at peak
    CHECK(r.epochs[9].lr_end == 0.004);        // floor reached
    CHECK(r.epochs[0].val_accuracy == -1.0);   // no validation set attached
    CHECK(r.steps == 10);
}
