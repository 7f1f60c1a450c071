#include "mc.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace sdc {

double entropy_of(const double* probs, int n) {
    double h = 0.0;
    for (int i = 0; i < n; ++i)
        if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return h;
}

double predictive_entropy(const std::vector<double>& probs) {
    if (probs.empty()) throw_data("entropy of an empty distribution");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw_data("probability entries must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-5)
        throw_data("probabilities sum to " + std::to_string(sum) + ", expected 1");
    return entropy_of(probs.data(), static_cast<int>(probs.size()));
}

int split_boundary(const Network& net, int lambda_frozen) {
    if (lambda_frozen < 0 || lambda_frozen > net.n_weight_layers())
        throw_config("lambda_frozen must lie in [0," + std::to_string(net.n_weight_layers()) + "], got " +
                     std::to_string(lambda_frozen));
    if (lambda_frozen == 0) return 0;
    int seen = 0;
    for (int i = 0; i < net.n_layers(); ++i) {
        if (!net.layers[static_cast<std::size_t>(i)].weight_bearing()) continue;
        if (seen == lambda_frozen) return i;
        ++seen;
    }
    return net.n_layers();
}

SplitNetwork split_network(const Network& net, int lambda_frozen) {
    const int boundary = split_boundary(net, lambda_frozen);
    SplitNetwork out;
    out.boundary = boundary;

    out.prefix.input_shape = net.input_shape;
    out.prefix.layers.assign(net.layers.begin(), net.layers.begin() + boundary);

    auto shapes = activation_shapes(net.layers, net.input_shape);
    out.tail.input_shape = boundary == 0 ? net.input_shape : shapes[static_cast<std::size_t>(boundary - 1)];
    out.tail.layers.assign(net.layers.begin() + boundary, net.layers.end());

    int wi = 0;
    for (int i = 0; i < net.n_layers(); ++i) {
        if (!net.layers[static_cast<std::size_t>(i)].weight_bearing()) continue;
        Network& side = i < boundary ? out.prefix : out.tail;
        side.weights.push_back(net.weights[static_cast<std::size_t>(wi)]);
        side.biases.push_back(net.biases[static_cast<std::size_t>(wi)]);
        ++wi;
    }
    return out;
}

namespace {

PredictiveSummary summarize(std::vector<double>&& acc, Tensor&& pass_record, bool keep_passes, int n, int classes,
                            int passes, const MaskPlan& plan, std::uint64_t seed) {
    PredictiveSummary s;
    s.passes = passes;
    s.plan = plan;
    s.seed = seed;
    s.mean_probs = Tensor({n, classes});
    s.entropy.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= passes;
    for (int i = 0; i < n; ++i) {
        const double* row = acc.data() + static_cast<std::size_t>(i) * classes;
        s.entropy[static_cast<std::size_t>(i)] = entropy_of(row, classes);
        float* out = s.mean_probs.ptr() + static_cast<std::size_t>(i) * classes;
        for (int c = 0; c < classes; ++c) out[c] = static_cast<float>(row[c]);
    }
    if (keep_passes) s.per_pass_probs = std::move(pass_record);
    return s;
}

void accumulate(std::vector<double>& acc, const Tensor& probs) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(probs.data[i]);
}

}  // namespace

PredictiveSummary mc_predict_naive(const Network& net, const Tensor& x, int passes, const MaskPlan& plan,
                                   std::uint64_t seed, bool keep_passes) {
    if (passes < 1) throw_config("pass count must be >= 1, got " + std::to_string(passes));
    validate_plan(plan, net);
    const int n = x.dim(0);
    const int classes = net.n_classes();
    std::vector<double> acc(static_cast<std::size_t>(n) * classes, 0.0);
    Tensor record;
    if (keep_passes) record = Tensor({passes, n, classes});
    for (int pass = 0; pass < passes; ++pass) {
        Tensor probs = network_forward(net, x, plan, seed, pass);
        accumulate(acc, probs);
        if (keep_passes)
            std::copy(probs.data.begin(), probs.data.end(),
                      record.data.begin() + static_cast<std::size_t>(pass) * probs.data.size());
    }
    return summarize(std::move(acc), std::move(record), keep_passes, n, classes, passes, plan, seed);
}

PredictiveSummary select_dc_predict(const Network& net, const Tensor& x, int passes, const MaskPlan& plan,
                                    std::uint64_t seed, bool keep_passes) {
    if (passes < 1) throw_config("pass count must be >= 1, got " + std::to_string(passes));
    validate_plan(plan, net);
    std::vector<int> expect = net.input_shape;
    expect.insert(expect.begin(), x.dim(0));
    if (x.shape != expect)
        throw_dimension("input shape " + shape_str(x.shape) + " does not match network input " +
                        shape_str(net.input_shape));

    const int boundary = split_boundary(net, plan.lambda_frozen);
    const int n = x.dim(0);
    const int classes = net.n_classes();

    MaskPlan frozen_plan = plan;
    frozen_plan.mode = MaskMode::deterministic;
    Tensor cached = forward_range(net, x, 0, boundary, frozen_plan, seed, 0);

    std::vector<double> acc(static_cast<std::size_t>(n) * classes, 0.0);
    Tensor record;
    if (keep_passes) record = Tensor({passes, n, classes});
    for (int pass = 0; pass < passes; ++pass) {
        Tensor probs = forward_range(net, cached, boundary, net.n_layers(), plan, seed, pass);
        accumulate(acc, probs);
        if (keep_passes)
            std::copy(probs.data.begin(), probs.data.end(),
                      record.data.begin() + static_cast<std::size_t>(pass) * probs.data.size());
    }
    return summarize(std::move(acc), std::move(record), keep_passes, n, classes, passes, plan, seed);
}

Tensor rotate_image(const Tensor& image, double angle_degrees) {
    if (image.rank() != 3) throw_dimension("rotate_image expects [c,h,w], got " + shape_str(image.shape));
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const double theta = angle_degrees * std::numbers::pi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    Tensor out({c, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dy = y - cy, dx = x - cx;
            const long sy = std::lround(cy + ct * dy - st * dx);
            const long sx = std::lround(cx + st * dy + ct * dx);
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            for (int ch = 0; ch < c; ++ch)
                out.at({ch, y, x}) = image.at({ch, static_cast<int>(sy), static_cast<int>(sx)});
        }
    }
    return out;
}

Tensor rotate_batch(const Tensor& images, double angle_degrees) {
    if (images.rank() != 4) throw_dimension("rotate_batch expects [n,c,h,w], got " + shape_str(images.shape));
    Tensor out(images.shape);
    const std::size_t per = images.data.size() / static_cast<std::size_t>(images.dim(0));
    for (int i = 0; i < images.dim(0); ++i) {
        Tensor one({images.dim(1), images.dim(2), images.dim(3)});
        std::copy_n(images.data.begin() + static_cast<std::size_t>(i) * per, per, one.data.begin());
        Tensor rot = rotate_image(one, angle_degrees);
        std::copy_n(rot.data.begin(), per, out.data.begin() + static_cast<std::size_t>(i) * per);
    }
    return out;
}

std::vector<RotationPoint> rotation_entropy_sweep(const Network& net, const Tensor& images,
                                                  const std::vector<double>& angles, int passes,
                                                  const MaskPlan& plan, std::uint64_t seed) {
    std::vector<RotationPoint> out;
    out.reserve(angles.size());
    for (double angle : angles) {
        Tensor rotated = rotate_batch(images, angle);
        PredictiveSummary s = select_dc_predict(net, rotated, passes, plan, seed);
        double mean = 0.0;
        for (double e : s.entropy) mean += e;
        mean /= static_cast<double>(s.entropy.size());
        double var = 0.0;
        for (double e : s.entropy) var += (e - mean) * (e - mean);
        var /= static_cast<double>(s.entropy.size());
        out.push_back({angle, mean, std::sqrt(var)});
    }
    return out;
}

}  // namespace sdc
