#include "train.hpp"

#include <algorithm>
#include <numeric>

#include "error.hpp"
#include "metrics.hpp"

namespace sdc {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw_config("epochs must be non-negative");
    if (cfg.batch_size < 1) throw_config("batch_size must be >= 1");
    if (!(cfg.phase1_frac > 0.0) || !(cfg.phase1_frac < cfg.phase2_frac) || !(cfg.phase2_frac <= 1.0))
        throw_config("learning-rate phases need 0 < phase1_frac < phase2_frac <= 1");
    if (cfg.lr_floor > cfg.lr_peak) throw_config("lr_floor must not exceed lr_peak");
    if (cfg.lr_peak < 0.0) throw_config("learning rates must be non-negative");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw_config("momentum must lie in [0,1)");
    if (cfg.weight_decay < 0.0) throw_config("weight_decay must be non-negative");
    if (cfg.drop_prob < 0.0 || cfg.drop_prob > 1.0) throw_config("drop_prob must lie in [0,1]");
    if (cfg.lambda_frozen_train < 0) throw_config("lambda_frozen_train must be non-negative");
    if (cfg.shift_max < 0) throw_config("shift_max must be non-negative");
    if (cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0) throw_config("flip_prob must lie in [0,1]");
}

Tensor augment(const Tensor& image, int shift_max, double flip_prob, RngStream& stream) {
    if (image.rank() != 3) throw_dimension("augment expects [c,h,w], got " + shape_str(image.shape));
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (shift_max >= std::min(h, w)) throw_config("shift_max must be smaller than the image");
    const int span = 2 * shift_max + 1;
    const int dx = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(span))) - shift_max;
    const int dy = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(span))) - shift_max;
    const bool flip = stream.next_uniform() < flip_prob;

    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
            const int sy = y - dy;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < w; ++x) {
                const int sx = x - dx;
                if (sx < 0 || sx >= w) continue;
                out.at({ch, y, x}) = image.at({ch, sy, sx});
            }
        }
    if (flip) {
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w / 2; ++x)
                    std::swap(out.at({ch, y, x}), out.at({ch, y, w - 1 - x}));
    }
    return out;
}

namespace {

Tensor gather_batch(const Tensor& images, const std::vector<int>& order, int start, int count) {
    std::vector<int> shape = images.shape;
    shape[0] = count;
    Tensor out(shape);
    const std::size_t per = images.data.size() / static_cast<std::size_t>(images.dim(0));
    for (int i = 0; i < count; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        std::copy_n(images.data.begin() + static_cast<std::size_t>(src) * per, per,
                    out.data.begin() + static_cast<std::size_t>(i) * per);
    }
    return out;
}

}  // namespace

double deterministic_accuracy(const Network& net, const Dataset& ds, int batch_size) {
    if (ds.size() == 0) return 0.0;
    const Tensor images = shaped_images(ds, net.input_shape);
    const MaskPlan plan{0.0, 0, MaskMode::deterministic, ScaleMode::none};
    int hits = 0;
    for (int start = 0; start < ds.size(); start += batch_size) {
        const int count = std::min(batch_size, ds.size() - start);
        std::vector<int> shape = images.shape;
        shape[0] = count;
        Tensor batch(shape);
        const std::size_t per = images.data.size() / static_cast<std::size_t>(ds.size());
        std::copy_n(images.data.begin() + static_cast<std::size_t>(start) * per,
                    static_cast<std::size_t>(count) * per, batch.data.begin());
        Tensor probs = network_forward(net, batch, plan, 0, 0);
        const int c = probs.dim(1);
        for (int i = 0; i < count; ++i) {
            const float* row = probs.ptr() + static_cast<std::size_t>(i) * c;
            int best = 0;
            for (int j = 1; j < c; ++j)
                if (row[j] > row[best]) best = j;
            if (best == ds.labels[static_cast<std::size_t>(start + i)]) ++hits;
        }
    }
    return static_cast<double>(hits) / ds.size();
}

FitResult fit(Network& net, const Dataset& train_set, const Dataset* val_set, const TrainConfig& cfg) {
    validate_train_config(cfg);
    validate_network(net);
    if (train_set.size() == 0) throw_data("training set is empty");
    if (cfg.lambda_frozen_train > net.n_weight_layers())
        throw_config("lambda_frozen_train exceeds the number of weight-bearing layers");
    const int classes = net.n_classes();
    for (int y : train_set.labels)
        if (y < 0 || y >= classes) throw_data("training label " + std::to_string(y) + " out of range");

    const Tensor images = shaped_images(train_set, net.input_shape);
    const bool conv_input = images.rank() == 4;
    const int n = train_set.size();
    const int batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long long total_steps = static_cast<long long>(cfg.epochs) * batches_per_epoch;
    const MaskPlan plan = cfg.plan();

    OptimizerState<float> opt = OptimizerState<float>::zeros_like(net);
    const std::uint64_t shuffle_root = tagged_seed(cfg.seed, StreamTag::shuffle);
    const std::uint64_t augment_root = tagged_seed(cfg.seed, StreamTag::augment);
    const std::uint64_t mask_root = tagged_seed(cfg.seed, StreamTag::train_mask);

    FitResult result;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    long long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream shuffle_stream = rng_stream(shuffle_root, static_cast<std::uint64_t>(epoch), 0);
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_stream.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0.0;
        double lr = cfg.lr_peak;
        for (int b = 0; b < batches_per_epoch; ++b) {
            const int start = b * cfg.batch_size;
            const int count = std::min(cfg.batch_size, n - start);
            Tensor batch = gather_batch(images, order, start, count);
            std::vector<int> labels(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i)
                labels[static_cast<std::size_t>(i)] = train_set.labels[static_cast<std::size_t>(
                    order[static_cast<std::size_t>(start + i)])];

            if (conv_input && (cfg.shift_max > 0 || cfg.flip_prob > 0.0)) {
                RngStream aug = rng_stream(augment_root, static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(b));
                const std::size_t per = batch.data.size() / static_cast<std::size_t>(count);
                Tensor one({batch.dim(1), batch.dim(2), batch.dim(3)});
                for (int i = 0; i < count; ++i) {
                    std::copy_n(batch.data.begin() + static_cast<std::size_t>(i) * per, per, one.data.begin());
                    Tensor moved = augment(one, cfg.shift_max, cfg.flip_prob, aug);
                    std::copy_n(moved.data.begin(), per, batch.data.begin() + static_cast<std::size_t>(i) * per);
                }
            }

            ForwardTrace<float> trace;
            forward_range(net, std::move(batch), 0, net.n_layers(), plan, mask_root, static_cast<int>(step), &trace);
            const double loss = loss_mc(trace.output, labels, net, cfg.weight_decay);
            if (!std::isfinite(loss))
                throw_numeric("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b));
            loss_sum += loss * count;

            Gradients<float> grads = compute_gradients(net, trace, labels, cfg.weight_decay);
            lr = lr_at(step, total_steps, cfg);
            for (std::size_t w = 0; w < net.weights.size(); ++w) {
                sgd_nesterov_step(net.weights[w], grads.weights[w], opt.w_vel[w], lr, cfg.momentum);
                sgd_nesterov_step(net.biases[w], grads.biases[w], opt.b_vel[w], lr, cfg.momentum);
            }
            ++step;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / n;
        stats.lr_end = lr;
        if (val_set) stats.val_accuracy = deterministic_accuracy(net, *val_set, cfg.batch_size);
        result.epochs.push_back(stats);
    }
    result.steps = step;
    return result;
}

}  // namespace sdc
