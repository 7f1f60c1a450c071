#include "metrics.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace sdc {

namespace {

long long element_count(const std::vector<int>& shape) {
    long long n = 1;
    for (int d : shape) n *= d;
    return n;
}

}  // namespace

long long layer_cost(const LayerSpec& layer, const std::vector<int>& output_shape) {
    switch (layer.kind) {
    case LayerKind::dense:
        if (layer.in_dim <= 0 || layer.out_dim <= 0) throw_config("dense layer shape unresolved");
        return 2LL * layer.in_dim * layer.out_dim;
    case LayerKind::conv2d: {
        if (layer.in_channels <= 0 || layer.out_channels <= 0) throw_config("conv layer shape unresolved");
        if (output_shape.size() != 3) throw_config("conv layer output shape unresolved");
        const long long oh = output_shape[1], ow = output_shape[2];
        return 2LL * layer.kernel_h * layer.kernel_w * layer.in_channels * layer.out_channels * oh * ow;
    }
    default:
        return element_count(output_shape);
    }
}

std::vector<long long> layer_costs(const Network& net) {
    auto shapes = activation_shapes(net.layers, net.input_shape);
    std::vector<long long> costs(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) costs[i] = layer_cost(net.layers[i], shapes[i]);
    return costs;
}

FlopsReport total_flops(const Network& net, int lambda_frozen, int passes) {
    if (passes < 1) throw_config("pass count must be >= 1, got " + std::to_string(passes));
    const int boundary = split_boundary(net, lambda_frozen);
    FlopsReport r;
    r.per_layer_flops = layer_costs(net);
    r.n_weight_layers = net.n_weight_layers();
    r.lambda_frozen = lambda_frozen;
    r.passes = passes;
    for (int i = 0; i < net.n_layers(); ++i) {
        if (i < boundary)
            r.frozen_total += r.per_layer_flops[static_cast<std::size_t>(i)];
        else
            r.stochastic_total += r.per_layer_flops[static_cast<std::size_t>(i)];
    }
    r.grand_total = r.frozen_total + static_cast<long long>(passes) * r.stochastic_total;
    return r;
}

FlopsReport uniform_flops(int n_layers, long long cost_per_layer, int lambda_frozen, int passes) {
    if (n_layers < 1) throw_config("uniform cost model needs at least one layer");
    if (cost_per_layer < 1) throw_config("uniform cost per layer must be positive");
    if (lambda_frozen < 0 || lambda_frozen > n_layers)
        throw_config("lambda_frozen must lie in [0," + std::to_string(n_layers) + "], got " +
                     std::to_string(lambda_frozen));
    if (passes < 1) throw_config("pass count must be >= 1, got " + std::to_string(passes));
    FlopsReport r;
    r.per_layer_flops.assign(static_cast<std::size_t>(n_layers), cost_per_layer);
    r.n_weight_layers = n_layers;
    r.lambda_frozen = lambda_frozen;
    r.passes = passes;
    r.frozen_total = cost_per_layer * lambda_frozen;
    r.stochastic_total = cost_per_layer * (n_layers - lambda_frozen);
    r.grand_total = r.frozen_total + static_cast<long long>(passes) * r.stochastic_total;
    return r;
}

namespace {

void check_labels(const Tensor& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2) throw_dimension("probability tensor must be [n,classes], got " + shape_str(probs.shape));
    if (static_cast<std::size_t>(probs.dim(0)) != labels.size())
        throw_data("probability rows (" + std::to_string(probs.dim(0)) + ") and labels (" +
                   std::to_string(labels.size()) + ") disagree");
    for (int y : labels)
        if (y < 0 || y >= probs.dim(1)) throw_data("label " + std::to_string(y) + " out of range");
}

}  // namespace

double accuracy(const Tensor& mean_probs, const std::vector<int>& labels) {
    check_labels(mean_probs, labels);
    const int n = mean_probs.dim(0), c = mean_probs.dim(1);
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const float* row = mean_probs.ptr() + static_cast<std::size_t>(i) * c;
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (row[j] > row[best]) best = j;
        if (best == labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return n == 0 ? 0.0 : static_cast<double>(hits) / n;
}

double nll(const Tensor& mean_probs, const std::vector<int>& labels) {
    check_labels(mean_probs, labels);
    const int n = mean_probs.dim(0);
    if (n == 0) return 0.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = mean_probs.at({i, labels[static_cast<std::size_t>(i)]});
        total -= std::log(std::max(p, 1e-12));
    }
    return total / n;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty()) throw_data("roc_curve needs non-empty score sets");
    std::vector<double> thresholds;
    thresholds.reserve(id_scores.size() + ood_scores.size());
    thresholds.insert(thresholds.end(), id_scores.begin(), id_scores.end());
    thresholds.insert(thresholds.end(), ood_scores.begin(), ood_scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<double> id_desc = id_scores, ood_desc = ood_scores;
    std::sort(id_desc.begin(), id_desc.end(), std::greater<>());
    std::sort(ood_desc.begin(), ood_desc.end(), std::greater<>());

    const double n_ood = static_cast<double>(ood_scores.size());
    const double n_id = static_cast<double>(id_scores.size());
    std::vector<RocPoint> curve;
    curve.reserve(thresholds.size() + 1);
    curve.push_back({thresholds.front() + 1.0, 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (double t : thresholds) {
        while (tp < ood_desc.size() && ood_desc[tp] >= t) ++tp;
        while (fp < id_desc.size() && id_desc[fp] >= t) ++fp;
        curve.push_back({t, static_cast<double>(tp) / n_ood, static_cast<double>(fp) / n_id});
    }
    return curve;
}

double trapezoid_area(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty()) throw_data("auroc needs non-empty score sets");
    // Midrank form of the Mann-Whitney statistic.
    struct Tagged {
        double score;
        bool ood;
    };
    std::vector<Tagged> all;
    all.reserve(id_scores.size() + ood_scores.size());
    for (double s : id_scores) all.push_back({s, false});
    for (double s : ood_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

    double rank_sum_ood = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (all[k].ood) rank_sum_ood += midrank;
        i = j;
    }
    const double n_ood = static_cast<double>(ood_scores.size());
    const double n_id = static_cast<double>(id_scores.size());
    const double u = rank_sum_ood - n_ood * (n_ood + 1.0) / 2.0;
    return u / (n_id * n_ood);
}

OodReport ood_evaluate(const Network& net, const Tensor& id_batch, const Tensor& ood_batch, int passes,
                       const MaskPlan& plan, std::uint64_t seed) {
    std::vector<int> expect = net.input_shape;
    expect.insert(expect.begin(), 0);
    auto check = [&](const Tensor& batch, const char* which) {
        if (batch.rank() != static_cast<int>(expect.size()))
            throw_data(std::string(which) + " batch rank " + std::to_string(batch.rank()) +
                       " does not fit network input " + shape_str(net.input_shape));
        for (std::size_t d = 1; d < expect.size(); ++d)
            if (batch.dim(static_cast<int>(d)) != expect[d])
                throw_data(std::string(which) + " batch shape " + shape_str(batch.shape) +
                           " does not fit network input " + shape_str(net.input_shape));
    };
    check(id_batch, "id");
    check(ood_batch, "ood");

    OodReport r;
    r.lambda_frozen = plan.lambda_frozen;
    r.drop_prob = plan.drop_prob;
    r.passes = passes;
    r.seed = seed;

    PredictiveSummary id = select_dc_predict(net, id_batch, passes, plan, seed);
    PredictiveSummary ood = select_dc_predict(net, ood_batch, passes, plan, seed);
    r.id_entropies = id.entropy;
    r.ood_entropies = ood.entropy;
    auto mean = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return v.empty() ? 0.0 : m / static_cast<double>(v.size());
    };
    r.id_mean_entropy = mean(r.id_entropies);
    r.ood_mean_entropy = mean(r.ood_entropies);
    r.auroc = auroc(r.id_entropies, r.ood_entropies);
    r.threshold_curve = roc_curve(r.id_entropies, r.ood_entropies);
    return r;
}

}  // namespace sdc
