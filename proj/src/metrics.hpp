#pragma once

#include <cstdint>
#include <vector>

#include "mc.hpp"
#include "network.hpp"

namespace sdc {

// Cost conventions: multiply-accumulate = 2 flops, so dense is 2*in*out and
// conv2d is 2*kh*kw*c_in*c_out*oh*ow; relu/maxpool2/flatten/softmax cost one
// op per output element. Costs are analytic, derived from layer shapes.
long long layer_cost(const LayerSpec& layer, const std::vector<int>& output_shape);

// Per-layer costs for the whole network, in layer order.
std::vector<long long> layer_costs(const Network& net);

struct FlopsReport {
    std::vector<long long> per_layer_flops;
    int n_weight_layers = 0;
    int lambda_frozen = 0;
    int passes = 0;
    long long frozen_total = 0;
    long long stochastic_total = 0;
    long long grand_total = 0;  // frozen_total + passes * stochastic_total
};

// Splits costs at the frozen/stochastic boundary for lambda and prices K
// passes: the prefix is paid once, the tail K times.
FlopsReport total_flops(const Network& net, int lambda_frozen, int passes);

// Abstract cost model: n_layers weight layers of uniform cost each.
FlopsReport uniform_flops(int n_layers, long long cost_per_layer, int lambda_frozen, int passes);

// Fraction of inputs whose argmax matches the label; argmax ties break toward
// the lowest class index.
double accuracy(const Tensor& mean_probs, const std::vector<int>& labels);

// Mean negative natural log of the probability assigned to the true class,
// clamped at 1e-12.
double nll(const Tensor& mean_probs, const std::vector<int>& labels);

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

// Positive class = OOD, score = entropy, classification rule score >= t.
// First point is a sentinel above every score (0,0); last is (1,1).
std::vector<RocPoint> roc_curve(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

// Normalized Mann-Whitney statistic with half credit for ties; equals the
// trapezoidal area under roc_curve of the same scores.
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

double trapezoid_area(const std::vector<RocPoint>& curve);

struct OodReport {
    double id_mean_entropy = 0.0;
    double ood_mean_entropy = 0.0;
    double auroc = 0.0;
    std::vector<RocPoint> threshold_curve;
    std::vector<double> id_entropies;
    std::vector<double> ood_entropies;
    int lambda_frozen = 0;
    double drop_prob = 0.0;
    int passes = 0;
    std::uint64_t seed = 0;
};

OodReport ood_evaluate(const Network& net, const Tensor& id_batch, const Tensor& ood_batch, int passes,
                       const MaskPlan& plan, std::uint64_t seed);

}  // namespace sdc
