#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "forward.hpp"
#include "network.hpp"

namespace sdc {

// Natural-log entropy of one probability vector; zero entries contribute 0.
double entropy_of(const double* probs, int n);

// Validating wrapper: entries must be non-negative and sum to 1 within 1e-5.
double predictive_entropy(const std::vector<double>& probs);

struct PredictiveSummary {
    Tensor mean_probs;                 // [n, classes], MC average
    std::vector<double> entropy;       // nats, one per input
    std::optional<Tensor> per_pass_probs;  // [K, n, classes] when retained
    int passes = 0;
    MaskPlan plan;
    std::uint64_t seed = 0;
};

// First layer index of the stochastic tail: the position of weight-bearing
// layer #lambda (0-based), so every non-weight layer between weight layers
// lambda-1 and lambda stays in the frozen prefix. lambda=0 freezes nothing;
// lambda=n_weight_layers freezes everything.
int split_boundary(const Network& net, int lambda_frozen);

// Materialized (prefix, tail) pair; running prefix then tail with
// deterministic plans reproduces the full deterministic forward.
struct SplitNetwork {
    Network prefix;
    Network tail;
    int boundary = 0;
};
SplitNetwork split_network(const Network& net, int lambda_frozen);

// K full stochastic passes, averaged in ascending pass order.
PredictiveSummary mc_predict_naive(const Network& net, const Tensor& x, int passes, const MaskPlan& plan,
                                   std::uint64_t seed, bool keep_passes = false);

// Runs the frozen prefix once, caches the boundary activations, then runs the
// stochastic tail K times. Bit-identical to mc_predict_naive because frozen
// layers are deterministic and mask streams are keyed by absolute layer index.
PredictiveSummary select_dc_predict(const Network& net, const Tensor& x, int passes, const MaskPlan& plan,
                                    std::uint64_t seed, bool keep_passes = false);

// Rotation about the image center, nearest-neighbor resampling, zero fill.
Tensor rotate_image(const Tensor& image, double angle_degrees);
Tensor rotate_batch(const Tensor& images, double angle_degrees);

struct RotationPoint {
    double angle = 0.0;
    double mean_entropy = 0.0;
    double std_entropy = 0.0;  // population standard deviation
};

std::vector<RotationPoint> rotation_entropy_sweep(const Network& net, const Tensor& images,
                                                  const std::vector<double>& angles, int passes,
                                                  const MaskPlan& plan, std::uint64_t seed);

}  // namespace sdc
