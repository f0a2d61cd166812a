#ifndef ALIGN_NET_HPP
#define ALIGN_NET_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "align/groundtruth.hpp"
#include "align/signal.hpp"

namespace align {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    static Tensor zeros(std::vector<int> shape);
    size_t size() const { return data.size(); }
};

// Twin architecture: conv(3x3) -> ReLU -> 2x2 maxpool, twice, then a dense
// layer down to the embedding. Pooling uses ceil mode so odd extents keep
// their last partial window.
struct NetConfig {
    int input_h = 15;
    int input_w = 84;
    int conv1_filters = 16;
    int conv2_filters = 16;
    int embed_dim = 32;

    int conv1_h() const { return input_h - 2; }
    int conv1_w() const { return input_w - 2; }
    int pool1_h() const { return (conv1_h() + 1) / 2; }
    int pool1_w() const { return (conv1_w() + 1) / 2; }
    int conv2_h() const { return pool1_h() - 2; }
    int conv2_w() const { return pool1_w() - 2; }
    int pool2_h() const { return (conv2_h() + 1) / 2; }
    int pool2_w() const { return (conv2_w() + 1) / 2; }
    int flat() const { return conv2_filters * pool2_h() * pool2_w(); }

    void validate() const;  // throws if any stage collapses to zero
};

// Shared weights of one twin (both twins use the same set).
struct NetworkParams {
    NetConfig cfg;
    Tensor conv1_w, conv1_b;  // [f1,1,3,3], [f1]
    Tensor conv2_w, conv2_b;  // [f2,f1,3,3], [f2]
    Tensor dense_w, dense_b;  // [embed,flat], [embed]

    static NetworkParams init(const NetConfig& cfg, uint64_t seed);
    static NetworkParams zeros_like(const NetworkParams& p);

    // flat view over every weight and bias, fixed order
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
};

std::vector<double> forward(const NetworkParams& params, const Patch& patch);

double euclidean(std::span<const double> e1, std::span<const double> e2);

// L = (1-y)/2 * D^2 + y/2 * max(0, m - D)^2
double contrastive_loss(double d_w, int y, double margin);

struct PairGrad {
    NetworkParams grads;
    double loss;
    double d_w;
};

// Analytic gradients of the contrastive loss through both twins (shared
// weights, contributions summed). Subgradient 0 at ReLU and hinge kinks.
PairGrad backward(const NetworkParams& params, const Patch& p1, const Patch& p2, int y,
                  double margin);

struct PairSample {
    Patch a, b;
    int y;  // 0 similar, 1 dissimilar
};

struct AlignedSpecs {
    const Spectrogram* score_spec;
    const Spectrogram* perf_spec;
    const GroundTruth* gt;
};

// Balanced 50/50 positive/negative patch pairs. Positives pair a score
// frame with its ground-truth-aligned performance frame; negatives pair it
// with a frame whose true offset exceeds neg_min_offset seconds.
std::vector<PairSample> sample_pairs(const std::vector<AlignedSpecs>& data, int n, uint64_t seed,
                                     int context = 15, double neg_min_offset = 1.0);

struct TrainConfig {
    double margin = 1.0;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 10;
    uint64_t rng_seed = 0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<double> epoch_loss;
};

// Minibatch SGD with momentum; deterministic for a fixed seed. Throws if
// the mean epoch loss goes non-finite.
TrainResult train(const TrainConfig& cfg, const NetConfig& netcfg,
                  const std::vector<PairSample>& pairs);

// Model file: "SIAM", u32 version, u32 layer count, per layer u32 kind
// (0 conv, 1 dense), u32 rank, u32 dims, then weights and biases as f32 LE.
std::vector<uint8_t> save_params(const NetworkParams& params);

// Filter counts and embedding size come from the file; the caller supplies
// the input patch shape, which must be consistent with the stored dense
// layer.
NetworkParams load_params(std::span<const uint8_t> bytes, int input_h, int input_w);

} // namespace align

#endif
