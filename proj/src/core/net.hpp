#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace amfm {

enum class Activation { selu, sigmoid, tanh_act };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

struct LayerSpec {
    enum class Kind { conv, pool, flatten, dense };
    Kind kind = Kind::dense;
    int maps = 0;        // conv
    int kernel = 0;      // conv/pool
    int stride = 1;      // conv/pool
    int units = 0;       // dense
    bool pool_max = true;
    Activation act = Activation::selu; // conv/dense
};

struct NetSpec {
    std::vector<int> input_dims; // {C,H,W} or {N}
    std::vector<LayerSpec> layers;
};

// Feed-forward net with a flat parameter vector. Tensors are row-major
// {C,H,W}; conv weights are [map][in_channel][ky][kx], dense weights
// [out][in]; biases follow each layer's weights in the flat vector.
class Net {
public:
    explicit Net(NetSpec spec); // shape-checks; parameters start at zero

    const NetSpec& spec() const { return spec_; }
    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<int>& output_dims() const { return output_dims_; }
    int input_size() const { return input_size_; }
    int output_size() const { return output_size_; }

    // Zero biases; weights from a seeded normal with std sqrt(1/fan_in).
    void init_params(std::uint64_t seed);

    std::vector<double> forward(const std::vector<double>& input) const;

    // Accumulates dLoss/dparams into grad (same length as params) and returns
    // the sample's outputs; loss = mean over outputs of (y - t)^2.
    std::vector<double> forward_backward(const std::vector<double>& input,
                                         const std::vector<double>& target,
                                         std::vector<double>& grad) const;

private:
    friend void save_net(const Net& net, const std::string& path);

    NetSpec spec_;
    std::vector<int> output_dims_;
    int input_size_ = 0;
    int output_size_ = 0;
    std::vector<double> params_;

    struct LayerPlan {
        LayerSpec spec;
        std::vector<int> in_dims;
        std::vector<int> out_dims;
        std::size_t weight_offset = 0;
        std::size_t weight_count = 0;
        std::size_t bias_offset = 0;
        std::size_t bias_count = 0;
        std::size_t fan_in = 0;
    };
    std::vector<LayerPlan> plan_;
};

struct TrainConfig {
    int epochs = 80;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::string optimizer = "adam"; // adam | sgd
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t rng_seed = 0;
    bool shuffle = true;
    int threads = 1;
};

struct History {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_auc;
    std::vector<double> val_auc;
};

// Flat-vector training samples; targets may be multi-dimensional.
struct SampleSet {
    int input_dim = 0;
    int target_dim = 0;
    std::vector<std::vector<float>> inputs;
    std::vector<std::vector<float>> targets;

    std::size_t count() const { return inputs.size(); }
};

struct MseResult {
    double value = 0.0;
    std::vector<double> gradient;
};

MseResult mse_loss(const std::vector<double>& pred, const std::vector<double>& target);

// One sample per block, canonical (video, frame, row, col) order.
SampleSet single_block_samples(const BlockDataset& ds);

// One sample per frame: inputs are the single-block net's 45 scores in grid
// order, targets the 45 overlap fractions.
SampleSet multi_block_samples(const Net& single_net, const BlockDataset& ds, int threads = 1);

NetSpec build_single_block_net(int channels, int pool_stride = 5);
NetSpec build_multi_block_net();
NetSpec build_lenet5_baseline();

// Mini-batch descent with per-epoch seeded shuffling. Train metrics come from
// the mini-batch forward passes; validation metrics from an end-of-epoch
// pass. AUC uses binarized targets; an epoch whose labels are single-class
// records 0.5. Pass an empty val set to skip validation (val columns 0).
History train(Net& net, const SampleSet& train_set, const SampleSet& val_set,
              const TrainConfig& config);

// Forward each block of the dataset through the net (scores in (0,1)).
std::vector<double> predict(const Net& net, const BlockDataset& ds, int threads = 1);

// Refined score per block, aligned with the dataset's block order: each
// frame's 45 single-block scores pass through the multi-block net together.
std::vector<double> refine_scores(const Net& net_single, const Net& net_multi,
                                  const BlockDataset& ds, int threads = 1);

// Single-block scores for one frame's 45 blocks refined by the multi-block net.
std::vector<double> frame_scores(const Net& net_single, const Net& net_multi,
                                 const std::vector<std::vector<float>>& frame_blocks);

void save_net(const Net& net, const std::string& path);
Net load_net(const std::string& path);

} // namespace amfm
