#ifndef GPR_FEATNET_HPP
#define GPR_FEATNET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gpr/bscan.hpp"

namespace gpr {

// Training recipe: plain SGD, no momentum or weight decay.
struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int max_epochs = 10;
    std::uint64_t seed = 1;
    int input_rows = 128; // windows are resampled to this grid, rows by
    int input_cols = 300; // linear interpolation, before standardization
};

struct FeatureVector {
    std::vector<double> values;
    std::string source; // window identifier
};

// Small convolutional feature extractor:
//   4 x [conv 3x3 (same) -> ReLU -> maxpool 2x2], widths 8,16,32,64,
//   global average pool, affine 64 -> D embedding,
//   affine D -> 2 head + softmax (training only).
// Parameters live in one flat vector; the scalar type is templated so the
// finite-difference tests can run the exact same network in double.
template <class T>
class ConvNet {
public:
    static constexpr int kEmbedDim = 128;
    static constexpr std::array<int, 4> kChannels = {8, 16, 32, 64};

    ConvNet(int input_rows, int input_cols);
    static ConvNet random_init(int input_rows, int input_cols, std::uint64_t seed);

    int input_rows() const { return rows_; }
    int input_cols() const { return cols_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    // flat-vector offsets of each parameter blob, in layer order:
    // conv1 w/b, conv2 w/b, conv3 w/b, conv4 w/b, fc w/b, head w/b
    static std::vector<std::size_t> blob_sizes();

private:
    int rows_, cols_;
    std::vector<T> params_;
};

struct ForwardResult {
    std::vector<double> embedding; // D values
    std::array<double, 2> probs;   // softmax over the head logits
};

// Resample to the net's input grid, standardize to zero mean / unit std
// (guard eps 1e-8), run the net. Deterministic; rejects non-finite input.
template <class T>
ForwardResult forward(const ConvNet<T>& net, const BScan& img);

// Mean binary cross-entropy of p = P(class 1) against labels in {0,1};
// probabilities are clamped to [1e-7, 1 - 1e-7].
double bce_loss(const std::vector<double>& probs, const std::vector<int>& labels);

// Mean loss over a batch; when grad != nullptr it receives dLoss/dparams
// (same layout/length as net.params()); when probs_out != nullptr it
// receives P(class 1) per sample.
template <class T>
double batch_loss_and_grad(const ConvNet<T>& net, const std::vector<const BScan*>& batch,
                           const std::vector<int>& labels, std::vector<T>* grad,
                           std::vector<double>* probs_out);
template <class T>
double batch_loss_and_grad(const ConvNet<T>& net, const std::vector<const BScan*>& batch,
                           const std::vector<int>& labels, std::vector<T>* grad);

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> curve;
    double seconds = 0.0;
};

// Plain SGD over shuffled mini-batches. Requires both classes present.
// Bit-reproducible for a fixed (net, corpus, cfg) regardless of RS_THREADS.
template <class T>
TrainResult train(ConvNet<T>& net, const std::vector<BScan>& images,
                  const std::vector<int>& labels, const TrainConfig& cfg);

// The same loop run on a generic (unfused) corpus; produces the
// "not fine-tuned" baseline extractor.
template <class T>
TrainResult pretrain_generic(ConvNet<T>& net, const std::vector<BScan>& images,
                             const std::vector<int>& labels, const TrainConfig& cfg);

// Head-free feature extraction, one vector per window, order preserved.
template <class T>
std::vector<FeatureVector> extract(const ConvNet<T>& net, const std::vector<BScan>& windows);

// Checkpoint: magic "FNET", version, geometry, per-blob layer manifest,
// then the parameters as little-endian f32.
void save_checkpoint(const ConvNet<float>& net, const std::string& path);
ConvNet<float> load_checkpoint(const std::string& path);

void write_loss_curve_csv(const TrainResult& result, const std::string& path);

}  // namespace gpr

#endif
